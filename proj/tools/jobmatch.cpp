// SPDX-License-Identifier: Apache-2.0
#include "jobmatch/cli.hpp"

int main(int argc, char** argv) { return jobmatch::cli::run_cli(argc, argv); }
