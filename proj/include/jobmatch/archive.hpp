// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/error.hpp"

namespace jobmatch::archive {

// File layout:
//   8-byte magic "JMARCH01"
//   u64 header length, header JSON (metadata + tensor manifest)
//   raw float64 payload of every tensor in manifest order
// Values are stored in native byte order; the header records it.

static_assert(std::endian::native == std::endian::little, "archive format assumes a little-endian host");

inline constexpr char kMagic[8] = {'J', 'M', 'A', 'R', 'C', 'H', '0', '1'};

struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
};

struct Archive {
    nlohmann::json meta;
    std::vector<std::string> order;
    std::map<std::string, Tensor> tensors;

    void add(const std::string& name, std::size_t rows, std::size_t cols, const double* values) {
        order.push_back(name);
        tensors[name] = Tensor{rows, cols, std::vector<double>(values, values + rows * cols)};
    }

    const Tensor& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) fail(ErrorKind::io, "archive: missing tensor '" + name + "'");
        return it->second;
    }
};

inline void write(std::ostream& out, const Archive& a) {
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& name : a.order) {
        const auto& t = a.tensors.at(name);
        manifest.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    }
    nlohmann::json header = {{"meta", a.meta}, {"tensors", manifest}, {"byte_order", "little"}};
    const std::string text = header.dump();
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& name : a.order) {
        const auto& t = a.tensors.at(name);
        out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) fail(ErrorKind::io, "archive: write failed");
}

inline Archive read(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::string(magic, 8) != std::string(kMagic, 8)) fail(ErrorKind::io, "archive: bad magic");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (std::uint64_t{1} << 32)) fail(ErrorKind::io, "archive: bad header length");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) fail(ErrorKind::io, "archive: truncated header");
    Archive a;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::io, std::string("archive: bad header: ") + e.what());
    }
    a.meta = header.at("meta");
    for (const auto& entry : header.at("tensors")) {
        Tensor t;
        t.rows = entry.at("rows").get<std::size_t>();
        t.cols = entry.at("cols").get<std::size_t>();
        t.data.resize(t.rows * t.cols);
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) fail(ErrorKind::io, "archive: truncated payload");
        const auto name = entry.at("name").get<std::string>();
        a.order.push_back(name);
        a.tensors.emplace(name, std::move(t));
    }
    return a;
}

} // namespace jobmatch::archive
