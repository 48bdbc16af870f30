// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jobmatch/corpus.hpp"
#include "jobmatch/error.hpp"
#include "jobmatch/experiment.hpp"
#include "jobmatch/metrics.hpp"
#include "jobmatch/retrieval.hpp"
#include "jobmatch/siamese.hpp"
#include "jobmatch/tfidf.hpp"

namespace jobmatch::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kDataDirEnv = "JOBMATCH_DATA_DIR";

/// Relative paths are taken against $JOBMATCH_DATA_DIR when it is set.
inline std::string resolve(const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    const char* base = std::getenv(kDataDirEnv);
    if (!base || !*base) return path;
    return (fs::path(base) / path).string();
}

namespace detail {

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(resolve(path));
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, "'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_text(const std::string& path, const std::string& text) {
    const auto p = fs::path(resolve(path));
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    out << text;
    if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

inline void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

inline void ensure_dir(const std::string& dir) { fs::create_directories(resolve(dir)); }

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Options every subcommand takes.
struct Common {
    std::optional<std::uint64_t> seed;
    std::string config_path;

    void attach(CLI::App* app) {
        app->add_option("--seed", seed, "Master seed; derives every component seed");
        app->add_option("--config", config_path, "Experiment config (JSON)");
    }

    experiment::ExperimentConfig load() const {
        nlohmann::json j = config_path.empty() ? nlohmann::json::object() : read_json(config_path);
        if (!j.is_object()) fail(ErrorKind::config, "config must be a JSON object");
        if (seed) j["seed"] = *seed;
        return experiment::experiment_config_from_json(j);
    }
};

inline corpus::DocumentStore load_documents(const std::string& path, const std::string& format = "jsonl") {
    corpus::DocumentFormat f = corpus::DocumentFormat::jsonl;
    if (format == "tsv") {
        f = corpus::DocumentFormat::tsv;
    } else if (format != "jsonl") {
        fail(ErrorKind::config, "unknown document format '" + format + "'");
    }
    return corpus::ingest_documents(resolve(path), f);
}

inline std::vector<corpus::LabeledPair> load_pairs(const std::string& path) { return corpus::read_pairs(resolve(path)); }

inline corpus::DatasetSplit load_split(const std::string& dir) {
    corpus::DatasetSplit s;
    s.train = load_pairs(join(dir, "train.jsonl"));
    if (fs::exists(resolve(join(dir, "validation.jsonl")))) s.validation = load_pairs(join(dir, "validation.jsonl"));
    s.test = load_pairs(join(dir, "test.jsonl"));
    return s;
}

inline std::vector<std::string_view> train_texts(const corpus::DocumentStore& docs, const std::vector<corpus::LabeledPair>& train) {
    std::set<std::string> ids;
    for (const auto& p : train) {
        ids.insert(p.resume_id);
        ids.insert(p.vacancy_id);
    }
    std::vector<std::string_view> texts;
    for (const auto& id : ids) texts.push_back(docs.at(id).text);
    return texts;
}

/// Text embedder from either a siamese checkpoint or a tf-idf model.
struct TextEmbedder {
    std::function<std::vector<double>(std::string_view)> embed;
    std::size_t dim = 0;
    Producer producer = Producer::tfidf;
    std::optional<PoolingStrategy> pooling;
};

inline TextEmbedder make_embedder(const std::string& checkpoint, const std::string& tfidf_path, PoolingStrategy pooling) {
    if (checkpoint.empty() == tfidf_path.empty()) fail(ErrorKind::usage, "give exactly one of --checkpoint or --tfidf");
    TextEmbedder e;
    if (!tfidf_path.empty()) {
        auto model = std::make_shared<tfidf::TfidfModel>(tfidf::TfidfModel::from_json(read_json(tfidf_path)));
        e.dim = model->dim();
        e.embed = [model](std::string_view text) { return model->transform_text(text); };
        return e;
    }
    auto ckpt = std::make_shared<siamese::Checkpoint>(siamese::load_checkpoint(resolve(checkpoint)));
    e.dim = ckpt->model.encoder.config.embed_dim;
    e.producer = ckpt->model.encoder.producer;
    e.pooling = pooling;
    e.embed = [ckpt, pooling](std::string_view text) { return encoder::to_std(siamese::embed_text(ckpt->model, text, pooling)); };
    return e;
}

inline std::vector<std::string> read_sentences(const std::string& path) {
    std::ifstream in(resolve(path));
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return textprep::split_sentences(textprep::clean_text(ss.str()));
}

} // namespace detail

/// Parses and runs one subcommand. Failures are written to `err` as one JSON
/// object; the return value is the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Resume and vacancy matching: data, training, evaluation, retrieval", "jobmatch"};
    app.require_subcommand(1);
    std::function<void()> action;

    // gen-data
    Common gen_common;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
    gen_common.attach(gen);
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->callback([&] {
        action = [&] {
            const auto cfg = gen_common.load();
            const auto c = corpus::generate_synthetic_corpus(cfg.corpus);
            ensure_dir(gen_out);
            corpus::write_documents(resolve(join(gen_out, "documents.jsonl")), c.documents);
            corpus::write_pairs(resolve(join(gen_out, "pairs.jsonl")), c.pairs);
            nlohmann::json latent = nlohmann::json::object();
            for (const auto& [id, info] : c.latent) latent[id] = {{"topic", info.topic}, {"language", cfg.corpus.languages[info.language]}};
            write_json(join(gen_out, "latent.json"), latent);
            write_json(join(gen_out, "corpus_spec.json"), cfg.corpus);
            const auto stats = corpus::to_json(corpus::compute_stats(c.documents, c.pairs));
            write_json(join(gen_out, "stats.json"), stats);
            out << stats.dump() << "\n";
        };
    });

    // ingest
    Common ing_common;
    std::string ing_docs, ing_pairs, ing_format = "jsonl", ing_out;
    std::size_t ing_random = 0;
    auto* ing = app.add_subcommand("ingest", "Validate and normalize documents and pairs");
    ing_common.attach(ing);
    ing->add_option("--documents", ing_docs, "Documents file")->required();
    ing->add_option("--format", ing_format, "jsonl or tsv")->check(CLI::IsMember({"jsonl", "tsv"}));
    ing->add_option("--pairs", ing_pairs, "Labeled pairs (JSONL)");
    ing->add_option("--random-negatives", ing_random, "Random negatives to add");
    ing->add_option("--out", ing_out, "Output directory")->required();
    ing->callback([&] {
        action = [&] {
            const auto cfg = ing_common.load();
            const auto docs = load_documents(ing_docs, ing_format);
            std::vector<corpus::LabeledPair> pairs;
            if (!ing_pairs.empty()) pairs = load_pairs(ing_pairs);
            if (ing_random > 0) pairs = corpus::add_random_negatives(pairs, docs, ing_random, derive_seed(cfg.seed, 6));
            const auto stats = corpus::to_json(corpus::compute_stats(docs, pairs));
            ensure_dir(ing_out);
            corpus::write_documents(resolve(join(ing_out, "documents.jsonl")), docs);
            corpus::write_pairs(resolve(join(ing_out, "pairs.jsonl")), pairs);
            write_json(join(ing_out, "stats.json"), stats);
            out << stats.dump() << "\n";
        };
    });

    // split
    Common split_common;
    std::string split_pairs, split_out;
    auto* spl = app.add_subcommand("split", "Split pairs into train, validation and test");
    split_common.attach(spl);
    spl->add_option("--pairs", split_pairs, "Labeled pairs (JSONL)")->required();
    spl->add_option("--out", split_out, "Output directory")->required();
    spl->callback([&] {
        action = [&] {
            const auto cfg = split_common.load();
            const auto s = corpus::split_dataset(load_pairs(split_pairs), cfg.split, cfg.split_seed);
            ensure_dir(split_out);
            corpus::write_pairs(resolve(join(split_out, "train.jsonl")), s.train);
            corpus::write_pairs(resolve(join(split_out, "validation.jsonl")), s.validation);
            corpus::write_pairs(resolve(join(split_out, "test.jsonl")), s.test);
            const nlohmann::json summary = {
                {"train", s.train.size()}, {"validation", s.validation.size()}, {"test", s.test.size()}, {"seed", s.seed}};
            write_json(join(split_out, "split.json"), summary);
            out << summary.dump() << "\n";
        };
    });

    // fit-tfidf
    Common tf_common;
    std::string tf_docs, tf_train, tf_out;
    std::optional<std::size_t> tf_dim;
    auto* tf = app.add_subcommand("fit-tfidf", "Fit the tf-idf vectorizer on training documents");
    tf_common.attach(tf);
    tf->add_option("--documents", tf_docs, "Documents (JSONL)")->required();
    tf->add_option("--train", tf_train, "Training pairs; their documents are the fit set")->required();
    tf->add_option("--dim", tf_dim, "Vocabulary size (default from config)");
    tf->add_option("--out", tf_out, "Model output (JSON)")->required();
    tf->callback([&] {
        action = [&] {
            const auto cfg = tf_common.load();
            const auto docs = load_documents(tf_docs);
            const auto model = tfidf::fit_texts(train_texts(docs, load_pairs(tf_train)), tf_dim.value_or(cfg.tfidf_dim));
            write_json(tf_out, model.to_json());
            out << nlohmann::json{{"dim", model.dim()}}.dump() << "\n";
        };
    });

    // train
    Common tr_common;
    std::string tr_docs, tr_train, tr_valid, tr_objective, tr_out, tr_report;
    auto* tr = app.add_subcommand("train", "Fine-tune the siamese encoder");
    tr_common.attach(tr);
    tr->add_option("--documents", tr_docs, "Documents (JSONL)")->required();
    tr->add_option("--train", tr_train, "Training pairs (JSONL)")->required();
    tr->add_option("--validation", tr_valid, "Validation pairs (JSONL)");
    tr->add_option("--objective", tr_objective, "classification or regression")
        ->check(CLI::IsMember({"classification", "regression"}));
    tr->add_option("--out", tr_out, "Checkpoint output")->required();
    tr->add_option("--report", tr_report, "Training report output (JSON)");
    tr->callback([&] {
        action = [&] {
            auto cfg = tr_common.load();
            if (!tr_objective.empty()) cfg.training.objective = *siamese::parse_objective(tr_objective);
            const auto docs = load_documents(tr_docs);
            corpus::DatasetSplit split;
            split.train = load_pairs(tr_train);
            if (!tr_valid.empty()) split.validation = load_pairs(tr_valid);
            const auto vocab = textprep::Vocabulary::fit(train_texts(docs, split.train), cfg.vocab_min_count, cfg.vocab_max_size);
            auto result = siamese::train(siamese::make_model(vocab, cfg.encoder), split, docs, cfg.training);
            siamese::save_checkpoint(resolve(tr_out), result.model, cfg.training);
            const auto report = siamese::to_json(result.report);
            if (!tr_report.empty()) write_json(tr_report, report);
            err << "training wall time: " << result.report.wall_time_seconds << " s\n";
            out << report.dump() << "\n";
        };
    });

    // evaluate
    Common ev_common;
    std::string ev_docs, ev_split, ev_out;
    std::optional<std::string> ev_runs;
    auto* ev = app.add_subcommand("evaluate", "Run the experiment matrix and write reports");
    ev_common.attach(ev);
    ev->add_option("--documents", ev_docs, "Documents (JSONL)")->required();
    ev->add_option("--split-dir", ev_split, "Directory with train/validation/test.jsonl")->required();
    ev->add_option("--runs", ev_runs, "Comma-separated run ids (default: config)");
    ev->add_option("--out", ev_out, "Output directory")->required();
    ev->callback([&] {
        action = [&] {
            auto cfg = ev_common.load();
            if (ev_runs) {
                cfg.runs.clear();
                std::stringstream ss(*ev_runs);
                for (std::string item; std::getline(ss, item, ',');) {
                    if (!item.empty()) cfg.runs.push_back(experiment::parse_run(item));
                }
            }
            const auto docs = load_documents(ev_docs);
            const auto split = load_split(ev_split);
            const auto result = experiment::run_experiment_matrix(docs, split, cfg);
            ensure_dir(ev_out);
            write_json(join(ev_out, "report.json"), experiment::to_json(result));
            const auto table = experiment::render_table(result);
            write_text(join(ev_out, "table.txt"), table);
            write_text(join(ev_out, "table.csv"), experiment::render_csv(result));
            std::string scores = "run_id,resume_id,vacancy_id,label,score\n";
            for (const auto& run : result.runs) {
                for (const auto& s : run.scored) {
                    scores += s.run_id + "," + s.resume_id + "," + s.vacancy_id + "," + std::to_string(s.label) + "," +
                              format_double(s.score) + "\n";
                }
            }
            write_text(join(ev_out, "scores.csv"), scores);
            for (const auto& [name, secs] : result.timings_seconds) err << "time " << name << ": " << secs << " s\n";
            out << table;
        };
    });

    // score
    Common sc_common;
    std::string sc_ckpt, sc_tfidf, sc_docs, sc_resume, sc_vacancy, sc_pairs;
    auto* sc = app.add_subcommand("score", "Score resume-vacancy pairs by cosine similarity");
    sc_common.attach(sc);
    sc->add_option("--checkpoint", sc_ckpt, "Siamese checkpoint");
    sc->add_option("--tfidf", sc_tfidf, "Tf-idf model (JSON)");
    sc->add_option("--documents", sc_docs, "Documents (JSONL)")->required();
    sc->add_option("--resume", sc_resume, "Resume id");
    sc->add_option("--vacancy", sc_vacancy, "Vacancy id");
    sc->add_option("--pairs", sc_pairs, "Pairs file (JSONL) instead of one pair");
    sc->callback([&] {
        action = [&] {
            const auto cfg = sc_common.load();
            const auto emb = make_embedder(sc_ckpt, sc_tfidf, cfg.training.pooling);
            const auto docs = load_documents(sc_docs);
            std::vector<corpus::LabeledPair> pairs;
            if (!sc_pairs.empty()) {
                pairs = load_pairs(sc_pairs);
            } else {
                if (sc_resume.empty() || sc_vacancy.empty()) fail(ErrorKind::usage, "give --pairs or both --resume and --vacancy");
                pairs.push_back({sc_resume, sc_vacancy, 0, corpus::LabelSource::consultant_negative});
            }
            for (const auto& p : pairs) {
                const auto u = emb.embed(docs.at(p.resume_id).text);
                const auto v = emb.embed(docs.at(p.vacancy_id).text);
                out << nlohmann::json{{"resume_id", p.resume_id}, {"vacancy_id", p.vacancy_id}, {"score", cosine_similarity(u, v)}}.dump()
                    << "\n";
            }
        };
    });

    // topk
    Common tk_common;
    std::string tk_ckpt, tk_tfidf, tk_docs, tk_index, tk_save, tk_vacancy, tk_text;
    std::size_t tk_k = 10;
    auto* tk = app.add_subcommand("topk", "Retrieve the best-matching resumes for a vacancy");
    tk_common.attach(tk);
    tk->add_option("--checkpoint", tk_ckpt, "Siamese checkpoint");
    tk->add_option("--tfidf", tk_tfidf, "Tf-idf model (JSON)");
    tk->add_option("--documents", tk_docs, "Documents (JSONL); resumes are indexed, vacancies queried");
    tk->add_option("--index", tk_index, "Load a saved index instead of building one");
    tk->add_option("--save-index", tk_save, "Write the built index here");
    tk->add_option("--vacancy", tk_vacancy, "Vacancy id to query");
    tk->add_option("--query-text", tk_text, "Free text to query");
    tk->add_option("--k", tk_k, "Number of results")->check(CLI::PositiveNumber);
    tk->callback([&] {
        action = [&] {
            const auto cfg = tk_common.load();
            const auto emb = make_embedder(tk_ckpt, tk_tfidf, cfg.training.pooling);
            std::optional<corpus::DocumentStore> docs;
            if (!tk_docs.empty()) docs = load_documents(tk_docs);
            retrieval::EmbeddingIndex index;
            if (!tk_index.empty()) {
                index = retrieval::EmbeddingIndex::load(resolve(tk_index));
            } else {
                if (!docs) fail(ErrorKind::usage, "give --documents or --index");
                std::vector<corpus::Document> resumes;
                for (const auto& d : *docs) {
                    if (d.role == corpus::Role::resume) resumes.push_back(d);
                }
                index = retrieval::index_build(
                    resumes, [&](const corpus::Document& d) { return DocumentEmbedding{emb.embed(d.text), emb.producer, emb.pooling}; },
                    emb.dim);
            }
            if (!tk_save.empty()) index.save(resolve(tk_save));
            std::vector<double> query;
            if (!tk_vacancy.empty()) {
                if (!docs) fail(ErrorKind::usage, "--vacancy needs --documents");
                query = emb.embed(docs->at(tk_vacancy).text);
            } else if (!tk_text.empty()) {
                query = emb.embed(tk_text);
            } else {
                if (!tk_save.empty()) return;
                fail(ErrorKind::usage, "give --vacancy or --query-text");
            }
            for (const auto& hit : retrieval::topk_query(index, query, tk_k)) {
                out << nlohmann::json{{"doc_id", hit.doc_id}, {"score", hit.score}}.dump() << "\n";
            }
        };
    });

    // heatmap
    Common hm_common;
    std::string hm_ckpt, hm_tfidf, hm_left, hm_right, hm_docs, hm_resume, hm_vacancy, hm_out;
    auto* hm = app.add_subcommand("heatmap", "Sentence-by-sentence cosine matrix between two texts");
    hm_common.attach(hm);
    hm->add_option("--checkpoint", hm_ckpt, "Siamese checkpoint");
    hm->add_option("--tfidf", hm_tfidf, "Tf-idf model (JSON)");
    hm->add_option("--left", hm_left, "Text file for rows");
    hm->add_option("--right", hm_right, "Text file for columns");
    hm->add_option("--documents", hm_docs, "Documents (JSONL), with --resume and --vacancy");
    hm->add_option("--resume", hm_resume, "Resume id for rows");
    hm->add_option("--vacancy", hm_vacancy, "Vacancy id for columns");
    hm->add_option("--out", hm_out, "CSV output")->required();
    hm->callback([&] {
        action = [&] {
            const auto cfg = hm_common.load();
            const auto emb = make_embedder(hm_ckpt, hm_tfidf, PoolingStrategy::mean_tokens);
            std::vector<std::string> left, right;
            if (!hm_docs.empty()) {
                const auto docs = load_documents(hm_docs);
                left = textprep::split_sentences(textprep::clean_text(docs.at(hm_resume).text));
                right = textprep::split_sentences(textprep::clean_text(docs.at(hm_vacancy).text));
            } else {
                if (hm_left.empty() || hm_right.empty()) fail(ErrorKind::usage, "give --left and --right, or --documents");
                left = read_sentences(hm_left);
                right = read_sentences(hm_right);
            }
            const auto h = eval::heatmap_export(left, right, [&](const std::string& a, const std::string& b) {
                return cosine_similarity(emb.embed(a), emb.embed(b));
            });
            write_text(hm_out, h.to_csv());
            out << nlohmann::json{{"rows", left.size()}, {"cols", right.size()}}.dump() << "\n";
            (void)cfg;
        };
    });

    // density
    Common de_common;
    std::string de_scores, de_run, de_out;
    std::optional<std::size_t> de_bins;
    auto* de = app.add_subcommand("density", "Per-label score histograms for one run");
    de_common.attach(de);
    de->add_option("--scores", de_scores, "scores.csv written by evaluate")->required();
    de->add_option("--run", de_run, "Run id")->required();
    de->add_option("--bins", de_bins, "Number of bins (default from config)");
    de->add_option("--out", de_out, "CSV output")->required();
    de->callback([&] {
        action = [&] {
            const auto cfg = de_common.load();
            std::ifstream in(resolve(de_scores));
            if (!in) fail(ErrorKind::io, "cannot open '" + de_scores + "'");
            const std::string run_id = experiment::parse_run(de_run).id();
            std::string line;
            std::getline(in, line);
            std::vector<double> scores;
            std::vector<int> labels;
            std::size_t line_no = 1;
            while (std::getline(in, line)) {
                ++line_no;
                std::vector<std::string> cols;
                std::stringstream ss(line);
                for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
                if (cols.size() != 5) fail(ErrorKind::input, "scores line " + std::to_string(line_no) + ": expected 5 columns");
                if (cols[0] != run_id) continue;
                labels.push_back(std::stoi(cols[3]));
                scores.push_back(std::stod(cols[4]));
            }
            if (scores.empty()) fail(ErrorKind::input, "no scores for run '" + de_run + "'");
            const auto h = eval::density_export(scores, labels, de_bins.value_or(cfg.density_bins));
            write_text(de_out, h.to_csv());
            out << nlohmann::json{{"bins", h.n_bins()}, {"samples", scores.size()}}.dump() << "\n";
        };
    });

    auto report = [&](std::string_view kind, const std::string& message) {
        err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
    };
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report("usage", e.what());
        return kExitUsage;
    }
    try {
        if (action) action();
    } catch (const Error& e) {
        report(to_string(e.kind()), e.what());
        return e.kind() == ErrorKind::usage || e.kind() == ErrorKind::config ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        report("internal", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<const char*> argv;
    argv.push_back("jobmatch");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace jobmatch::cli
