// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/corpus.hpp"
#include "jobmatch/embedding.hpp"
#include "jobmatch/encoder.hpp"
#include "jobmatch/error.hpp"
#include "jobmatch/forest.hpp"
#include "jobmatch/metrics.hpp"
#include "jobmatch/rng.hpp"
#include "jobmatch/siamese.hpp"
#include "jobmatch/tfidf.hpp"

namespace jobmatch::experiment {

enum class Representation { tfidf, encoder_frozen, encoder_finetuned_classifier, encoder_finetuned_regressor };
enum class Head { cosine, forest };

inline std::string_view to_string(Representation r) {
    switch (r) {
    case Representation::tfidf: return "tfidf";
    case Representation::encoder_frozen: return "encoder_frozen";
    case Representation::encoder_finetuned_classifier: return "encoder_finetuned_classifier";
    case Representation::encoder_finetuned_regressor: return "encoder_finetuned_regressor";
    }
    return "?";
}

inline std::string_view to_string(Head h) { return h == Head::cosine ? "cosine" : "forest"; }

inline std::optional<Representation> parse_representation(std::string_view s) {
    for (auto r : {Representation::tfidf, Representation::encoder_frozen, Representation::encoder_finetuned_classifier,
                   Representation::encoder_finetuned_regressor}) {
        if (s == to_string(r)) return r;
    }
    return std::nullopt;
}

inline std::optional<Head> parse_head(std::string_view s) {
    if (s == "cosine") return Head::cosine;
    if (s == "forest" || s == "rf") return Head::forest;
    return std::nullopt;
}

struct RunSpec {
    Representation representation = Representation::tfidf;
    Head head = Head::cosine;

    std::string id() const { return std::string(to_string(representation)) + "+" + std::string(to_string(head)); }

    /// Display name in the comparison table.
    std::string label() const {
        std::string r;
        switch (representation) {
        case Representation::tfidf: r = "TFIDF"; break;
        case Representation::encoder_frozen: r = "Encoder"; break;
        case Representation::encoder_finetuned_classifier: r = "SiameseClassifier"; break;
        case Representation::encoder_finetuned_regressor: r = "SiameseRegressor"; break;
        }
        return r + (head == Head::cosine ? "+Cosine" : "+RF");
    }

    bool operator==(const RunSpec&) const = default;
};

/// The eight runs in table order.
inline std::vector<RunSpec> all_runs() {
    using R = Representation;
    return {{R::encoder_frozen, Head::cosine},
            {R::tfidf, Head::cosine},
            {R::encoder_frozen, Head::forest},
            {R::tfidf, Head::forest},
            {R::encoder_finetuned_classifier, Head::cosine},
            {R::encoder_finetuned_classifier, Head::forest},
            {R::encoder_finetuned_regressor, Head::cosine},
            {R::encoder_finetuned_regressor, Head::forest}};
}

inline RunSpec parse_run(std::string_view s) {
    const auto plus = s.find('+');
    if (plus == std::string_view::npos) fail(ErrorKind::config, "run '" + std::string(s) + "' is not <representation>+<head>");
    const auto r = parse_representation(s.substr(0, plus));
    const auto h = parse_head(s.substr(plus + 1));
    if (!r || !h) fail(ErrorKind::config, "unknown run '" + std::string(s) + "'");
    return {*r, *h};
}

/// Significance groups: within each, every pair of runs is tested.
inline std::vector<std::vector<RunSpec>> significance_groups() {
    const auto runs = all_runs();
    return {{runs[0], runs[1]}, {runs[2], runs[3]}, {runs[4], runs[5], runs[6], runs[7]}};
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::uint64_t seed = 0;
    corpus::SyntheticCorpusSpec corpus;
    corpus::SplitFractions split;
    std::uint64_t split_seed = 0;
    std::size_t vocab_min_count = 1;
    std::size_t vocab_max_size = 0;
    std::size_t tfidf_dim = tfidf::kDefaultDim;
    encoder::EncoderConfig encoder;
    siamese::TrainingConfig training;
    forest::ForestConfig forest;
    forest::FeatureMode feature_mode = forest::FeatureMode::concat;
    std::vector<RunSpec> runs = all_runs();
    std::size_t bootstrap_resamples = 1000;
    double alpha = eval::kDefaultAlpha;
    std::size_t density_bins = 50;

    /// Derives every component seed from one master seed.
    void apply_seed(std::uint64_t s) {
        seed = s;
        corpus.seed = derive_seed(s, 1);
        split_seed = derive_seed(s, 2);
        encoder.seed = derive_seed(s, 3);
        training.seed = derive_seed(s, 4);
        forest.seed = derive_seed(s, 5);
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : c.runs) runs.push_back(r.id());
    nlohmann::json enc = c.encoder;
    enc.erase("vocab_size");
    return {{"seed", c.seed},
            {"corpus", c.corpus},
            {"split", {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}, {"seed", c.split_seed}}},
            {"vocabulary", {{"min_count", c.vocab_min_count}, {"max_size", c.vocab_max_size}}},
            {"tfidf", {{"dim", c.tfidf_dim}}},
            {"encoder", enc},
            {"training", c.training},
            {"forest", c.forest},
            {"feature_mode", to_string(c.feature_mode)},
            {"evaluation",
             {{"runs", runs}, {"bootstrap_resamples", c.bootstrap_resamples}, {"alpha", c.alpha}, {"density_bins", c.density_bins}}}};
}

/// Missing keys keep their defaults. A top-level "seed" re-derives all
/// component seeds first; explicit component seeds then override.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {"seed",   "corpus",   "split",  "vocabulary",   "tfidf",
                                                "encoder", "training", "forest", "feature_mode", "evaluation"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) fail(ErrorKind::config, "unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    try {
        c.apply_seed(j.value("seed", std::uint64_t{0}));
        if (j.contains("corpus")) {
            auto corpus_json = j.at("corpus");
            if (!corpus_json.contains("seed")) corpus_json["seed"] = c.corpus.seed;
            c.corpus = corpus_json.get<corpus::SyntheticCorpusSpec>();
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            c.split.train = s.value("train", c.split.train);
            c.split.validation = s.value("validation", c.split.validation);
            c.split.test = s.value("test", c.split.test);
            c.split_seed = s.value("seed", c.split_seed);
        }
        if (j.contains("vocabulary")) {
            c.vocab_min_count = j.at("vocabulary").value("min_count", c.vocab_min_count);
            c.vocab_max_size = j.at("vocabulary").value("max_size", c.vocab_max_size);
        }
        if (j.contains("tfidf")) c.tfidf_dim = j.at("tfidf").value("dim", c.tfidf_dim);
        if (j.contains("encoder")) {
            auto e = j.at("encoder");
            if (!e.contains("seed")) e["seed"] = c.encoder.seed;
            c.encoder = e.get<encoder::EncoderConfig>();
        }
        if (j.contains("training")) {
            auto t = j.at("training");
            if (!t.contains("seed")) t["seed"] = c.training.seed;
            c.training = t.get<siamese::TrainingConfig>();
        }
        if (j.contains("forest")) {
            auto f = j.at("forest");
            if (!f.contains("seed")) f["seed"] = c.forest.seed;
            c.forest = f.get<forest::ForestConfig>();
        }
        if (j.contains("feature_mode")) {
            const auto m = forest::parse_feature_mode(j.at("feature_mode").get<std::string>());
            if (!m) fail(ErrorKind::config, "unknown feature_mode");
            c.feature_mode = *m;
        }
        if (j.contains("evaluation")) {
            const auto& e = j.at("evaluation");
            if (e.contains("runs")) {
                c.runs.clear();
                for (const auto& r : e.at("runs")) c.runs.push_back(parse_run(r.get<std::string>()));
            }
            c.bootstrap_resamples = e.value("bootstrap_resamples", c.bootstrap_resamples);
            c.alpha = e.value("alpha", c.alpha);
            c.density_bins = e.value("density_bins", c.density_bins);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("invalid config: ") + e.what());
    }
    c.training.validate();
    c.forest.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Results

struct EvalReport {
    std::string run_id;
    std::string label;
    double roc_auc = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    double threshold = 0.0;
    std::size_t n_samples = 0;
    std::optional<std::string> failure;
};

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j = {{"run_id", r.run_id}, {"label", r.label}};
    if (r.failure) {
        j["failure"] = *r.failure;
        return j;
    }
    j.update({{"roc_auc", r.roc_auc},
              {"precision_macro", r.precision_macro},
              {"recall_macro", r.recall_macro},
              {"f1_macro", r.f1_macro},
              {"threshold", r.threshold},
              {"n_samples", r.n_samples}});
    return j;
}

struct RunOutcome {
    RunSpec spec;
    EvalReport report;
    std::vector<eval::ScoredPair> scored; ///< test split, input order
};

struct ExperimentResult {
    nlohmann::json config;
    std::vector<RunOutcome> runs;
    std::vector<eval::SignificanceResult> significance;
    std::vector<std::string> notes;
    std::map<std::string, siamese::TrainingReport> training;
    std::map<std::string, double> timings_seconds; ///< not part of the report
    std::map<std::string, siamese::SiameseModel> models; ///< encoders by representation name

    const RunOutcome* find(const RunSpec& spec) const {
        for (const auto& r : runs) {
            if (r.spec == spec) return &r;
        }
        return nullptr;
    }
};

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string pad(const std::string& s, std::size_t width, bool right = false) {
    if (s.size() >= width) return s;
    return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

inline std::vector<int> correctness(const std::vector<eval::ScoredPair>& scored, double threshold) {
    std::vector<int> c;
    c.reserve(scored.size());
    for (const auto& s : scored) c.push_back((s.score > threshold ? 1 : 0) == s.label ? 1 : 0);
    return c;
}

} // namespace detail

/// Runs marked significant: better than some tested alternative of its group.
inline std::set<std::string> significant_winners(const ExperimentResult& r) {
    std::set<std::string> winners;
    std::map<std::string, double> auc;
    for (const auto& run : r.runs) {
        if (!run.report.failure) auc[run.report.run_id] = run.report.roc_auc;
    }
    for (const auto& s : r.significance) {
        if (s.method != "student_t" || !s.significant) continue;
        winners.insert(auc[s.run_a] >= auc[s.run_b] ? s.run_a : s.run_b);
    }
    return winners;
}

inline std::string render_table(const ExperimentResult& r) {
    const auto winners = significant_winners(r);
    std::size_t w = 3;
    for (const auto& run : r.runs) w = std::max(w, run.spec.label().size());
    std::ostringstream out;
    out << detail::pad("#", 3) << "  " << detail::pad("Run", w) << "  " << detail::pad("ROC-AUC", 8, true) << "  "
        << detail::pad("P", 6, true) << "  " << detail::pad("R", 6, true) << "  " << detail::pad("F1", 6, true) << '\n';
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const auto& rep = r.runs[i].report;
        out << detail::pad(std::to_string(i + 1) + ".", 3) << "  " << detail::pad(rep.label, w) << "  ";
        if (rep.failure) {
            out << "FAILED: " << *rep.failure << '\n';
            continue;
        }
        const std::string auc = detail::fixed(rep.roc_auc, 4) + (winners.count(rep.run_id) ? "*" : " ");
        out << detail::pad(auc, 8, true) << "  " << detail::pad(detail::fixed(rep.precision_macro, 4), 6, true) << "  "
            << detail::pad(detail::fixed(rep.recall_macro, 4), 6, true) << "  "
            << detail::pad(detail::fixed(rep.f1_macro, 4), 6, true) << '\n';
    }
    return out.str();
}

inline std::string render_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "rank,run_id,label,roc_auc,precision_macro,recall_macro,f1_macro,threshold,n_samples,failure\n";
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const auto& rep = r.runs[i].report;
        out << i + 1 << ',' << rep.run_id << ',' << rep.label << ',';
        if (rep.failure) {
            out << ",,,,,," << '"' << *rep.failure << '"' << '\n';
            continue;
        }
        out << detail::fixed(rep.roc_auc, 6) << ',' << detail::fixed(rep.precision_macro, 6) << ','
            << detail::fixed(rep.recall_macro, 6) << ',' << detail::fixed(rep.f1_macro, 6) << ','
            << detail::fixed(rep.threshold, 2) << ',' << rep.n_samples << ",\n";
    }
    return out.str();
}

inline nlohmann::json to_json(const ExperimentResult& r) {
    nlohmann::json reports = nlohmann::json::array(), sig = nlohmann::json::array(), training = nlohmann::json::object();
    for (const auto& run : r.runs) reports.push_back(to_json(run.report));
    for (const auto& s : r.significance) sig.push_back(eval::to_json(s));
    for (const auto& [k, v] : r.training) training[k] = siamese::to_json(v);
    return {{"config", r.config}, {"runs", reports}, {"significance", sig}, {"training", training}, {"notes", r.notes}};
}

// ---------------------------------------------------------------------------
// Running the matrix

namespace detail {

using EmbeddingTable = std::map<std::string, std::vector<double>>;

inline std::vector<std::string> referenced_ids(const std::vector<corpus::LabeledPair>& a,
                                               const std::vector<corpus::LabeledPair>& b) {
    std::set<std::string> ids;
    for (const auto* part : {&a, &b}) {
        for (const auto& p : *part) {
            ids.insert(p.resume_id);
            ids.insert(p.vacancy_id);
        }
    }
    return {ids.begin(), ids.end()};
}

inline EmbeddingTable embed_all(const std::vector<std::string>& ids, const corpus::DocumentStore& store,
                                const std::function<std::vector<double>(const corpus::Document&)>& f) {
    EmbeddingTable t;
    for (const auto& id : ids) {
        const auto& doc = store.at(id);
        try {
            t.emplace(id, f(doc));
        } catch (const Error& e) {
            fail(e.kind(), "document '" + id + "': " + e.what());
        }
    }
    return t;
}

} // namespace detail

/// Fits the text models on the training documents, trains the requested
/// encoders, scores the test split for every run and tests significance
/// within groups. A failing run is reported with its error, not thrown.
inline ExperimentResult run_experiment_matrix(const corpus::DocumentStore& store, const corpus::DatasetSplit& split,
                                              const ExperimentConfig& config) {
    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t) { return std::chrono::duration<double>(clock::now() - t).count(); };

    ExperimentResult result;
    result.config = to_json(config);
    if (config.runs.empty()) return result;
    if (split.train.empty()) fail(ErrorKind::training, "experiment: training split is empty");
    if (split.test.empty()) fail(ErrorKind::input, "experiment: test split is empty");

    // Note on leakage: the split is over pairs, so documents recur across parts.
    {
        std::set<std::string> train_vac;
        for (const auto& p : split.train) train_vac.insert(p.vacancy_id);
        std::size_t shared = 0;
        for (const auto& p : split.test) shared += train_vac.count(p.vacancy_id);
        result.notes.push_back(std::to_string(shared) + " of " + std::to_string(split.test.size()) +
                               " test pairs have a vacancy that also occurs in training pairs");
    }

    std::set<Representation> needed;
    for (const auto& r : config.runs) needed.insert(r.representation);
    const auto ids = detail::referenced_ids(split.train, split.test);

    std::set<std::string> train_doc_ids;
    for (const auto& p : split.train) {
        train_doc_ids.insert(p.resume_id);
        train_doc_ids.insert(p.vacancy_id);
    }
    std::vector<const corpus::Document*> train_docs;
    for (const auto& id : train_doc_ids) train_docs.push_back(&store.at(id));

    std::map<Representation, detail::EmbeddingTable> tables;
    std::map<Representation, std::string> failures;
    auto guarded = [&](Representation r, auto&& body) {
        const auto t0 = clock::now();
        try {
            body();
        } catch (const Error& e) {
            failures[r] = std::string(jobmatch::to_string(e.kind())) + ": " + e.what();
        }
        result.timings_seconds[std::string(to_string(r))] = seconds_since(t0);
    };

    if (needed.count(Representation::tfidf)) {
        guarded(Representation::tfidf, [&] {
            const auto model = tfidf::fit(train_docs, config.tfidf_dim);
            tables[Representation::tfidf] =
                detail::embed_all(ids, store, [&](const corpus::Document& d) { return model.transform(d).values; });
        });
    }

    const bool any_encoder = needed.count(Representation::encoder_frozen) ||
                             needed.count(Representation::encoder_finetuned_classifier) ||
                             needed.count(Representation::encoder_finetuned_regressor);
    if (any_encoder) {
        std::vector<std::string_view> texts;
        for (const auto* d : train_docs) texts.push_back(d->text);
        const auto vocab = textprep::Vocabulary::fit(texts, config.vocab_min_count, config.vocab_max_size);
        const siamese::SiameseModel frozen = siamese::make_model(vocab, config.encoder);
        const auto pooling = config.training.pooling;
        auto encode_with = [&](const siamese::SiameseModel& m) {
            return detail::embed_all(ids, store, [&](const corpus::Document& d) {
                return encoder::to_std(siamese::embed_text(m, d.text, pooling));
            });
        };
        if (needed.count(Representation::encoder_frozen)) {
            guarded(Representation::encoder_frozen, [&] {
                tables[Representation::encoder_frozen] = encode_with(frozen);
                result.models.emplace(std::string(to_string(Representation::encoder_frozen)), frozen);
            });
        }
        for (auto [rep, objective] : {std::pair{Representation::encoder_finetuned_classifier, siamese::Objective::classification},
                                      std::pair{Representation::encoder_finetuned_regressor, siamese::Objective::regression}}) {
            if (!needed.count(rep)) continue;
            guarded(rep, [&] {
                auto tc = config.training;
                tc.objective = objective;
                auto trained = siamese::train(frozen, split, store, tc);
                result.training.emplace(std::string(to_string(rep)), trained.report);
                tables[rep] = encode_with(trained.model);
                result.models.emplace(std::string(to_string(rep)), std::move(trained.model));
            });
        }
    }

    std::vector<int> test_labels;
    for (const auto& p : split.test) test_labels.push_back(p.label);

    for (const auto& spec : config.runs) {
        RunOutcome outcome;
        outcome.spec = spec;
        outcome.report.run_id = spec.id();
        outcome.report.label = spec.label();
        if (auto f = failures.find(spec.representation); f != failures.end()) {
            outcome.report.failure = f->second;
            result.runs.push_back(std::move(outcome));
            continue;
        }
        const auto t0 = clock::now();
        try {
            const auto& table = tables.at(spec.representation);
            std::vector<double> scores;
            scores.reserve(split.test.size());
            if (spec.head == Head::cosine) {
                for (const auto& p : split.test) scores.push_back(cosine_similarity(table.at(p.resume_id), table.at(p.vacancy_id)));
                outcome.report.threshold = 0.0;
            } else {
                std::vector<forest::PairFeatures> x;
                std::vector<int> y;
                for (const auto& p : split.train) {
                    x.push_back(forest::build_features(table.at(p.resume_id), table.at(p.vacancy_id), config.feature_mode));
                    y.push_back(p.label);
                }
                const auto model = forest::fit_forest(x, y, config.forest);
                for (const auto& p : split.test) {
                    scores.push_back(forest::predict_proba(
                        model, forest::build_features(table.at(p.resume_id), table.at(p.vacancy_id), config.feature_mode)));
                }
                outcome.report.threshold = 0.5;
            }
            outcome.report.roc_auc = eval::roc_auc(scores, test_labels);
            const auto prf = eval::macro_prf(scores, test_labels, outcome.report.threshold);
            outcome.report.precision_macro = prf.precision;
            outcome.report.recall_macro = prf.recall;
            outcome.report.f1_macro = prf.f1;
            outcome.report.n_samples = scores.size();
            for (std::size_t i = 0; i < scores.size(); ++i) {
                outcome.scored.push_back({split.test[i].resume_id, split.test[i].vacancy_id, scores[i], test_labels[i], spec.id()});
            }
        } catch (const Error& e) {
            outcome.report.failure = std::string(jobmatch::to_string(e.kind())) + ": " + e.what();
        }
        result.timings_seconds[spec.id()] = seconds_since(t0);
        result.runs.push_back(std::move(outcome));
    }

    // Pairwise tests within each group, over runs that finished.
    for (const auto& group : significance_groups()) {
        std::vector<const RunOutcome*> present;
        for (const auto& spec : group) {
            const auto* r = result.find(spec);
            if (r && !r->report.failure) present.push_back(r);
        }
        for (std::size_t a = 0; a < present.size(); ++a) {
            for (std::size_t b = a + 1; b < present.size(); ++b) {
                const auto& ra = *present[a];
                const auto& rb = *present[b];
                const auto ca = detail::correctness(ra.scored, ra.report.threshold);
                const auto cb = detail::correctness(rb.scored, rb.report.threshold);
                const std::vector<double> da(ca.begin(), ca.end()), db(cb.begin(), cb.end());
                try {
                    auto t = eval::t_test_independent(da, db, config.alpha);
                    t.run_a = ra.report.run_id;
                    t.run_b = rb.report.run_id;
                    result.significance.push_back(t);
                } catch (const Error& e) {
                    result.notes.push_back("t-test " + ra.report.run_id + " vs " + rb.report.run_id + " skipped: " + e.what());
                }
                if (config.bootstrap_resamples >= 2) {
                    const auto sa = eval::scores_of(ra.scored);
                    const auto sb = eval::scores_of(rb.scored);
                    auto bt = eval::bootstrap_auc_test(sa, sb, test_labels, config.bootstrap_resamples,
                                                       derive_seed(config.seed, 0xB00 + result.significance.size()),
                                                       config.alpha);
                    bt.run_a = ra.report.run_id;
                    bt.run_b = rb.report.run_id;
                    result.significance.push_back(bt);
                }
            }
        }
    }
    return result;
}

} // namespace jobmatch::experiment
