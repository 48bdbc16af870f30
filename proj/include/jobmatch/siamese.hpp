// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/archive.hpp"
#include "jobmatch/corpus.hpp"
#include "jobmatch/embedding.hpp"
#include "jobmatch/encoder.hpp"
#include "jobmatch/error.hpp"
#include "jobmatch/metrics.hpp"
#include "jobmatch/rng.hpp"
#include "jobmatch/textprep.hpp"

namespace jobmatch::siamese {

using encoder::EncoderState;
using encoder::Matrix;
using encoder::PreparedDocument;
using encoder::Vector;

enum class Objective { classification, regression };
enum class OptimizerKind { sgd, adam };

inline std::string_view to_string(Objective o) { return o == Objective::classification ? "classification" : "regression"; }
inline std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }

inline std::optional<Objective> parse_objective(std::string_view s) {
    if (s == "classification") return Objective::classification;
    if (s == "regression") return Objective::regression;
    return std::nullopt;
}

inline std::optional<OptimizerKind> parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    return std::nullopt;
}

struct TrainingConfig {
    Objective objective = Objective::regression;
    std::size_t epochs = 5;
    std::size_t batch_size = 4;
    double learning_rate = 2e-4;
    PoolingStrategy pooling = PoolingStrategy::mean_tokens;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (epochs < 1) fail(ErrorKind::config, "training: epochs must be >= 1");
        if (batch_size < 1) fail(ErrorKind::config, "training: batch_size must be >= 1");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorKind::config, "training: learning_rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail(ErrorKind::config, "training: betas must lie in [0, 1)");
        if (!(epsilon > 0.0)) fail(ErrorKind::config, "training: epsilon must be > 0");
    }
};

inline void to_json(nlohmann::json& j, const TrainingConfig& c) {
    j = {{"objective", to_string(c.objective)},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"pooling", to_string(c.pooling)},
         {"seed", c.seed},
         {"optimizer", to_string(c.optimizer)},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"epsilon", c.epsilon}};
}

inline void from_json(const nlohmann::json& j, TrainingConfig& c) {
    TrainingConfig d;
    const auto obj = j.value("objective", std::string(to_string(d.objective)));
    const auto parsed_obj = parse_objective(obj);
    if (!parsed_obj) fail(ErrorKind::config, "unknown objective '" + obj + "'");
    c.objective = *parsed_obj;
    const auto pool = j.value("pooling", std::string(to_string(d.pooling)));
    const auto parsed_pool = parse_pooling(pool);
    if (!parsed_pool) fail(ErrorKind::config, "unknown pooling '" + pool + "'");
    c.pooling = *parsed_pool;
    const auto opt = j.value("optimizer", std::string(to_string(d.optimizer)));
    const auto parsed_opt = parse_optimizer(opt);
    if (!parsed_opt) fail(ErrorKind::config, "unknown optimizer '" + opt + "'");
    c.optimizer = *parsed_opt;
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.seed = j.value("seed", d.seed);
    c.beta1 = j.value("beta1", d.beta1);
    c.beta2 = j.value("beta2", d.beta2);
    c.epsilon = j.value("epsilon", d.epsilon);
}

/// One encoder shared by both towers, a vocabulary, and the classification
/// head while training under that objective.
struct SiameseModel {
    textprep::Vocabulary vocab;
    EncoderState encoder;
    std::optional<Matrix> head; ///< 2 x 3*embed_dim
};

inline SiameseModel make_model(textprep::Vocabulary vocab, encoder::EncoderConfig config) {
    config.vocab_size = vocab.size();
    return {std::move(vocab), encoder::init_encoder(config), std::nullopt};
}

inline Matrix init_head(std::size_t embed_dim, std::uint64_t seed) {
    Rng rng(seed);
    const double sd = 1.0 / std::sqrt(3.0 * static_cast<double>(embed_dim));
    Matrix h(2, static_cast<Eigen::Index>(3 * embed_dim));
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal(0.0, sd);
    return h;
}

// ---------------------------------------------------------------------------
// Objectives

struct PairLoss {
    double loss = 0.0;
    Vector du, dv;
    Matrix dhead; ///< empty under the regression objective
};

namespace detail {

inline void require_same_dim(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) {
        fail(ErrorKind::shape, "embedding dims differ: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
}

// -log softmax(logits)[label] for two logits, without overflow.
inline double two_class_cross_entropy(double l0, double l1, int label) {
    const double margin = label == 1 ? l1 - l0 : l0 - l1;
    return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

} // namespace detail

inline PairLoss regression_loss_grad(const Vector& u, const Vector& v, int label) {
    detail::require_same_dim(u, v);
    PairLoss r;
    const double nu = u.norm(), nv = v.norm();
    r.du = Vector::Zero(u.size());
    r.dv = Vector::Zero(v.size());
    if (nu == 0.0 || nv == 0.0) {
        r.loss = static_cast<double>(label * label);
        return r;
    }
    const double c = u.dot(v) / (nu * nv);
    const double diff = c - label;
    r.loss = diff * diff;
    // dc/du = v / (|u||v|) - c u / |u|^2
    r.du = 2.0 * diff * (v / (nu * nv) - c * u / (nu * nu));
    r.dv = 2.0 * diff * (u / (nu * nv) - c * v / (nv * nv));
    return r;
}

inline double regression_loss(std::span<const double> u, std::span<const double> v, int label) {
    if (u.size() != v.size()) fail(ErrorKind::shape, "regression_loss: embedding dims differ");
    const double diff = cosine_similarity(u, v) - label;
    return diff * diff;
}

inline Vector pair_features(const Vector& u, const Vector& v) {
    detail::require_same_dim(u, v);
    Vector f(3 * u.size());
    f << u, v, (u - v).cwiseAbs();
    return f;
}

inline PairLoss classification_loss_grad(const Vector& u, const Vector& v, int label, const Matrix& head) {
    detail::require_same_dim(u, v);
    const auto d = u.size();
    if (head.rows() != 2 || head.cols() != 3 * d) {
        fail(ErrorKind::shape, "classification head must be 2 x " + std::to_string(3 * d));
    }
    const Vector f = pair_features(u, v);
    const Vector logits = head * f;
    PairLoss r;
    r.loss = detail::two_class_cross_entropy(logits(0), logits(1), label);
    const double p1 = 1.0 / (1.0 + std::exp(logits(0) - logits(1)));
    Vector dlogits(2);
    dlogits << (1.0 - p1) - (label == 0 ? 1.0 : 0.0), p1 - (label == 1 ? 1.0 : 0.0);
    r.dhead = dlogits * f.transpose();
    const Vector df = head.transpose() * dlogits;
    const Vector sign = (u - v).unaryExpr([](double x) { return double((x > 0) - (x < 0)); });
    const Vector dabs = df.tail(d).cwiseProduct(sign);
    r.du = df.head(d) + dabs;
    r.dv = df.segment(d, d) - dabs;
    return r;
}

inline double classification_loss(std::span<const double> u, std::span<const double> v, int label, const Matrix& head) {
    if (u.size() != v.size()) fail(ErrorKind::shape, "classification_loss: embedding dims differ");
    const Vector eu = Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size()));
    const Vector ev = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    return classification_loss_grad(eu, ev, label, head).loss;
}

/// Batch loss: mean over pairs.
template <class PerPair>
double mean_loss(std::size_t n, PerPair&& per_pair) {
    if (n == 0) fail(ErrorKind::empty_input, "loss over an empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += per_pair(i);
    return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Pair examples over prepared documents

struct PairExample {
    const PreparedDocument* resume = nullptr;
    const PreparedDocument* vacancy = nullptr;
    int label = 0;
};

/// Mean loss over `pairs`; when `grads` is given, also accumulates the
/// gradient of that mean into it (and into `dhead`).
inline double batch_loss(const SiameseModel& m, Objective objective, std::span<const PairExample> pairs,
                         EncoderState* grads, Matrix* dhead) {
    if (pairs.empty()) fail(ErrorKind::empty_input, "loss over an empty batch");
    if (objective == Objective::classification && !m.head) fail(ErrorKind::config, "classification objective needs a head");
    const double scale = 1.0 / static_cast<double>(pairs.size());
    double total = 0.0;
    for (const auto& p : pairs) {
        if (!grads) {
            const Vector u = encoder::embed(m.encoder, *p.resume);
            const Vector v = encoder::embed(m.encoder, *p.vacancy);
            total += objective == Objective::regression ? regression_loss_grad(u, v, p.label).loss
                                                        : classification_loss_grad(u, v, p.label, *m.head).loss;
            continue;
        }
        const auto tu = encoder::embed_traced(m.encoder, *p.resume);
        const auto tv = encoder::embed_traced(m.encoder, *p.vacancy);
        const PairLoss pl = objective == Objective::regression
                                ? regression_loss_grad(tu.embedding, tv.embedding, p.label)
                                : classification_loss_grad(tu.embedding, tv.embedding, p.label, *m.head);
        total += pl.loss;
        encoder::backward_embedding(m.encoder, *p.resume, tu, scale * pl.du, *grads);
        encoder::backward_embedding(m.encoder, *p.vacancy, tv, scale * pl.dv, *grads);
        if (dhead && pl.dhead.size()) *dhead += scale * pl.dhead;
    }
    return total * scale;
}

// ---------------------------------------------------------------------------
// Optimizers

class Optimizer {
public:
    Optimizer(const TrainingConfig& c, const SiameseModel& m) : config_(c) {
        if (c.optimizer == OptimizerKind::adam) {
            m1_ = encoder::zeros_like(m.encoder);
            m2_ = encoder::zeros_like(m.encoder);
            if (m.head) {
                hm1_ = Matrix::Zero(m.head->rows(), m.head->cols());
                hm2_ = hm1_;
            }
        }
    }

    void step(SiameseModel& m, const EncoderState& grads, const Matrix& dhead) {
        ++t_;
        const double lr = config_.learning_rate;
        if (config_.optimizer == OptimizerKind::sgd) {
            encoder::for_each_parameter([&](const std::string&, Matrix& p, const Matrix& g) { p -= lr * g; },
                                        m.encoder, grads);
            if (m.head) *m.head -= lr * dhead;
            return;
        }
        const double b1 = config_.beta1, b2 = config_.beta2, eps = config_.epsilon;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        auto update = [&](Matrix& p, const Matrix& g, Matrix& m1, Matrix& m2) {
            m1 = b1 * m1 + (1.0 - b1) * g;
            m2 = b2 * m2 + (1.0 - b2) * g.cwiseProduct(g);
            p.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
        };
        encoder::for_each_parameter(
            [&](const std::string&, Matrix& p, const Matrix& g, Matrix& m1, Matrix& m2) { update(p, g, m1, m2); },
            m.encoder, grads, m1_, m2_);
        if (m.head) update(*m.head, dhead, hm1_, hm2_);
    }

    std::size_t steps() const { return t_; }

private:
    TrainingConfig config_;
    EncoderState m1_, m2_;
    Matrix hm1_, hm2_;
    std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training

struct TrainingReport {
    std::vector<double> epoch_losses;
    double wall_time_seconds = 0.0;
    std::optional<double> validation_roc_auc;
    std::size_t optimizer_steps = 0;
    std::size_t n_train_pairs = 0;
    TrainingConfig config;
};

/// Wall time is left out: reports must be byte-identical across runs.
inline nlohmann::json to_json(const TrainingReport& r) {
    nlohmann::json j = {{"epoch_losses", r.epoch_losses},
                        {"optimizer_steps", r.optimizer_steps},
                        {"n_train_pairs", r.n_train_pairs},
                        {"config", r.config}};
    j["validation_roc_auc"] = r.validation_roc_auc ? nlohmann::json(*r.validation_roc_auc) : nlohmann::json(nullptr);
    return j;
}

/// Prepared documents keyed by id, built lazily and shared across steps.
class DocumentCache {
public:
    DocumentCache(const corpus::DocumentStore& store, const textprep::Vocabulary& vocab, PoolingStrategy pooling)
        : store_(store), vocab_(vocab), pooling_(pooling) {}

    const PreparedDocument& get(const std::string& id) {
        auto it = cache_.find(id);
        if (it != cache_.end()) return it->second;
        const auto& doc = store_.at(id);
        try {
            return cache_.emplace(id, encoder::prepare_document(doc.text, pooling_, vocab_)).first->second;
        } catch (const Error& e) {
            fail(e.kind(), "document '" + id + "': " + e.what());
        }
    }

private:
    const corpus::DocumentStore& store_;
    const textprep::Vocabulary& vocab_;
    PoolingStrategy pooling_;
    std::map<std::string, PreparedDocument> cache_;
};

inline std::vector<double> score_pairs(const SiameseModel& m, std::span<const corpus::LabeledPair> pairs,
                                       DocumentCache& cache) {
    std::map<std::string, Vector> emb;
    auto get = [&](const std::string& id) -> const Vector& {
        auto it = emb.find(id);
        if (it == emb.end()) it = emb.emplace(id, encoder::embed(m.encoder, cache.get(id))).first;
        return it->second;
    };
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const auto& p : pairs) {
        const Vector& u = get(p.resume_id);
        const Vector& v = get(p.vacancy_id);
        scores.push_back(cosine_similarity(std::span<const double>(u.data(), u.size()), std::span<const double>(v.data(), v.size())));
    }
    return scores;
}

struct TrainingResult {
    SiameseModel model;
    TrainingReport report;
};

/// Mini-batch training over the shuffled train split. The classification
/// head is created from the seed, trained jointly and dropped at the end.
inline TrainingResult train(SiameseModel model, const corpus::DatasetSplit& split, const corpus::DocumentStore& store,
                            const TrainingConfig& config) {
    config.validate();
    if (split.train.empty()) fail(ErrorKind::training, "training split is empty");
    encoder::detail::require_strategy(model.encoder, config.pooling);
    const auto start = std::chrono::steady_clock::now();

    DocumentCache cache(store, model.vocab, config.pooling);
    std::vector<PairExample> examples;
    examples.reserve(split.train.size());
    for (const auto& p : split.train) {
        examples.push_back({&cache.get(p.resume_id), &cache.get(p.vacancy_id), p.label});
    }

    if (config.objective == Objective::classification) {
        model.head = init_head(model.encoder.config.embed_dim, derive_seed(config.seed, 0x4EAD));
    } else {
        model.head.reset();
    }
    model.encoder.producer = Producer::encoder_finetuned;

    Optimizer opt(config, model);
    EncoderState grads = encoder::zeros_like(model.encoder);
    Matrix dhead = model.head ? Matrix::Zero(model.head->rows(), model.head->cols()) : Matrix();
    Rng rng(derive_seed(config.seed, 0x5AFF1E));
    std::vector<std::size_t> order(examples.size());
    TrainingReport report;
    report.config = config;
    report.n_train_pairs = examples.size();

    std::vector<PairExample> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        double epoch_total = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            batch.clear();
            for (std::size_t i = begin; i < end; ++i) batch.push_back(examples[order[i]]);
            encoder::set_zero(grads);
            if (dhead.size()) dhead.setZero();
            const double loss = batch_loss(model, config.objective, batch, &grads, &dhead);
            if (!std::isfinite(loss) || !encoder::all_finite(grads)) {
                fail(ErrorKind::divergence,
                     "non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batch_index + 1));
            }
            opt.step(model, grads, dhead);
            epoch_total += loss * static_cast<double>(end - begin);
        }
        report.epoch_losses.push_back(epoch_total / static_cast<double>(examples.size()));
    }
    model.head.reset();
    report.optimizer_steps = opt.steps();

    if (!split.validation.empty()) {
        const auto scores = score_pairs(model, split.validation, cache);
        std::vector<int> labels;
        for (const auto& p : split.validation) labels.push_back(p.label);
        bool has_pos = false, has_neg = false;
        for (int y : labels) (y ? has_pos : has_neg) = true;
        if (has_pos && has_neg) report.validation_roc_auc = eval::roc_auc(scores, labels);
    }
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Scoring

inline Vector embed_text(const SiameseModel& m, std::string_view text, PoolingStrategy pooling) {
    return encoder::embed(m.encoder, encoder::prepare_document(text, pooling, m.vocab));
}

/// Cosine of the two tower outputs. Both towers are the same encoder.
inline double score_pair(const SiameseModel& m, const corpus::Document& resume, const corpus::Document& vacancy,
                         PoolingStrategy pooling = PoolingStrategy::mean_tokens) {
    const Vector u = embed_text(m, resume.text, pooling);
    const Vector v = embed_text(m, vacancy.text, pooling);
    return cosine_similarity(std::span<const double>(u.data(), u.size()), std::span<const double>(v.data(), v.size()));
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_group;
    std::map<std::string, double> group_errors;
};

/// Central differences (step 1e-4) against the analytic gradient of the mean
/// probe loss, per parameter group. Relative error is
/// |a - n| / (|a| + |n|) over the group, 0 when both are ~0.
inline GradientCheckResult gradient_check_detailed(const SiameseModel& model, Objective objective,
                                                   std::span<const PairExample> probes, double step = 1e-4) {
    SiameseModel m = model;
    EncoderState grads = encoder::zeros_like(m.encoder);
    Matrix dhead = m.head ? Matrix::Zero(m.head->rows(), m.head->cols()) : Matrix();
    batch_loss(m, objective, probes, &grads, m.head ? &dhead : nullptr);

    std::size_t max_len = 0;
    for (const auto& p : probes) {
        for (const auto* doc : {p.resume, p.vacancy}) {
            for (const auto& s : doc->sequences) max_len = std::max(max_len, s.length());
        }
    }

    GradientCheckResult result;
    auto check = [&](const std::string& name, Matrix& param, const Matrix& analytic, Eigen::Index rows) {
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < param.cols(); ++c) {
                const double saved = param(r, c);
                param(r, c) = saved + step;
                const double up = batch_loss(m, objective, probes, nullptr, nullptr);
                param(r, c) = saved - step;
                const double down = batch_loss(m, objective, probes, nullptr, nullptr);
                param(r, c) = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double a = analytic(r, c);
                diff2 += (a - numeric) * (a - numeric);
                a2 += a * a;
                n2 += numeric * numeric;
            }
        }
        const double denom = std::sqrt(a2) + std::sqrt(n2);
        const double err = denom < 1e-9 ? 0.0 : std::sqrt(diff2) / denom;
        result.group_errors[name] = err;
        if (err >= result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_group = name;
        }
    };
    encoder::for_each_parameter(
        [&](const std::string& name, Matrix& p, const Matrix& g) {
            const Eigen::Index rows =
                name == "position_embedding" ? std::min<Eigen::Index>(p.rows(), static_cast<Eigen::Index>(max_len)) : p.rows();
            check(name, p, g, rows);
        },
        m.encoder, grads);
    if (m.head && objective == Objective::classification) check("head", *m.head, dhead, m.head->rows());
    return result;
}

inline double gradient_check(const SiameseModel& model, Objective objective, std::span<const PairExample> probes) {
    return gradient_check_detailed(model, objective, probes).max_relative_error;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::string_view kCheckpointFormat = "jobmatch-siamese-1";

inline void save_checkpoint(std::ostream& out, const SiameseModel& m, const std::optional<TrainingConfig>& config) {
    archive::Archive a;
    a.meta = {{"format", kCheckpointFormat},
              {"encoder_config", m.encoder.config},
              {"producer", to_string(m.encoder.producer)},
              {"vocabulary", m.vocab.to_json()},
              {"has_head", m.head.has_value()}};
    a.meta["training_config"] = config ? nlohmann::json(*config) : nlohmann::json(nullptr);
    encoder::add_to_archive(a, m.encoder);
    if (m.head) a.add("head", static_cast<std::size_t>(m.head->rows()), static_cast<std::size_t>(m.head->cols()), m.head->data());
    archive::write(out, a);
}

inline void save_checkpoint(const std::string& path, const SiameseModel& m, const std::optional<TrainingConfig>& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write checkpoint '" + path + "'");
    save_checkpoint(out, m, config);
}

struct Checkpoint {
    SiameseModel model;
    std::optional<TrainingConfig> config;
};

inline Checkpoint load_checkpoint(std::istream& in) {
    const archive::Archive a = archive::read(in);
    if (a.meta.value("format", std::string()) != kCheckpointFormat) fail(ErrorKind::io, "not a siamese checkpoint");
    Checkpoint c;
    const auto cfg = a.meta.at("encoder_config").get<encoder::EncoderConfig>();
    const auto producer_name = a.meta.at("producer").get<std::string>();
    const Producer producer = producer_name == "encoder_finetuned" ? Producer::encoder_finetuned : Producer::encoder_frozen;
    c.model.vocab = textprep::Vocabulary::from_json(a.meta.at("vocabulary"));
    c.model.encoder = encoder::from_archive(a, cfg, producer);
    if (a.meta.at("has_head").get<bool>()) {
        const auto& t = a.at("head");
        Matrix h(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
        std::copy(t.data.begin(), t.data.end(), h.data());
        c.model.head = std::move(h);
    }
    if (!a.meta.at("training_config").is_null()) c.config = a.meta.at("training_config").get<TrainingConfig>();
    return c;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot read checkpoint '" + path + "'");
    return load_checkpoint(in);
}

} // namespace jobmatch::siamese
