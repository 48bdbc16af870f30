// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "jobmatch/archive.hpp"
#include "jobmatch/corpus.hpp"
#include "jobmatch/embedding.hpp"
#include "jobmatch/error.hpp"
#include "jobmatch/rng.hpp"
#include "jobmatch/textprep.hpp"

namespace jobmatch::encoder {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using textprep::TokenSequence;

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 64;
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t ff_dim = 0; ///< 0 means 4 * embed_dim
    std::size_t max_len = textprep::kMaxSequenceLength;
    std::uint64_t seed = 0;
    double embedding_init_std = 0.02;

    std::size_t ff() const { return ff_dim == 0 ? 4 * embed_dim : ff_dim; }
    std::size_t head_dim() const { return embed_dim / n_heads; }

    void validate() const {
        if (vocab_size < 3) fail(ErrorKind::config, "encoder: vocab_size must cover the reserved tokens");
        if (embed_dim == 0 || n_layers == 0 || n_heads == 0) fail(ErrorKind::config, "encoder: dimensions must be positive");
        if (embed_dim % n_heads != 0) {
            fail(ErrorKind::config, "encoder: embed_dim " + std::to_string(embed_dim) + " is not divisible by n_heads " +
                                        std::to_string(n_heads));
        }
        if (max_len != textprep::kMaxSequenceLength) fail(ErrorKind::config, "encoder: max_len must be 512");
        if (!(embedding_init_std > 0.0)) fail(ErrorKind::config, "encoder: embedding_init_std must be positive");
    }
};

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
    j = {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim}, {"n_layers", c.n_layers},
         {"n_heads", c.n_heads},       {"ff_dim", c.ff()},         {"max_len", c.max_len},
         {"seed", c.seed},             {"embedding_init_std", c.embedding_init_std}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
    EncoderConfig d;
    c.vocab_size = j.value("vocab_size", d.vocab_size);
    c.embed_dim = j.value("embed_dim", d.embed_dim);
    c.n_layers = j.value("n_layers", d.n_layers);
    c.n_heads = j.value("n_heads", d.n_heads);
    c.ff_dim = j.value("ff_dim", d.ff_dim);
    c.max_len = j.value("max_len", d.max_len);
    c.seed = j.value("seed", d.seed);
    c.embedding_init_std = j.value("embedding_init_std", d.embedding_init_std);
}

/// Pre-LN transformer block. Row-vector convention: y = x * W + b.
struct LayerParams {
    Matrix ln1_gamma, ln1_beta;
    Matrix wq, bq, wk, bk, wv, bv, wo, bo;
    Matrix ln2_gamma, ln2_beta;
    Matrix w1, b1, w2, b2;
};

struct EncoderState {
    EncoderConfig config;
    Producer producer = Producer::encoder_frozen;
    Matrix token_embedding;    ///< vocab_size x embed_dim
    Matrix position_embedding; ///< max_len x embed_dim
    std::vector<LayerParams> layers;
};

/// Calls f(name, tensor...) for every parameter tensor of one or more
/// identically shaped states, in a fixed order.
template <class F, class... States>
void for_each_parameter(F&& f, States&... states) {
    f(std::string("token_embedding"), states.token_embedding...);
    f(std::string("position_embedding"), states.position_embedding...);
    const std::size_t n = std::get<0>(std::tie(states...)).layers.size();
    for (std::size_t l = 0; l < n; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        f(p + "ln1_gamma", states.layers[l].ln1_gamma...);
        f(p + "ln1_beta", states.layers[l].ln1_beta...);
        f(p + "wq", states.layers[l].wq...);
        f(p + "bq", states.layers[l].bq...);
        f(p + "wk", states.layers[l].wk...);
        f(p + "bk", states.layers[l].bk...);
        f(p + "wv", states.layers[l].wv...);
        f(p + "bv", states.layers[l].bv...);
        f(p + "wo", states.layers[l].wo...);
        f(p + "bo", states.layers[l].bo...);
        f(p + "ln2_gamma", states.layers[l].ln2_gamma...);
        f(p + "ln2_beta", states.layers[l].ln2_beta...);
        f(p + "w1", states.layers[l].w1...);
        f(p + "b1", states.layers[l].b1...);
        f(p + "w2", states.layers[l].w2...);
        f(p + "b2", states.layers[l].b2...);
    }
}

inline std::size_t parameter_count(const EncoderState& s) {
    std::size_t n = 0;
    for_each_parameter([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); }, s);
    return n;
}

/// Same shapes, all zeros. Used for gradients and optimizer moments.
inline EncoderState zeros_like(const EncoderState& s) {
    EncoderState z = s;
    for_each_parameter([](const std::string&, Matrix& m) { m.setZero(); }, z);
    return z;
}

inline void set_zero(EncoderState& s) {
    for_each_parameter([](const std::string&, Matrix& m) { m.setZero(); }, s);
}

inline bool all_finite(const EncoderState& s) {
    bool ok = true;
    for_each_parameter([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); }, s);
    return ok;
}

namespace detail {

inline Matrix normal_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
    return m;
}

} // namespace detail

/// Deterministic initialization. Linear weights are N(0, 1/fan_in) so a
/// unit-variance (post layer-norm) input keeps unit-variance pre-activations.
inline EncoderState init_encoder(const EncoderConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const auto d = config.embed_dim;
    const auto ff = config.ff();
    EncoderState s;
    s.config = config;
    s.token_embedding = detail::normal_matrix(rng, config.vocab_size, d, config.embedding_init_std);
    s.position_embedding = detail::normal_matrix(rng, config.max_len, d, config.embedding_init_std);
    const double sd_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double sd_ff = 1.0 / std::sqrt(static_cast<double>(ff));
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        LayerParams p;
        p.ln1_gamma = Matrix::Ones(1, d);
        p.ln1_beta = Matrix::Zero(1, d);
        p.wq = detail::normal_matrix(rng, d, d, sd_d);
        p.bq = Matrix::Zero(1, d);
        p.wk = detail::normal_matrix(rng, d, d, sd_d);
        p.bk = Matrix::Zero(1, d);
        p.wv = detail::normal_matrix(rng, d, d, sd_d);
        p.bv = Matrix::Zero(1, d);
        p.wo = detail::normal_matrix(rng, d, d, sd_d);
        p.bo = Matrix::Zero(1, d);
        p.ln2_gamma = Matrix::Ones(1, d);
        p.ln2_beta = Matrix::Zero(1, d);
        p.w1 = detail::normal_matrix(rng, d, ff, sd_d);
        p.b1 = Matrix::Zero(1, ff);
        p.w2 = detail::normal_matrix(rng, ff, d, sd_ff);
        p.b2 = Matrix::Zero(1, d);
        s.layers.push_back(std::move(p));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Forward / backward

inline constexpr double kLayerNormEps = 1e-5;

struct LayerTrace {
    Matrix xhat1;
    Vector rstd1;
    Matrix a, q, k, v;
    std::vector<Matrix> probs; ///< one T x T matrix per head
    Matrix ctx, h1;
    Matrix xhat2;
    Vector rstd2;
    Matrix b, z, tz, g; ///< tz: tanh term of the GELU at z
};

/// Token representations after the embedding layer (index 0) and after
/// every block (index 1..n_layers), each T x embed_dim.
struct EncoderOutput {
    std::vector<Matrix> layers;
    std::vector<bool> valid; ///< false at padding positions
};

struct ForwardTrace {
    std::vector<std::int32_t> ids;
    EncoderOutput output;
    std::vector<LayerTrace> layers;
};

namespace detail {

inline Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, Matrix& xhat, Vector& rstd) {
    const auto n = x.rows();
    const double d = static_cast<double>(x.cols());
    xhat.resize(n, x.cols());
    rstd.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).sum() / d;
        const auto centered = x.row(i).array() - mean;
        const double var = centered.square().sum() / d;
        rstd(i) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(i) = centered * rstd(i);
    }
    Matrix y = xhat.array().rowwise() * gamma.row(0).array();
    y.rowwise() += beta.row(0);
    return y;
}

inline Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& rstd, const Matrix& gamma,
                                  Matrix& dgamma, Matrix& dbeta) {
    dgamma.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
    dbeta.row(0) += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
    const double d = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double m1 = dxhat.row(i).sum() / d;
        const double m2 = dxhat.row(i).dot(xhat.row(i)) / d;
        dx.row(i) = rstd(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
    }
    return dx;
}

inline constexpr double kGeluC = 0.7978845608028654; // sqrt(2 / pi)

inline double gelu_tanh(double x) { return std::tanh(kGeluC * (x + 0.044715 * x * x * x)); }

inline double gelu(double x) { return 0.5 * x * (1.0 + gelu_tanh(x)); }

/// Derivative of gelu at x given t = gelu_tanh(x).
inline double gelu_grad(double x, double t) {
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

inline void check_sequence(const EncoderState& s, std::span<const std::int32_t> ids) {
    if (ids.size() > s.config.max_len) {
        fail(ErrorKind::shape, "encoder: sequence of " + std::to_string(ids.size()) + " tokens exceeds max_len " +
                                   std::to_string(s.config.max_len));
    }
    for (auto id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= s.config.vocab_size) {
            fail(ErrorKind::shape, "encoder: token id " + std::to_string(id) + " outside vocabulary");
        }
    }
}

inline EncoderOutput run_forward(const EncoderState& s, std::span<const std::int32_t> ids, std::vector<LayerTrace>* traces) {
    check_sequence(s, ids);
    const auto T = static_cast<Eigen::Index>(ids.size());
    const auto d = static_cast<Eigen::Index>(s.config.embed_dim);
    const auto H = s.config.n_heads;
    const auto dh = static_cast<Eigen::Index>(s.config.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    EncoderOutput out;
    out.valid.resize(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) out.valid[t] = ids[t] != textprep::Vocabulary::kPad;

    Matrix x(T, d);
    for (Eigen::Index t = 0; t < T; ++t) {
        x.row(t) = s.token_embedding.row(ids[static_cast<std::size_t>(t)]) + s.position_embedding.row(t);
    }
    out.layers.push_back(x);
    if (traces) traces->resize(s.layers.size());

    for (std::size_t l = 0; l < s.layers.size(); ++l) {
        const LayerParams& p = s.layers[l];
        LayerTrace local;
        LayerTrace& tr = traces ? (*traces)[l] : local;

        tr.a = layer_norm(x, p.ln1_gamma, p.ln1_beta, tr.xhat1, tr.rstd1);
        tr.q = tr.a * p.wq;
        tr.q.rowwise() += p.bq.row(0);
        tr.k = tr.a * p.wk;
        tr.k.rowwise() += p.bk.row(0);
        tr.v = tr.a * p.wv;
        tr.v.rowwise() += p.bv.row(0);

        tr.ctx.resize(T, d);
        tr.probs.resize(H);
        for (std::size_t h = 0; h < H; ++h) {
            const auto c0 = static_cast<Eigen::Index>(h) * dh;
            Matrix scores = (tr.q.middleCols(c0, dh) * tr.k.middleCols(c0, dh).transpose()) * scale;
            for (Eigen::Index i = 0; i < T; ++i) {
                double mx = -std::numeric_limits<double>::infinity();
                for (Eigen::Index j = 0; j < T; ++j) {
                    if (out.valid[static_cast<std::size_t>(j)]) mx = std::max(mx, scores(i, j));
                }
                double sum = 0.0;
                for (Eigen::Index j = 0; j < T; ++j) {
                    const double e = out.valid[static_cast<std::size_t>(j)] ? std::exp(scores(i, j) - mx) : 0.0;
                    scores(i, j) = e;
                    sum += e;
                }
                scores.row(i) /= sum;
            }
            tr.ctx.middleCols(c0, dh) = scores * tr.v.middleCols(c0, dh);
            tr.probs[h] = std::move(scores);
        }
        tr.h1 = x + tr.ctx * p.wo;
        tr.h1.rowwise() += p.bo.row(0);

        tr.b = layer_norm(tr.h1, p.ln2_gamma, p.ln2_beta, tr.xhat2, tr.rstd2);
        tr.z = tr.b * p.w1;
        tr.z.rowwise() += p.b1.row(0);
        if (traces) {
            tr.tz = tr.z.unaryExpr([](double v) { return gelu_tanh(v); });
            tr.g = 0.5 * tr.z.array() * (1.0 + tr.tz.array());
        } else {
            tr.g = tr.z.unaryExpr([](double v) { return gelu(v); });
        }
        x = tr.h1 + tr.g * p.w2;
        x.rowwise() += p.b2.row(0);
        out.layers.push_back(x);
    }
    return out;
}

} // namespace detail

/// Runs the encoder. Padding positions are masked as attention keys.
inline EncoderOutput forward(const EncoderState& s, const TokenSequence& seq) {
    if (seq.empty()) fail(ErrorKind::empty_input, "encoder: empty sequence");
    return detail::run_forward(s, seq.ids, nullptr);
}

inline ForwardTrace forward_traced(const EncoderState& s, const TokenSequence& seq) {
    if (seq.empty()) fail(ErrorKind::empty_input, "encoder: empty sequence");
    ForwardTrace trace;
    trace.ids = seq.ids;
    trace.output = detail::run_forward(s, seq.ids, &trace.layers);
    return trace;
}

/// Accumulates parameter gradients into `grads`. layer_grads[l] is dLoss/d(output
/// layer l); entries may be empty matrices for layers the loss does not touch.
inline void backward(const EncoderState& s, const ForwardTrace& trace, const std::vector<Matrix>& layer_grads,
                     EncoderState& grads) {
    const std::size_t L = s.layers.size();
    if (layer_grads.size() != L + 1) fail(ErrorKind::shape, "encoder backward: expected one gradient per layer output");
    const auto T = static_cast<Eigen::Index>(trace.ids.size());
    const auto d = static_cast<Eigen::Index>(s.config.embed_dim);
    const auto dh = static_cast<Eigen::Index>(s.config.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix g = layer_grads[L].size() ? layer_grads[L] : Matrix::Zero(T, d);
    for (std::size_t li = L; li-- > 0;) {
        const LayerParams& p = s.layers[li];
        LayerParams& gp = grads.layers[li];
        const LayerTrace& tr = trace.layers[li];

        // Feed-forward half: x_out = h1 + gelu(LN2(h1) W1 + b1) W2 + b2
        gp.w2.noalias() += tr.g.transpose() * g;
        gp.b2.row(0) += g.colwise().sum();
        Matrix dz = (g * p.w2.transpose()).array() *
                    tr.z.binaryExpr(tr.tz, [](double x, double t) { return detail::gelu_grad(x, t); }).array();
        gp.w1.noalias() += tr.b.transpose() * dz;
        gp.b1.row(0) += dz.colwise().sum();
        const Matrix db = dz * p.w1.transpose();
        Matrix dh1 = g + detail::layer_norm_backward(db, tr.xhat2, tr.rstd2, p.ln2_gamma, gp.ln2_gamma, gp.ln2_beta);

        // Attention half: h1 = x + attn(LN1(x)) Wo + bo
        gp.wo.noalias() += tr.ctx.transpose() * dh1;
        gp.bo.row(0) += dh1.colwise().sum();
        const Matrix dctx = dh1 * p.wo.transpose();
        Matrix dq(T, d), dk(T, d), dv(T, d);
        for (std::size_t h = 0; h < tr.probs.size(); ++h) {
            const auto c0 = static_cast<Eigen::Index>(h) * dh;
            const Matrix& P = tr.probs[h];
            const auto dC = dctx.middleCols(c0, dh);
            const Matrix dP = dC * tr.v.middleCols(c0, dh).transpose();
            dv.middleCols(c0, dh) = P.transpose() * dC;
            Matrix dS = P.array() * (dP.colwise() - (dP.array() * P.array()).rowwise().sum().matrix()).array();
            dS *= scale;
            dq.middleCols(c0, dh) = dS * tr.k.middleCols(c0, dh);
            dk.middleCols(c0, dh) = dS.transpose() * tr.q.middleCols(c0, dh);
        }
        gp.wq.noalias() += tr.a.transpose() * dq;
        gp.bq.row(0) += dq.colwise().sum();
        gp.wk.noalias() += tr.a.transpose() * dk;
        gp.bk.row(0) += dk.colwise().sum();
        gp.wv.noalias() += tr.a.transpose() * dv;
        gp.bv.row(0) += dv.colwise().sum();
        const Matrix da = dq * p.wq.transpose() + dk * p.wk.transpose() + dv * p.wv.transpose();
        g = dh1 + detail::layer_norm_backward(da, tr.xhat1, tr.rstd1, p.ln1_gamma, gp.ln1_gamma, gp.ln1_beta);
        if (layer_grads[li].size()) g += layer_grads[li];
    }
    for (Eigen::Index t = 0; t < T; ++t) {
        grads.token_embedding.row(trace.ids[static_cast<std::size_t>(t)]) += g.row(t);
        grads.position_embedding.row(t) += g.row(t);
    }
}

// ---------------------------------------------------------------------------
// Document pooling

/// Token sequences of one document plus the averaging weights of their pooled
/// vectors. Built once per document and reused across training steps.
struct PreparedDocument {
    std::vector<TokenSequence> sequences;
    std::vector<double> weights;
    PoolingStrategy pooling = PoolingStrategy::mean_tokens;
};

inline TokenSequence prepare_sequence(std::string_view text, const textprep::Vocabulary& vocab) {
    return textprep::truncate(textprep::tokenize(textprep::clean_text(text), vocab));
}

/// Tokenizes (with a leading CLS, counted in the 512 budget) per strategy.
/// Sentence strategies cap each sentence at 512 tokens.
inline PreparedDocument prepare_document(std::string_view text, PoolingStrategy pooling, const textprep::Vocabulary& vocab) {
    PreparedDocument prep;
    prep.pooling = pooling;
    if (pooling == PoolingStrategy::mean_tokens || pooling == PoolingStrategy::cls_last4_mean) {
        auto seq = prepare_sequence(text, vocab);
        if (seq.length() <= 1) fail(ErrorKind::empty_input, "document has no tokens");
        prep.sequences.push_back(std::move(seq));
        prep.weights.push_back(1.0);
        return prep;
    }
    double total = 0.0;
    for (const auto& sentence : textprep::split_sentences(textprep::clean_text(text))) {
        auto seq = prepare_sequence(sentence, vocab);
        if (seq.length() <= 1) continue;
        const double w = pooling == PoolingStrategy::sentence_mean ? 1.0 : static_cast<double>(seq.length() - 1);
        total += w;
        prep.sequences.push_back(std::move(seq));
        prep.weights.push_back(w);
    }
    if (prep.sequences.empty()) fail(ErrorKind::empty_input, "document has no tokens");
    for (auto& w : prep.weights) w /= total;
    return prep;
}

inline PreparedDocument prepare_document(const TokenSequence& seq, PoolingStrategy pooling = PoolingStrategy::mean_tokens) {
    if (seq.empty()) fail(ErrorKind::empty_input, "document has no tokens");
    return {{seq}, {1.0}, pooling};
}

namespace detail {

inline void require_strategy(const EncoderState& s, PoolingStrategy pooling) {
    if (pooling == PoolingStrategy::cls_last4_mean && s.config.n_layers < 4) {
        fail(ErrorKind::strategy, "cls_last4_mean needs at least 4 layers, encoder has " +
                                      std::to_string(s.config.n_layers));
    }
}

inline Vector pool_sequence(const EncoderOutput& out, PoolingStrategy pooling) {
    const std::size_t L = out.layers.size() - 1;
    if (pooling == PoolingStrategy::cls_last4_mean) {
        Vector v = Vector::Zero(out.layers[L].cols());
        for (std::size_t l = L - 3; l <= L; ++l) v += out.layers[l].row(0).transpose();
        return v / 4.0;
    }
    Vector v = Vector::Zero(out.layers[L].cols());
    double n = 0.0;
    for (std::size_t t = 0; t < out.valid.size(); ++t) {
        if (!out.valid[t]) continue;
        v += out.layers[L].row(static_cast<Eigen::Index>(t)).transpose();
        n += 1.0;
    }
    if (n == 0.0) fail(ErrorKind::empty_input, "sequence has only padding");
    return v / n;
}

/// dLoss/d(layer outputs) for one sequence given dLoss/d(pooled vector).
inline std::vector<Matrix> pool_backward(const EncoderOutput& out, PoolingStrategy pooling, const Vector& dpooled) {
    const std::size_t L = out.layers.size() - 1;
    std::vector<Matrix> grads(L + 1);
    const auto T = out.layers[L].rows();
    const auto d = out.layers[L].cols();
    if (pooling == PoolingStrategy::cls_last4_mean) {
        for (std::size_t l = L - 3; l <= L; ++l) {
            grads[l] = Matrix::Zero(T, d);
            grads[l].row(0) = dpooled.transpose() / 4.0;
        }
        return grads;
    }
    double n = 0.0;
    for (bool v : out.valid) n += v ? 1.0 : 0.0;
    grads[L] = Matrix::Zero(T, d);
    for (std::size_t t = 0; t < out.valid.size(); ++t) {
        if (out.valid[t]) grads[L].row(static_cast<Eigen::Index>(t)) = dpooled.transpose() / n;
    }
    return grads;
}

} // namespace detail

inline Vector embed(const EncoderState& s, const PreparedDocument& doc) {
    detail::require_strategy(s, doc.pooling);
    Vector e = Vector::Zero(static_cast<Eigen::Index>(s.config.embed_dim));
    for (std::size_t i = 0; i < doc.sequences.size(); ++i) {
        e += doc.weights[i] * detail::pool_sequence(forward(s, doc.sequences[i]), doc.pooling);
    }
    return e;
}

/// Forward pass that keeps what backward_embedding needs.
struct EmbeddingTrace {
    std::vector<ForwardTrace> traces;
    Vector embedding;
};

inline EmbeddingTrace embed_traced(const EncoderState& s, const PreparedDocument& doc) {
    detail::require_strategy(s, doc.pooling);
    EmbeddingTrace et;
    et.embedding = Vector::Zero(static_cast<Eigen::Index>(s.config.embed_dim));
    for (std::size_t i = 0; i < doc.sequences.size(); ++i) {
        et.traces.push_back(forward_traced(s, doc.sequences[i]));
        et.embedding += doc.weights[i] * detail::pool_sequence(et.traces.back().output, doc.pooling);
    }
    return et;
}

inline void backward_embedding(const EncoderState& s, const PreparedDocument& doc, const EmbeddingTrace& et,
                               const Vector& dembedding, EncoderState& grads) {
    for (std::size_t i = 0; i < doc.sequences.size(); ++i) {
        const Vector dpooled = doc.weights[i] * dembedding;
        backward(s, et.traces[i], detail::pool_backward(et.traces[i].output, doc.pooling, dpooled), grads);
    }
}

inline std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline DocumentEmbedding embed_document(const EncoderState& s, const corpus::Document& doc, PoolingStrategy pooling,
                                        const textprep::Vocabulary& vocab) {
    detail::require_strategy(s, pooling);
    return {to_std(embed(s, prepare_document(doc.text, pooling, vocab))), s.producer, pooling};
}

// ---------------------------------------------------------------------------
// Checkpoints

inline void add_to_archive(archive::Archive& a, const EncoderState& s, const std::string& prefix = "encoder.") {
    for_each_parameter(
        [&](const std::string& name, const Matrix& m) {
            a.add(prefix + name, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), m.data());
        },
        s);
}

inline EncoderState from_archive(const archive::Archive& a, const EncoderConfig& config, Producer producer,
                                 const std::string& prefix = "encoder.") {
    EncoderState s = init_encoder(config);
    s.producer = producer;
    for_each_parameter(
        [&](const std::string& name, Matrix& m) {
            const auto& t = a.at(prefix + name);
            if (t.rows != static_cast<std::size_t>(m.rows()) || t.cols != static_cast<std::size_t>(m.cols())) {
                fail(ErrorKind::shape, "checkpoint tensor '" + name + "' has the wrong shape");
            }
            std::copy(t.data.begin(), t.data.end(), m.data());
        },
        s);
    return s;
}

} // namespace jobmatch::encoder
