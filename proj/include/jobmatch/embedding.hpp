// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jobmatch/error.hpp"

namespace jobmatch {

enum class PoolingStrategy { mean_tokens, sentence_mean, sentence_weighted_mean, cls_last4_mean };

inline std::string_view to_string(PoolingStrategy p) {
    switch (p) {
    case PoolingStrategy::mean_tokens: return "mean_tokens";
    case PoolingStrategy::sentence_mean: return "sentence_mean";
    case PoolingStrategy::sentence_weighted_mean: return "sentence_weighted_mean";
    case PoolingStrategy::cls_last4_mean: return "cls_last4_mean";
    }
    return "?";
}

inline std::optional<PoolingStrategy> parse_pooling(std::string_view s) {
    for (auto p : {PoolingStrategy::mean_tokens, PoolingStrategy::sentence_mean, PoolingStrategy::sentence_weighted_mean,
                   PoolingStrategy::cls_last4_mean}) {
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

enum class Producer { tfidf, encoder_frozen, encoder_finetuned };

inline std::string_view to_string(Producer p) {
    switch (p) {
    case Producer::tfidf: return "tfidf";
    case Producer::encoder_frozen: return "encoder_frozen";
    case Producer::encoder_finetuned: return "encoder_finetuned";
    }
    return "?";
}

struct DocumentEmbedding {
    std::vector<double> values;
    Producer producer = Producer::tfidf;
    std::optional<PoolingStrategy> pooling; // empty for tf-idf

    std::size_t dim() const { return values.size(); }
};

inline double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

inline double l2_norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        fail(ErrorKind::shape, "cosine_similarity: dimension mismatch " + std::to_string(u.size()) + " vs " +
                                   std::to_string(v.size()));
    }
    const double nu = l2_norm(u);
    const double nv = l2_norm(v);
    if (nu == 0.0 || nv == 0.0) return 0.0;
    const double c = dot(u, v) / (nu * nv);
    return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline double cosine_similarity(const DocumentEmbedding& u, const DocumentEmbedding& v) {
    return cosine_similarity(std::span<const double>(u.values), std::span<const double>(v.values));
}

} // namespace jobmatch
