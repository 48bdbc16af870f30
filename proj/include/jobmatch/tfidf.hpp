// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/corpus.hpp"
#include "jobmatch/embedding.hpp"
#include "jobmatch/error.hpp"
#include "jobmatch/textprep.hpp"

namespace jobmatch::tfidf {

inline constexpr std::size_t kDefaultDim = 768;

/// Fitted term list with smoothed idf weights:
///   idf(t) = ln((1 + N) / (1 + df(t))) + 1
/// Vectors use raw term counts times idf, then L2 normalization.
class TfidfModel {
public:
    TfidfModel() = default;

    TfidfModel(std::vector<std::string> terms, std::vector<double> idf) : terms_(std::move(terms)), idf_(std::move(idf)) {
        if (terms_.size() != idf_.size()) fail(ErrorKind::shape, "tf-idf: term and idf lengths differ");
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (!(idf_[i] > 0.0)) fail(ErrorKind::fit, "tf-idf: idf values must be positive");
            if (!index_.emplace(terms_[i], i).second) fail(ErrorKind::fit, "tf-idf: duplicate term '" + terms_[i] + "'");
        }
    }

    std::size_t dim() const { return terms_.size(); }
    const std::vector<std::string>& terms() const { return terms_; }
    const std::vector<double>& idf() const { return idf_; }

    /// Column of a term, or -1 when it was not selected.
    std::ptrdiff_t column(std::string_view term) const {
        auto it = index_.find(std::string(term));
        return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }

    std::vector<double> transform_text(std::string_view text) const {
        std::vector<double> v(dim(), 0.0);
        for (const auto& w : textprep::word_tokens(text)) {
            if (auto c = column(w); c >= 0) v[static_cast<std::size_t>(c)] += 1.0;
        }
        double sq = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] *= idf_[i];
            sq += v[i] * v[i];
        }
        if (sq > 0.0) {
            const double norm = std::sqrt(sq);
            for (auto& x : v) x /= norm;
        }
        return v;
    }

    DocumentEmbedding transform(const corpus::Document& doc) const {
        return {transform_text(doc.text), Producer::tfidf, std::nullopt};
    }

    nlohmann::json to_json() const { return {{"terms", terms_}, {"idf", idf_}, {"normalization", "l2"}}; }

    static TfidfModel from_json(const nlohmann::json& j) {
        if (j.value("normalization", std::string("l2")) != "l2") fail(ErrorKind::config, "tf-idf: only l2 normalization");
        return TfidfModel(j.at("terms").get<std::vector<std::string>>(), j.at("idf").get<std::vector<double>>());
    }

private:
    std::vector<std::string> terms_;
    std::vector<double> idf_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps the `dim` terms with highest document frequency (ties lexicographic).
inline TfidfModel fit_texts(const std::vector<std::string_view>& texts, std::size_t dim = kDefaultDim) {
    if (dim == 0) fail(ErrorKind::config, "tf-idf: dim must be positive");
    std::map<std::string, std::size_t> df;
    std::unordered_set<std::string> seen;
    for (auto text : texts) {
        seen.clear();
        for (auto& w : textprep::word_tokens(text)) {
            if (seen.insert(w).second) ++df[w];
        }
    }
    if (df.empty()) fail(ErrorKind::fit, "tf-idf: training corpus has no tokens");
    std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    ranked.resize(std::min(dim, ranked.size()));
    const double n_docs = static_cast<double>(texts.size());
    std::vector<std::string> terms;
    std::vector<double> idf;
    for (auto& [term, freq] : ranked) {
        terms.push_back(term);
        idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(freq))) + 1.0);
    }
    return TfidfModel(std::move(terms), std::move(idf));
}

inline TfidfModel fit(const std::vector<const corpus::Document*>& train_docs, std::size_t dim = kDefaultDim) {
    std::vector<std::string_view> texts;
    texts.reserve(train_docs.size());
    for (const auto* d : train_docs) texts.push_back(d->text);
    return fit_texts(texts, dim);
}

inline DocumentEmbedding transform(const corpus::Document& doc, const TfidfModel& model) { return model.transform(doc); }

} // namespace jobmatch::tfidf
