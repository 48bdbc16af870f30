// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/archive.hpp"
#include "jobmatch/corpus.hpp"
#include "jobmatch/embedding.hpp"
#include "jobmatch/error.hpp"

namespace jobmatch::retrieval {

/// Unit-normalized document vectors, row-major. Zero vectors are stored as
/// zeros, flagged, and score 0 against every query.
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    explicit EmbeddingIndex(std::size_t dim, nlohmann::json producer = nullptr) : dim_(dim), producer_(std::move(producer)) {}

    void add(const std::string& id, std::span<const double> values) {
        if (values.size() != dim_) {
            fail(ErrorKind::shape, "index: '" + id + "' has dim " + std::to_string(values.size()) + ", expected " +
                                       std::to_string(dim_));
        }
        if (!id_set_.insert(id).second) fail(ErrorKind::build, "index: duplicate id '" + id + "'");
        double norm = 0.0;
        for (double v : values) norm += v * v;
        norm = std::sqrt(norm);
        if (!std::isfinite(norm)) fail(ErrorKind::build, "index: '" + id + "' has a non-finite embedding");
        ids_.push_back(id);
        zero_.push_back(norm == 0.0);
        for (double v : values) data_.push_back(norm == 0.0 ? 0.0 : v / norm);
    }

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    bool empty() const { return ids_.empty(); }
    const std::vector<std::string>& ids() const { return ids_; }
    const nlohmann::json& producer() const { return producer_; }
    bool is_zero(std::size_t i) const { return zero_[i]; }
    std::span<const double> vector(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    void save(std::ostream& out) const {
        archive::Archive a;
        a.meta = {{"format", "jobmatch-index-1"}, {"dim", dim_}, {"count", size()}, {"producer", producer_}, {"ids", ids_}};
        a.add("vectors", size(), dim_, data_.data());
        archive::write(out, a);
    }

    static EmbeddingIndex load(std::istream& in) {
        const auto a = archive::read(in);
        if (a.meta.value("format", std::string()) != "jobmatch-index-1") fail(ErrorKind::io, "not an embedding index");
        EmbeddingIndex idx(a.meta.at("dim").get<std::size_t>(), a.meta.at("producer"));
        idx.ids_ = a.meta.at("ids").get<std::vector<std::string>>();
        const auto& t = a.at("vectors");
        if (t.rows != idx.ids_.size() || t.cols != idx.dim_) fail(ErrorKind::io, "index: payload shape mismatch");
        idx.data_ = t.data;
        for (std::size_t i = 0; i < idx.ids_.size(); ++i) {
            if (!idx.id_set_.insert(idx.ids_[i]).second) fail(ErrorKind::integrity, "index: duplicate id on load");
            const auto v = idx.vector(i);
            idx.zero_.push_back(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
        }
        return idx;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot write index '" + path + "'");
        save(out);
    }

    static EmbeddingIndex load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail(ErrorKind::io, "cannot read index '" + path + "'");
        return load(in);
    }

private:
    std::size_t dim_ = 0;
    nlohmann::json producer_;
    std::vector<std::string> ids_;
    std::set<std::string> id_set_;
    std::vector<bool> zero_;
    std::vector<double> data_;
};

using Embedder = std::function<DocumentEmbedding(const corpus::Document&)>;

/// Embeds every document. Failures are rethrown as build errors naming the
/// document. An empty collection gives an empty index of dimension `dim`.
template <class DocRange>
EmbeddingIndex index_build(const DocRange& docs, const Embedder& embedder, std::size_t dim) {
    EmbeddingIndex idx(dim);
    bool producer_set = false;
    for (const corpus::Document& doc : docs) {
        DocumentEmbedding e;
        try {
            e = embedder(doc);
        } catch (const std::exception& ex) {
            fail(ErrorKind::build, "index: cannot embed '" + doc.doc_id + "': " + ex.what());
        }
        if (!producer_set) {
            nlohmann::json p = {{"producer", to_string(e.producer)}};
            if (e.pooling) p["pooling"] = to_string(*e.pooling);
            idx = EmbeddingIndex(dim, p);
            producer_set = true;
        }
        idx.add(doc.doc_id, e.values);
    }
    return idx;
}

struct Hit {
    std::string doc_id;
    double score = 0.0;
    bool operator==(const Hit&) const = default;
};

/// Cosine of the query against stored row i. Rows are unit (or zero), so
/// this is the dot product with the normalized query.
inline std::vector<double> normalized_query(std::span<const double> query) {
    double norm = 0.0;
    for (double v : query) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<double> q(query.begin(), query.end());
    if (norm > 0.0) {
        for (double& v : q) v /= norm;
    }
    return q;
}

/// The k best rows by score (descending), ties by ascending id.
inline std::vector<Hit> topk_query(const EmbeddingIndex& index, std::span<const double> query, std::size_t k) {
    if (k < 1) fail(ErrorKind::config, "topk: k must be >= 1");
    if (query.size() != index.dim()) {
        fail(ErrorKind::shape, "topk: query dim " + std::to_string(query.size()) + " does not match index dim " +
                                   std::to_string(index.dim()));
    }
    const auto q = normalized_query(query);
    const std::size_t n = index.size();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = index.vector(i);
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += row[j] * q[j];
        scores[i] = s;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& ids = index.ids();
    auto before = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    };
    k = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
    std::vector<Hit> hits;
    hits.reserve(k);
    for (std::size_t i = 0; i < k; ++i) hits.push_back({ids[order[i]], scores[order[i]]});
    return hits;
}

inline std::vector<Hit> topk_query(const EmbeddingIndex& index, const DocumentEmbedding& query, std::size_t k) {
    return topk_query(index, std::span<const double>(query.values), k);
}

} // namespace jobmatch::retrieval
