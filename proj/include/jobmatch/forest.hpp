// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/embedding.hpp"
#include "jobmatch/error.hpp"
#include "jobmatch/rng.hpp"

namespace jobmatch::forest {

/// concat: (u, v). extended: (u, v, |u - v|, u * v).
enum class FeatureMode { concat, extended };

inline std::string_view to_string(FeatureMode m) { return m == FeatureMode::concat ? "concat" : "extended"; }

inline std::optional<FeatureMode> parse_feature_mode(std::string_view s) {
    if (s == "concat") return FeatureMode::concat;
    if (s == "extended") return FeatureMode::extended;
    return std::nullopt;
}

using PairFeatures = std::vector<double>;

/// Resume first, vacancy second.
inline PairFeatures build_features(std::span<const double> resume, std::span<const double> vacancy,
                                   FeatureMode mode = FeatureMode::concat) {
    if (resume.size() != vacancy.size()) {
        fail(ErrorKind::shape, "build_features: dims " + std::to_string(resume.size()) + " and " +
                                   std::to_string(vacancy.size()) + " differ");
    }
    PairFeatures f(resume.begin(), resume.end());
    f.insert(f.end(), vacancy.begin(), vacancy.end());
    if (mode == FeatureMode::extended) {
        for (std::size_t i = 0; i < resume.size(); ++i) f.push_back(std::abs(resume[i] - vacancy[i]));
        for (std::size_t i = 0; i < resume.size(); ++i) f.push_back(resume[i] * vacancy[i]);
    }
    return f;
}

inline PairFeatures build_features(const DocumentEmbedding& resume, const DocumentEmbedding& vacancy,
                                   FeatureMode mode = FeatureMode::concat) {
    return build_features(resume.values, vacancy.values, mode);
}

struct ForestConfig {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth;
    std::size_t min_samples_split = 2;
    std::size_t features_per_split = 0; ///< 0 means floor(sqrt(d)), at least 1
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) fail(ErrorKind::config, "forest: n_trees must be >= 1");
        if (min_samples_split < 2) fail(ErrorKind::config, "forest: min_samples_split must be >= 2");
    }

    std::size_t mtry(std::size_t d) const {
        if (features_per_split != 0) return std::min(features_per_split, d);
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
    }
};

inline void to_json(nlohmann::json& j, const ForestConfig& c) {
    j = {{"n_trees", c.n_trees},
         {"min_samples_split", c.min_samples_split},
         {"features_per_split", c.features_per_split},
         {"bootstrap", c.bootstrap},
         {"seed", c.seed}};
    j["max_depth"] = c.max_depth ? nlohmann::json(*c.max_depth) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, ForestConfig& c) {
    ForestConfig d;
    c.n_trees = j.value("n_trees", d.n_trees);
    c.min_samples_split = j.value("min_samples_split", d.min_samples_split);
    c.features_per_split = j.value("features_per_split", d.features_per_split);
    c.bootstrap = j.value("bootstrap", d.bootstrap);
    c.seed = j.value("seed", d.seed);
    c.max_depth.reset();
    if (j.contains("max_depth") && !j.at("max_depth").is_null()) c.max_depth = j.at("max_depth").get<std::size_t>();
}

/// Internal nodes send x[feature] <= threshold left. Leaves have feature -1.
struct Node {
    std::int64_t feature = -1;
    double threshold = 0.0;
    std::int64_t left = -1;
    std::int64_t right = -1;
    std::size_t count0 = 0;
    std::size_t count1 = 0;

    bool is_leaf() const { return feature < 0; }
    double fraction1() const { return static_cast<double>(count1) / static_cast<double>(count0 + count1); }
};

struct Tree {
    std::vector<Node> nodes;

    const Node& leaf_for(std::span<const double> x) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const Node& n = nodes[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[i];
    }
};

struct ForestModel {
    std::size_t n_features = 0;
    std::vector<Tree> trees;
};

namespace detail {

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;
    bool found = false;
};

inline double gini_weighted(double c0, double c1) {
    const double n = c0 + c1;
    return n > 0 ? n - (c0 * c0 + c1 * c1) / n : 0.0; // n * gini
}

/// Features stored column-major for split search.
struct ColumnData {
    std::size_t n = 0;
    std::vector<std::vector<double>> columns;

    explicit ColumnData(const std::vector<PairFeatures>& x) : n(x.size()), columns(x.front().size()) {
        for (auto& c : columns) c.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < columns.size(); ++f) columns[f][i] = x[i][f];
        }
    }
};

class TreeBuilder {
public:
    TreeBuilder(const ColumnData& x, std::span<const int> y, const ForestConfig& c, Rng& rng)
        : x_(x), y_(y), config_(c), rng_(rng), d_(x.columns.size()) {}

    Tree build(std::vector<std::size_t> samples) {
        samples_ = std::move(samples);
        tree_.nodes.clear();
        grow(0, samples_.size(), 0);
        return std::move(tree_);
    }

private:
    struct Group {
        double value;
        double c0, c1;
    };

    std::size_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t id = tree_.nodes.size();
        tree_.nodes.emplace_back();
        std::size_t c1 = 0;
        for (std::size_t i = begin; i < end; ++i) c1 += static_cast<std::size_t>(y_[samples_[i]]);
        tree_.nodes[id].count1 = c1;
        tree_.nodes[id].count0 = (end - begin) - c1;
        const bool pure = c1 == 0 || c1 == end - begin;
        const bool too_deep = config_.max_depth && depth >= *config_.max_depth;
        if (pure || too_deep || end - begin < config_.min_samples_split) return id;

        const Split s = best_split(begin, end);
        if (!s.found) return id;
        const auto& col = x_.columns[s.feature];
        const auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                        samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::size_t k) { return col[k] <= s.threshold; });
        const auto split_at = static_cast<std::size_t>(mid - samples_.begin());
        tree_.nodes[id].feature = static_cast<std::int64_t>(s.feature);
        tree_.nodes[id].threshold = s.threshold;
        const std::size_t left = grow(begin, split_at, depth + 1);
        tree_.nodes[id].left = static_cast<std::int64_t>(left);
        const std::size_t right = grow(split_at, end, depth + 1);
        tree_.nodes[id].right = static_cast<std::int64_t>(right);
        return id;
    }

    // Examines mtry random features; if none of them varies, keeps drawing
    // until a varying one is found or all are exhausted.
    Split best_split(std::size_t begin, std::size_t end) {
        features_.resize(d_);
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        rng_.shuffle(features_);
        const std::size_t mtry = config_.mtry(d_);
        Split best;
        std::size_t examined_varying = 0;
        for (std::size_t fi = 0; fi < features_.size(); ++fi) {
            if (fi >= mtry && examined_varying > 0) break;
            if (evaluate(features_[fi], begin, end, best)) ++examined_varying;
        }
        return best;
    }

    // Sorted distinct values of the feature with per-class counts. Zeros are
    // counted without sorting, which keeps sparse columns cheap.
    void collect_groups(std::size_t f, std::size_t begin, std::size_t end) {
        const auto& col = x_.columns[f];
        nonzero_.clear();
        double z0 = 0, z1 = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t k = samples_[i];
            const double v = col[k];
            if (v == 0.0) {
                (y_[k] ? z1 : z0) += 1;
            } else {
                nonzero_.emplace_back(v, y_[k]);
            }
        }
        std::sort(nonzero_.begin(), nonzero_.end());
        groups_.clear();
        bool zero_placed = z0 + z1 == 0;
        for (const auto& [v, lab] : nonzero_) {
            if (!zero_placed && v > 0.0) {
                groups_.push_back({0.0, z0, z1});
                zero_placed = true;
            }
            if (groups_.empty() || groups_.back().value != v) groups_.push_back({v, 0, 0});
            (lab ? groups_.back().c1 : groups_.back().c0) += 1;
        }
        if (!zero_placed) groups_.push_back({0.0, z0, z1});
    }

    bool evaluate(std::size_t f, std::size_t begin, std::size_t end, Split& best) {
        collect_groups(f, begin, end);
        if (groups_.size() < 2) return false;
        double total0 = 0, total1 = 0;
        for (const auto& g : groups_) {
            total0 += g.c0;
            total1 += g.c1;
        }
        double l0 = 0, l1 = 0;
        for (std::size_t i = 0; i + 1 < groups_.size(); ++i) {
            l0 += groups_[i].c0;
            l1 += groups_[i].c1;
            const double imp = gini_weighted(l0, l1) + gini_weighted(total0 - l0, total1 - l1);
            const double lo = groups_[i].value, hi = groups_[i + 1].value;
            double thr = 0.5 * (lo + hi);
            if (!(thr < hi)) thr = lo;
            const bool better = !best.found || imp < best.impurity ||
                                (imp == best.impurity &&
                                 (thr < best.threshold || (thr == best.threshold && f < best.feature)));
            if (better) best = {f, thr, imp, true};
        }
        return true;
    }

    const ColumnData& x_;
    std::span<const int> y_;
    const ForestConfig& config_;
    Rng& rng_;
    std::size_t d_;
    std::vector<std::size_t> samples_;
    std::vector<std::size_t> features_;
    std::vector<std::pair<double, int>> nonzero_;
    std::vector<Group> groups_;
    Tree tree_;
};

} // namespace detail

/// Each tree draws its bootstrap sample and feature subsets from its own
/// stream derive_seed(seed, tree index).
inline ForestModel fit_forest(const std::vector<PairFeatures>& features, std::span<const int> labels,
                              const ForestConfig& config) {
    config.validate();
    if (features.empty()) fail(ErrorKind::fit, "fit_forest: no training samples");
    if (features.size() != labels.size()) fail(ErrorKind::shape, "fit_forest: features and labels differ in length");
    const std::size_t d = features.front().size();
    if (d == 0) fail(ErrorKind::fit, "fit_forest: zero-dimensional features");
    for (const auto& f : features) {
        if (f.size() != d) fail(ErrorKind::shape, "fit_forest: inconsistent feature dimensions");
        for (double v : f) {
            if (!std::isfinite(v)) fail(ErrorKind::input, "fit_forest: non-finite feature");
        }
    }
    for (int y : labels) {
        if (y != 0 && y != 1) fail(ErrorKind::input, "fit_forest: labels must be 0 or 1");
    }
    ForestModel model;
    model.n_features = d;
    const std::size_t n = features.size();
    const detail::ColumnData columns(features);
    for (std::size_t t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(config.seed, t));
        std::vector<std::size_t> samples(n);
        if (config.bootstrap) {
            for (auto& s : samples) s = rng.below(n);
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        detail::TreeBuilder builder(columns, labels, config, rng);
        model.trees.push_back(builder.build(std::move(samples)));
    }
    return model;
}

/// Mean over trees of the class-1 fraction in the reached leaf.
inline double predict_proba(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.n_features) {
        fail(ErrorKind::shape, "predict_proba: expected " + std::to_string(model.n_features) + " features, got " +
                                   std::to_string(x.size()));
    }
    if (model.trees.empty()) fail(ErrorKind::fit, "predict_proba: model has no trees");
    double sum = 0.0;
    for (const auto& t : model.trees) sum += t.leaf_for(x).fraction1();
    return sum / static_cast<double>(model.trees.size());
}

inline nlohmann::json to_json(const ForestModel& m) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) {
                nodes.push_back({{"counts", {n.count0, n.count1}}});
            } else {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"counts", {n.count0, n.count1}}});
            }
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    return {{"n_features", m.n_features}, {"classes", {0, 1}}, {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
    ForestModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt.at("nodes")) {
            Node n;
            n.count0 = jn.at("counts").at(0).get<std::size_t>();
            n.count1 = jn.at("counts").at(1).get<std::size_t>();
            if (jn.contains("feature")) {
                n.feature = jn.at("feature").get<std::int64_t>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<std::int64_t>();
                n.right = jn.at("right").get<std::int64_t>();
            }
            t.nodes.push_back(n);
        }
        const auto count = static_cast<std::int64_t>(t.nodes.size());
        for (std::int64_t i = 0; i < count; ++i) {
            const Node& n = t.nodes[static_cast<std::size_t>(i)];
            if (n.is_leaf()) {
                if (n.count0 + n.count1 == 0) fail(ErrorKind::integrity, "forest: empty leaf");
                continue;
            }
            if (n.left <= i || n.left >= count || n.right <= i || n.right >= count ||
                static_cast<std::size_t>(n.feature) >= m.n_features) {
                fail(ErrorKind::integrity, "forest: malformed node");
            }
        }
        if (t.nodes.empty()) fail(ErrorKind::integrity, "forest: empty tree");
        m.trees.push_back(std::move(t));
    }
    return m;
}

} // namespace jobmatch::forest
