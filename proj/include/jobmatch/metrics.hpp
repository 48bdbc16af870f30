// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobmatch/error.hpp"
#include "jobmatch/rng.hpp"

namespace jobmatch::eval {

struct ScoredPair {
    std::string resume_id;
    std::string vacancy_id;
    double score = 0.0;
    int label = 0;
    std::string run_id;
};

namespace detail {

inline void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) fail(ErrorKind::shape, "scores and labels differ in length");
    for (double s : scores) {
        if (!std::isfinite(s)) fail(ErrorKind::input, "scores must be finite");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) fail(ErrorKind::input, "labels must be 0 or 1");
    }
}

} // namespace detail

inline std::vector<double> scores_of(std::span<const ScoredPair> scored) {
    std::vector<double> s;
    s.reserve(scored.size());
    for (const auto& p : scored) s.push_back(p.score);
    return s;
}

inline std::vector<int> labels_of(std::span<const ScoredPair> scored) {
    std::vector<int> y;
    y.reserve(scored.size());
    for (const auto& p : scored) y.push_back(p.label);
    return y;
}

/// Mann-Whitney form of ROC-AUC: share of (positive, negative) pairs ordered
/// correctly, ties counted one half. Computed from tie-averaged ranks in
/// doubled integer arithmetic, so the result is exact.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    detail::check_inputs(scores, labels);
    const std::int64_t n = static_cast<std::int64_t>(scores.size());
    std::int64_t n_pos = 0;
    for (int y : labels) n_pos += y;
    const std::int64_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) fail(ErrorKind::undefined_metric, "roc_auc needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::int64_t pos_rank2 = 0; // sum of doubled ranks of positives
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const auto doubled = static_cast<std::int64_t>(i + 1 + j); // 2 * mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) pos_rank2 += doubled;
        }
        i = j;
    }
    const std::int64_t u2 = pos_rank2 - n_pos * (n_pos + 1);
    return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

inline double roc_auc(std::span<const ScoredPair> scored) {
    const auto s = scores_of(scored);
    const auto y = labels_of(scored);
    return roc_auc(s, y);
}

struct PrfResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Macro-averaged precision, recall and F1; a score above `threshold`
/// predicts class 1. Undefined ratios count as 0.
inline PrfResult macro_prf(std::span<const double> scores, std::span<const int> labels, double threshold) {
    detail::check_inputs(scores, labels);
    if (scores.empty()) fail(ErrorKind::input, "macro_prf needs at least one sample");
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > threshold;
        if (labels[i] == 1) {
            (pred ? tp : fn) += 1;
        } else {
            (pred ? fp : tn) += 1;
        }
    }
    auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    auto f1 = [](double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; };
    const double p1 = ratio(tp, tp + fp), r1 = ratio(tp, tp + fn);
    const double p0 = ratio(tn, tn + fn), r0 = ratio(tn, tn + fp);
    return {(p0 + p1) / 2, (r0 + r1) / 2, (f1(p0, r0) + f1(p1, r1)) / 2};
}

inline PrfResult macro_prf(std::span<const ScoredPair> scored, double threshold) {
    const auto s = scores_of(scored);
    const auto y = labels_of(scored);
    return macro_prf(s, y, threshold);
}

// ---------------------------------------------------------------------------
// Student's t

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double x, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - bt * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a t statistic with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return std::clamp(regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5), 0.0, 1.0);
}

inline constexpr double kDefaultAlpha = 0.01;

struct SignificanceResult {
    std::string run_a;
    std::string run_b;
    std::string method = "student_t";
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
    double alpha = kDefaultAlpha;
    bool significant = false;
};

/// Independent two-sample Student's t-test with pooled variance.
inline SignificanceResult t_test_independent(std::span<const double> a, std::span<const double> b,
                                             double alpha = kDefaultAlpha) {
    if (a.size() < 2 || b.size() < 2) fail(ErrorKind::degenerate_test, "t-test needs at least 2 samples per group");
    auto mean = [](std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); };
    auto ss = [](std::span<const double> x, double m) {
        double s = 0.0;
        for (double v : x) s += (v - m) * (v - m);
        return s;
    };
    const double ma = mean(a), mb = mean(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double df = na + nb - 2.0;
    const double pooled = (ss(a, ma) + ss(b, mb)) / df;
    if (!(pooled > 0.0)) fail(ErrorKind::degenerate_test, "t-test: pooled variance is zero");
    SignificanceResult r;
    r.t_statistic = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    r.degrees_of_freedom = df;
    r.p_value = student_t_two_sided_p(r.t_statistic, df);
    r.alpha = alpha;
    r.significant = r.p_value < alpha;
    return r;
}

/// Paired bootstrap over examples of the ROC-AUC difference between two
/// score vectors on the same labels. p is the two-sided share of resampled
/// differences on either side of zero; t is mean / sd of the differences.
inline SignificanceResult bootstrap_auc_test(std::span<const double> scores_a, std::span<const double> scores_b,
                                             std::span<const int> labels, std::size_t n_resamples, std::uint64_t seed,
                                             double alpha = kDefaultAlpha) {
    if (scores_a.size() != labels.size() || scores_b.size() != labels.size()) {
        fail(ErrorKind::shape, "bootstrap: score vectors must match labels");
    }
    if (n_resamples < 2) fail(ErrorKind::config, "bootstrap: need at least 2 resamples");
    roc_auc(scores_a, labels); // validates both classes are present
    Rng rng(seed);
    const std::size_t n = labels.size();
    std::vector<double> sa(n), sb(n), diffs;
    std::vector<int> y(n);
    diffs.reserve(n_resamples);
    while (diffs.size() < n_resamples) {
        int positives = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = rng.below(n);
            sa[i] = scores_a[k];
            sb[i] = scores_b[k];
            y[i] = labels[k];
            positives += y[i];
        }
        if (positives == 0 || positives == static_cast<int>(n)) continue;
        diffs.push_back(roc_auc(sa, y) - roc_auc(sb, y));
    }
    double le = 0, ge = 0, sum = 0;
    for (double d : diffs) {
        le += d <= 0.0;
        ge += d >= 0.0;
        sum += d;
    }
    const double m = sum / diffs.size();
    double var = 0.0;
    for (double d : diffs) var += (d - m) * (d - m);
    var /= static_cast<double>(diffs.size() - 1);
    SignificanceResult r;
    r.method = "bootstrap_auc";
    r.t_statistic = var > 0 ? m / std::sqrt(var) : 0.0;
    r.degrees_of_freedom = static_cast<double>(diffs.size() - 1);
    r.p_value = std::min(1.0, 2.0 * std::min(le, ge) / static_cast<double>(diffs.size()));
    r.alpha = alpha;
    r.significant = r.p_value < alpha;
    return r;
}

inline nlohmann::json to_json(const SignificanceResult& r) {
    return {{"run_a", r.run_a},
            {"run_b", r.run_b},
            {"method", r.method},
            {"t_statistic", r.t_statistic},
            {"degrees_of_freedom", r.degrees_of_freedom},
            {"p_value", r.p_value},
            {"alpha", r.alpha},
            {"significant", r.significant}};
}

// ---------------------------------------------------------------------------
// Exports

/// Per-label histograms over shared bin edges spanning the observed scores.
struct DensityHistogram {
    std::vector<double> edges; ///< n_bins + 1 values
    std::vector<std::size_t> negative;
    std::vector<std::size_t> positive;

    std::size_t n_bins() const { return negative.size(); }

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(17);
        out << "bin,lower,upper,count_label0,count_label1\n";
        for (std::size_t i = 0; i < n_bins(); ++i) {
            out << i << ',' << edges[i] << ',' << edges[i + 1] << ',' << negative[i] << ',' << positive[i] << '\n';
        }
        return out.str();
    }
};

inline DensityHistogram density_export(std::span<const double> scores, std::span<const int> labels,
                                       std::size_t n_bins = 50) {
    detail::check_inputs(scores, labels);
    if (scores.empty()) fail(ErrorKind::input, "density_export needs at least one sample");
    if (n_bins == 0) fail(ErrorKind::config, "density_export needs at least one bin");
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    DensityHistogram h;
    if (lo == hi) n_bins = 1;
    const double width = (hi - lo) / static_cast<double>(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) h.edges.push_back(lo + width * static_cast<double>(i));
    h.edges.push_back(hi);
    h.negative.assign(n_bins, 0);
    h.positive.assign(n_bins, 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::size_t bin = 0;
        if (width > 0) {
            bin = std::min(n_bins - 1, static_cast<std::size_t>(std::floor((scores[i] - lo) / width)));
        }
        ++(labels[i] == 1 ? h.positive : h.negative)[bin];
    }
    return h;
}

inline DensityHistogram density_export(std::span<const ScoredPair> scored, std::size_t n_bins = 50) {
    const auto s = scores_of(scored);
    const auto y = labels_of(scored);
    return density_export(s, y, n_bins);
}

struct Heatmap {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> values;

    std::string to_csv() const {
        auto quote = [](const std::string& s) {
            std::string q = "\"";
            for (char c : s) {
                if (c == '"') q += '"';
                q += c;
            }
            return q + "\"";
        };
        std::ostringstream out;
        out.precision(17);
        out << "\"\"";
        for (const auto& c : col_labels) out << ',' << quote(c);
        out << '\n';
        for (std::size_t i = 0; i < row_labels.size(); ++i) {
            out << quote(row_labels[i]);
            for (double v : values[i]) out << ',' << v;
            out << '\n';
        }
        return out.str();
    }
};

using TextScorer = std::function<double(const std::string&, const std::string&)>;

inline Heatmap heatmap_export(const std::vector<std::string>& left, const std::vector<std::string>& right,
                              const TextScorer& scorer) {
    if (left.empty() || right.empty()) fail(ErrorKind::input, "heatmap_export needs non-empty text lists");
    Heatmap h{left, right, {}};
    for (const auto& l : left) {
        std::vector<double> row;
        row.reserve(right.size());
        for (const auto& r : right) row.push_back(scorer(l, r));
        h.values.push_back(std::move(row));
    }
    return h;
}

} // namespace jobmatch::eval
