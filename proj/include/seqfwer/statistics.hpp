#pragma once

// Sequential test statistics T_n evaluated on stream prefixes: exact one-sided
// Wilcoxon signed-rank p-values (negated, so larger is stronger evidence) and
// the lambda-scaled pooled two-sample t.

#include "seqfwer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace seqfwer {

// Column-major observations: streams[s][i] is observation i+1 of stream s.
struct StreamSet {
    std::vector<std::vector<double>> streams;
    std::vector<std::string> names;

    StreamSet() = default;
    explicit StreamSet(std::vector<std::vector<double>> s, std::vector<std::string> n = {})
        : streams(std::move(s)), names(std::move(n)) {}

    std::size_t count() const noexcept { return streams.size(); }
    std::size_t length(std::size_t s) const { return streams.at(s).size(); }

    std::span<const double> prefix(std::size_t s, std::size_t n) const {
        const auto& v = streams.at(s);
        if (v.size() < n) throw data_error(s, v.size(), n);
        return {v.data(), n};
    }
};

// ---------------------------------------------------------------------------
// Exact null distribution of the signed-rank sum W.

constexpr std::size_t signed_rank_max_n = 200;

class SignedRankTable {
public:
    SignedRankTable() = default;
    SignedRankTable(std::size_t n, std::vector<double> tail) : n_(n), tail_(std::move(tail)) {}

    std::size_t n() const noexcept { return n_; }
    std::size_t max_sum() const noexcept { return n_ * (n_ + 1) / 2; }

    // P(W >= w); 1 for w <= 0 and 0 above the maximal sum.
    double tail(long long w) const {
        if (w <= 0) return 1.0;
        if (static_cast<std::size_t>(w) > max_sum()) return 0.0;
        return tail_[static_cast<std::size_t>(w)];
    }
    double point(std::size_t w) const {
        if (w > max_sum()) return 0.0;
        return tail_[w] - (w + 1 <= max_sum() ? tail_[w + 1] : 0.0);
    }
    const std::vector<double>& tail_values() const noexcept { return tail_; }

private:
    std::size_t n_ = 0;
    std::vector<double> tail_;
};

namespace detail {

// Point masses for n = 1..nmax via pm_n(w) = (pm_{n-1}(w) + pm_{n-1}(w-n)) / 2.
inline std::vector<SignedRankTable> build_signed_rank_tables(std::size_t nmax) {
    std::vector<SignedRankTable> out;
    out.reserve(nmax + 1);
    out.emplace_back(0, std::vector<double>{1.0});
    std::vector<double> pm{1.0};
    for (std::size_t n = 1; n <= nmax; ++n) {
        std::vector<double> next(pm.size() + n, 0.0);
        for (std::size_t w = 0; w < pm.size(); ++w) {
            next[w] += 0.5 * pm[w];
            next[w + n] += 0.5 * pm[w];
        }
        pm = std::move(next);
        std::vector<double> tail(pm.size());
        double acc = 0.0;
        for (std::size_t w = pm.size(); w-- > 0;) {
            acc += pm[w];
            tail[w] = acc;
        }
        tail[0] = 1.0;
        out.emplace_back(n, std::move(tail));
    }
    return out;
}

inline const std::vector<SignedRankTable>& signed_rank_tables() {
    static const std::vector<SignedRankTable> tables = build_signed_rank_tables(signed_rank_max_n);
    return tables;
}

} // namespace detail

inline const SignedRankTable& signed_rank_table(std::size_t n) {
    if (n < 1 || n > signed_rank_max_n)
        throw validation_error("signed-rank table needs 1 <= n <= " + std::to_string(signed_rank_max_n) + ", got " +
                               std::to_string(n));
    return detail::signed_rank_tables()[n];
}

namespace detail {

inline bool magnitudes_tie(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Twice the signed-rank sum of the positive entries, with midranks for tied magnitudes.
inline std::size_t doubled_positive_rank_sum(std::span<const double> d) {
    const std::size_t n = d.size();
    thread_local std::vector<std::size_t> order;
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::fabs(d[a]) < std::fabs(d[b]); });
    std::size_t w2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && magnitudes_tie(std::fabs(d[order[j + 1]]), std::fabs(d[order[i]]))) ++j;
        // doubled midrank of positions i..j (0-based) is (i+1)+(j+1)
        const std::size_t r2 = i + j + 2;
        for (std::size_t t = i; t <= j; ++t)
            if (d[order[t]] > 0) w2 += r2;
        i = j + 1;
    }
    return w2;
}

inline bool is_zero_difference(double x) { return std::fabs(x) <= 1e-12; }

} // namespace detail

// One-sided p = P(W >= w_obs) under the symmetric null, exact table, midranks for ties.
inline double signed_rank_p(std::span<const double> differences) {
    const std::size_t n = differences.size();
    if (n < 1) throw validation_error("signed-rank p-value needs at least one difference");
    for (std::size_t i = 0; i < n; ++i)
        if (detail::is_zero_difference(differences[i]))
            throw validation_error("difference " + std::to_string(i + 1) +
                                   " is zero; remove tied pairs before computing signed-rank p-values");
    const auto w2 = detail::doubled_positive_rank_sum(differences);
    // W is integer-valued, so P(W >= w) for half-integer w is P(W >= ceil(w)).
    const auto w = static_cast<long long>((w2 + 1) / 2);
    return signed_rank_table(n).tail(w);
}

// Per-subject contrast sum_s weights[s] * streams[s][i] for i < n.
inline std::vector<double> contrast_differences(std::span<const double> weights,
                                                const std::vector<std::span<const double>>& streams, std::size_t n) {
    if (weights.size() != streams.size())
        throw validation_error("contrast has " + std::to_string(weights.size()) + " weights but " +
                               std::to_string(streams.size()) + " streams were supplied");
    std::vector<double> d(n, 0.0);
    for (std::size_t s = 0; s < streams.size(); ++s) {
        if (streams[s].size() < n) throw data_error(s, streams[s].size(), n);
        for (std::size_t i = 0; i < n; ++i) d[i] += weights[s] * streams[s][i];
    }
    return d;
}

// T_n = -p for the contrast formed from the first n subjects.
inline double neg_p_statistic(std::span<const double> weights, const std::vector<std::span<const double>>& streams,
                              std::size_t n) {
    if (n < 1) throw validation_error("signed-rank statistic needs n >= 1");
    const auto d = contrast_differences(weights, streams, n);
    return -signed_rank_p(d);
}

// Pooled t for mean(treatment) <= lambda * mean(control):
// (ybar_t - lambda ybar_c) / (s_p sqrt(1/n_t + lambda^2/n_c)).
inline double two_sample_t(std::span<const double> treatment, std::span<const double> control, double lambda = 1.0) {
    if (treatment.size() < 2 || control.size() < 2)
        throw validation_error("two-sample t needs at least 2 observations per group");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw validation_error("lambda must lie in (0, 1]");
    const auto nt = static_cast<double>(treatment.size());
    const auto nc = static_cast<double>(control.size());
    const double mt = std::accumulate(treatment.begin(), treatment.end(), 0.0) / nt;
    const double mc = std::accumulate(control.begin(), control.end(), 0.0) / nc;
    double ss = 0.0;
    for (double x : treatment) ss += (x - mt) * (x - mt);
    for (double x : control) ss += (x - mc) * (x - mc);
    const double var = ss / (nt + nc - 2.0);
    if (!(var > 0.0)) throw validation_error("two-sample t: pooled variance is zero (degenerate data)");
    return (mt - lambda * mc) / std::sqrt(var * (1.0 / nt + lambda * lambda / nc));
}

// ---------------------------------------------------------------------------

enum class StatisticKind { signed_rank_neg_p, two_sample_t, custom };

inline const char* to_string(StatisticKind k) {
    switch (k) {
    case StatisticKind::signed_rank_neg_p: return "signed_rank_neg_p";
    case StatisticKind::two_sample_t: return "two_sample_t";
    case StatisticKind::custom: return "custom";
    }
    return "?";
}

// A deterministic map from stream prefixes of length n to a scalar.
class SequentialStatistic {
public:
    using CustomFn = std::function<double(const StreamSet&, std::size_t)>;

    static SequentialStatistic signed_rank(std::vector<std::size_t> streams, std::vector<double> weights) {
        if (streams.size() != weights.size())
            throw validation_error("signed-rank contrast: stream and weight counts differ");
        if (streams.empty()) throw validation_error("signed-rank contrast needs at least one stream");
        if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; }))
            throw validation_error("signed-rank contrast weights are all zero");
        SequentialStatistic s(StatisticKind::signed_rank_neg_p, 1);
        s.streams_ = std::move(streams);
        s.weights_ = std::move(weights);
        return s;
    }

    static SequentialStatistic t_statistic(std::size_t treatment, std::size_t control, double lambda = 1.0) {
        if (!(lambda > 0.0 && lambda <= 1.0)) throw validation_error("lambda must lie in (0, 1]");
        SequentialStatistic s(StatisticKind::two_sample_t, 2);
        s.streams_ = {treatment, control};
        s.lambda_ = lambda;
        return s;
    }

    static SequentialStatistic custom(std::vector<std::size_t> streams, std::size_t n_min, CustomFn fn,
                                      std::string name = "custom") {
        SequentialStatistic s(StatisticKind::custom, n_min);
        s.streams_ = std::move(streams);
        s.fn_ = std::make_shared<CustomFn>(std::move(fn));
        s.name_ = std::move(name);
        return s;
    }

    // sqrt(n) (mean - mu0) / sigma on one stream.
    static SequentialStatistic standardized_mean(std::size_t stream, double mu0 = 0.0, double sigma = 1.0) {
        return custom(
            {stream}, 1,
            [stream, mu0, sigma](const StreamSet& data, std::size_t n) {
                const auto x = data.prefix(stream, n);
                const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
                return std::sqrt(static_cast<double>(n)) * (m - mu0) / sigma;
            },
            "standardized_mean");
    }

    // Running sum of one stream.
    static SequentialStatistic running_sum(std::size_t stream) {
        return custom(
            {stream}, 1,
            [stream](const StreamSet& data, std::size_t n) {
                const auto x = data.prefix(stream, n);
                return std::accumulate(x.begin(), x.end(), 0.0);
            },
            "running_sum");
    }

    // No data of its own: +inf, so the hypothesis is rejected as soon as its gate opens.
    static SequentialStatistic gate_only() {
        return custom({}, 0, [](const StreamSet&, std::size_t) { return std::numeric_limits<double>::infinity(); },
                      "gate_only");
    }

    StatisticKind kind() const noexcept { return kind_; }
    std::size_t n_min() const noexcept { return n_min_; }
    const std::vector<std::size_t>& streams() const noexcept { return streams_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double lambda() const noexcept { return lambda_; }
    const std::string& name() const noexcept { return name_; }

    double evaluate(const StreamSet& data, std::size_t n) const {
        if (n < n_min_ || (n == 0 && kind_ != StatisticKind::custom))
            throw validation_error(std::string(to_string(kind_)) + " statistic needs n >= " +
                                   std::to_string(std::max<std::size_t>(n_min_, 1)) + ", got " + std::to_string(n));
        for (auto s : streams_) {
            if (s >= data.count()) throw data_error("statistic references stream " + std::to_string(s) +
                                                    " but only " + std::to_string(data.count()) + " exist");
            if (data.length(s) < n) throw data_error(s, data.length(s), n);
        }
        switch (kind_) {
        case StatisticKind::signed_rank_neg_p: {
            std::vector<std::span<const double>> prefixes;
            prefixes.reserve(streams_.size());
            for (auto s : streams_) prefixes.push_back(data.prefix(s, n));
            return neg_p_statistic(weights_, prefixes, n);
        }
        case StatisticKind::two_sample_t:
            return two_sample_t(data.prefix(streams_[0], n), data.prefix(streams_[1], n), lambda_);
        case StatisticKind::custom: return (*fn_)(data, n);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

private:
    SequentialStatistic(StatisticKind kind, std::size_t n_min) : kind_(kind), n_min_(n_min), name_(to_string(kind)) {}

    StatisticKind kind_;
    std::size_t n_min_;
    std::vector<std::size_t> streams_;
    std::vector<double> weights_;
    double lambda_ = 1.0;
    std::shared_ptr<const CustomFn> fn_;
    std::string name_;
};

inline double evaluate(const SequentialStatistic& statistic, const StreamSet& data, std::size_t n) {
    return statistic.evaluate(data, n);
}

} // namespace seqfwer
