#pragma once

// Monte Carlo critical values. A path sampler returns one replicate of
// {T_n : n in N}; crossing "T_n >= B for some n" reduces to max_n T_n >= B,
// so every rung is an empirical tail quantile of the max-path distribution.

#include "seqfwer/core.hpp"
#include "seqfwer/estimate.hpp"
#include "seqfwer/parallel.hpp"
#include "seqfwer/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace seqfwer {

template <class S>
concept PathSampler = requires(const S& s, const SampleSchedule& schedule, std::uint64_t seed) {
    { s(schedule, seed) } -> std::convertible_to<std::vector<double>>;
};

using AnyPathSampler = std::function<std::vector<double>(const SampleSchedule&, std::uint64_t)>;

struct CalibrationSpec {
    double alpha = 0.05;
    std::optional<double> beta;
    std::size_t reps = 10000;
    std::uint64_t seed = 0;
    std::size_t k = 1;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must lie in (0, 1)");
        if (beta && !(*beta > 0.0 && *beta < 1.0)) throw validation_error("beta must lie in (0, 1)");
        if (reps < 1000) throw validation_error("calibration needs reps >= 1000");
        if (k < 1) throw validation_error("calibration needs k >= 1");
    }
};

template <PathSampler S>
double max_path(const S& sampler, const SampleSchedule& schedule, std::uint64_t seed) {
    const std::vector<double> path = sampler(schedule, seed);
    if (path.empty()) throw validation_error("sampler returned an empty path");
    return *std::max_element(path.begin(), path.end());
}

template <PathSampler S>
double min_path(const S& sampler, const SampleSchedule& schedule, std::uint64_t seed) {
    const std::vector<double> path = sampler(schedule, seed);
    if (path.empty()) throw validation_error("sampler returned an empty path");
    return *std::min_element(path.begin(), path.end());
}

// Sorted max-path (or min-path) values of reps replicates seeded by derive_seed(seed, i).
template <PathSampler S>
std::vector<double> draw_extremes(const S& sampler, const SampleSchedule& schedule, std::size_t reps,
                                  std::uint64_t seed, bool maxima = true) {
    std::vector<double> out(reps);
    parallel_for(reps, [&](std::size_t i) {
        const auto s = derive_seed(seed, i);
        out[i] = maxima ? max_path(sampler, schedule, s) : min_path(sampler, schedule, s);
    });
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline std::size_t allowed_hits(std::size_t reps, double q) {
    return static_cast<std::size_t>(std::floor(q * static_cast<double>(reps) + 1e-9));
}

inline void require_resolution(std::size_t reps, double q) {
    if (static_cast<double>(reps) * q < 10.0)
        throw precision_error("reps=" + std::to_string(reps) + " cannot resolve a tail probability of " +
                              std::to_string(q) + " (need reps*q >= 10)");
}

} // namespace detail

// Smallest sample value v with #{M >= v} <= floor(q * R); above the sample maximum if none qualifies.
inline double upper_threshold(const std::vector<double>& sorted_maxima, double q) {
    const std::size_t r = sorted_maxima.size();
    if (r == 0) throw validation_error("no replicates");
    const std::size_t allowed = detail::allowed_hits(r, q);
    if (allowed == 0) return std::nextafter(sorted_maxima.back(), INFINITY);
    if (allowed >= r) return sorted_maxima.front();
    const std::size_t i = r - allowed;
    const double v = sorted_maxima[i];
    if (sorted_maxima[i - 1] < v) return v;
    auto next = std::upper_bound(sorted_maxima.begin(), sorted_maxima.end(), v);
    if (next == sorted_maxima.end()) return std::nextafter(sorted_maxima.back(), INFINITY);
    return *next;
}

// Largest sample value v with #{m <= v} <= floor(q * R); below the sample minimum if none qualifies.
inline double lower_threshold(const std::vector<double>& sorted_minima, double q) {
    const std::size_t r = sorted_minima.size();
    if (r == 0) throw validation_error("no replicates");
    const std::size_t allowed = detail::allowed_hits(r, q);
    if (allowed == 0) return std::nextafter(sorted_minima.front(), -INFINITY);
    if (allowed >= r) return sorted_minima.back();
    const std::size_t i = allowed - 1;
    const double v = sorted_minima[i];
    if (sorted_minima[i + 1] > v) return v;
    auto first = std::lower_bound(sorted_minima.begin(), sorted_minima.end(), v);
    if (first == sorted_minima.begin()) return std::nextafter(sorted_minima.front(), -INFINITY);
    return *(first - 1);
}

// B_s with marginal crossing probability <= alpha/(k-s+1), s = 1..k.
template <PathSampler S>
CriticalLadder calibrate_ladder(const S& sampler, const SampleSchedule& schedule, const CalibrationSpec& spec) {
    spec.validate();
    detail::require_resolution(spec.reps, spec.alpha / static_cast<double>(spec.k));
    const auto maxima = draw_extremes(sampler, schedule, spec.reps, spec.seed, true);
    CriticalLadder ladder;
    for (std::size_t s = 1; s <= spec.k; ++s)
        ladder.upper.push_back(upper_threshold(maxima, spec.alpha / static_cast<double>(spec.k - s + 1)));
    return ladder;
}

template <PathSampler S>
double calibrate_single(const S& sampler, const SampleSchedule& schedule, double alpha, std::size_t reps,
                        std::uint64_t seed) {
    CalibrationSpec spec{alpha, std::nullopt, reps, seed, 1};
    return calibrate_ladder(sampler, schedule, spec).upper.front();
}

// B-ladder from null max-paths, A-ladder from alternative min-paths; the
// opposite boundary's truncation is ignored, which only enlarges each event.
template <PathSampler S0, PathSampler S1>
CriticalLadder calibrate_dual(const S0& null_sampler, const S1& alt_sampler, const SampleSchedule& schedule,
                              const CalibrationSpec& spec) {
    spec.validate();
    if (!spec.beta) throw config_error("dual calibration needs beta");
    detail::require_resolution(spec.reps, std::min(spec.alpha, *spec.beta) / static_cast<double>(spec.k));
    CriticalLadder ladder = calibrate_ladder(null_sampler, schedule, spec);
    const auto minima = draw_extremes(alt_sampler, schedule, spec.reps, derive_seed(spec.seed, 0xA17ULL), false);
    std::vector<double> lower;
    for (std::size_t s = 1; s <= spec.k; ++s)
        lower.push_back(lower_threshold(minima, *spec.beta / static_cast<double>(spec.k - s + 1)));
    if (!(lower.back() < ladder.upper.back()))
        throw infeasible_error("dual calibration infeasible: A_k = " + std::to_string(lower.back()) +
                               " >= B_k = " + std::to_string(ladder.upper.back()) +
                               " (alpha, beta and separation incompatible at this schedule)");
    ladder.lower = std::move(lower);
    return ladder;
}

// Fraction of fresh replicates whose path reaches threshold (>=), or for lower
// boundaries falls to it (<=).
template <PathSampler S>
EstimateReport estimate_crossing(const S& sampler, const SampleSchedule& schedule, double threshold, double bound,
                                 std::size_t reps, std::uint64_t seed, bool upper = true, std::string name = {}) {
    std::vector<char> hit(reps, 0);
    parallel_for(reps, [&](std::size_t i) {
        const auto s = derive_seed(seed, i);
        hit[i] = upper ? (max_path(sampler, schedule, s) >= threshold) : (min_path(sampler, schedule, s) <= threshold);
    });
    const auto hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), char{1}));
    return make_estimate(std::move(name), hits, reps, seed, bound);
}

// ---------------------------------------------------------------------------
// Samplers.

// Distribution-free signed-rank null: magnitude ranks arrive in uniformly random
// order with independent fair signs; the path is -p at each look, with p from
// the relative ranks among the first n arrivals.
struct SignedRankNullSampler {
    std::vector<double> operator()(const SampleSchedule& schedule, std::uint64_t seed) const {
        const std::size_t nmax = schedule.max();
        if (nmax > signed_rank_max_n) throw validation_error("signed-rank null sampler supports n <= 200");
        Rng rng(seed);
        std::vector<std::uint32_t> global(nmax);
        std::iota(global.begin(), global.end(), 1u);
        std::shuffle(global.begin(), global.end(), rng);
        std::vector<char> positive(nmax);
        for (std::size_t i = 0; i < nmax; ++i) positive[i] = static_cast<char>(rng() & 1u);

        std::vector<double> path;
        path.reserve(schedule.size());
        const auto& looks = schedule.sizes();
        std::size_t li = 0;
        long long w = 0;
        for (std::size_t n = 1; n <= nmax; ++n) {
            const auto g = global[n - 1];
            long long rank = 1, positive_above = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                if (global[i] < g)
                    ++rank;
                else if (positive[i])
                    ++positive_above;
            }
            w += positive_above + (positive[n - 1] ? rank : 0);
            if (li < looks.size() && looks[li] == n) {
                path.push_back(-signed_rank_table(n).tail(w));
                ++li;
            }
        }
        return path;
    }
};

// Pooled two-sample t under N(treatment_mean, sigma) vs N(control_mean, sigma).
// The default is the boundary null treatment_mean = lambda * control_mean.
struct TwoSampleTSampler {
    double lambda = 1.0;
    double treatment_mean = 0.0;
    double control_mean = 0.0;
    double sigma = 1.0;

    std::vector<double> operator()(const SampleSchedule& schedule, std::uint64_t seed) const {
        if (schedule.min() < 2) throw validation_error("two-sample t paths need every look n >= 2");
        Rng rng(seed);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> path;
        path.reserve(schedule.size());
        double mt = 0, st = 0, mc = 0, sc = 0; // Welford means and sums of squares
        std::size_t li = 0;
        const auto& looks = schedule.sizes();
        for (std::size_t n = 1; n <= schedule.max(); ++n) {
            const double xt = treatment_mean + sigma * z(rng);
            const double xc = control_mean + sigma * z(rng);
            const double dn = static_cast<double>(n);
            const double dt = xt - mt;
            mt += dt / dn;
            st += dt * (xt - mt);
            const double dc = xc - mc;
            mc += dc / dn;
            sc += dc * (xc - mc);
            if (looks[li] == n) {
                const double var = (st + sc) / (2.0 * dn - 2.0);
                path.push_back((mt - lambda * mc) / std::sqrt(var * (1.0 + lambda * lambda) / dn));
                ++li;
            }
        }
        return path;
    }
};

// sqrt(n) * mean of N(mean, 1) observations.
struct GaussianMeanSampler {
    double mean = 0.0;

    std::vector<double> operator()(const SampleSchedule& schedule, std::uint64_t seed) const {
        Rng rng(seed);
        std::normal_distribution<double> z(mean, 1.0);
        std::vector<double> path;
        path.reserve(schedule.size());
        double sum = 0.0;
        std::size_t li = 0;
        const auto& looks = schedule.sizes();
        for (std::size_t n = 1; n <= schedule.max(); ++n) {
            sum += z(rng);
            if (looks[li] == n) {
                path.push_back(sum / std::sqrt(static_cast<double>(n)));
                ++li;
            }
        }
        return path;
    }
};

// Any statistic over data drawn by a seeded generator.
struct StatisticPathSampler {
    std::function<StreamSet(std::uint64_t)> generate;
    SequentialStatistic statistic;

    std::vector<double> operator()(const SampleSchedule& schedule, std::uint64_t seed) const {
        const StreamSet data = generate(seed);
        std::vector<double> path;
        path.reserve(schedule.size());
        for (auto n : schedule.sizes()) path.push_back(statistic.evaluate(data, n));
        return path;
    }
};

// Everything needed to reproduce and audit a calibration.
struct CalibrationReport {
    std::size_t k = 1;
    SampleSchedule schedule;
    double alpha = 0.05;
    std::optional<double> beta;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> hypotheses;
    std::vector<CriticalLadder> ladders;
    std::vector<EstimateReport> validation;

    bool all_pass() const {
        return std::all_of(validation.begin(), validation.end(), [](const EstimateReport& r) { return r.pass; });
    }
};

// Re-simulates every rung with a fresh seed: P(T_n >= B_s some n) <= alpha/(k-s+1) + 3 SE,
// and for lower ladders P(T_n <= A_s some n) under the alternative <= beta/(k-s+1) + 3 SE.
template <PathSampler S0>
std::vector<EstimateReport> validate_ladder(const S0& null_sampler, const AnyPathSampler* alt_sampler,
                                            const SampleSchedule& schedule, const CriticalLadder& ladder,
                                            const CalibrationSpec& spec, std::uint64_t fresh_seed) {
    std::vector<EstimateReport> out;
    const std::size_t k = ladder.k();
    for (std::size_t s = 1; s <= k; ++s) {
        const double q = spec.alpha / static_cast<double>(k - s + 1);
        out.push_back(estimate_crossing(null_sampler, schedule, ladder.upper[s - 1], q, spec.reps,
                                        derive_seed(fresh_seed, s), true, "B_" + std::to_string(s)));
    }
    if (ladder.lower && alt_sampler && spec.beta) {
        for (std::size_t s = 1; s <= k; ++s) {
            const double q = *spec.beta / static_cast<double>(k - s + 1);
            out.push_back(estimate_crossing(*alt_sampler, schedule, (*ladder.lower)[s - 1], q, spec.reps,
                                            derive_seed(fresh_seed, 1000 + s), false, "A_" + std::to_string(s)));
        }
    }
    return out;
}

} // namespace seqfwer
