#pragma once

// Empirical checks of the two sufficient conditions for FWER control, FWER
// estimators for both error types, an exhaustive-enumeration oracle for tiny
// discrete problems, and the sequential-exclusivity check for partitions.

#include "seqfwer/core.hpp"
#include "seqfwer/estimate.hpp"
#include "seqfwer/parallel.hpp"
#include "seqfwer/procedures.hpp"
#include "seqfwer/statistics.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace seqfwer {

// ---------------------------------------------------------------------------
// Monotonicity: rho(R, A, n) must lie inside rho(R', {}, n) u R' whenever R is a subset of R'.

struct MonotonicityWitness {
    HypothesisSet r;
    HypothesisSet r_prime;
    HypothesisSet a;
    std::size_t n = 0;
    HypothesisSet offending; // rho(R,A,n) minus (rho(R',{},n) u R')

    std::string describe() const {
        return "R=" + r.to_string() + " R'=" + r_prime.to_string() + " A=" + a.to_string() + " n=" +
               std::to_string(n) + " escapes: " + offending.to_string();
    }
};

struct MonotonicityReport {
    enum class Mode { exhaustive, all_pairs, sampled };
    Mode mode = Mode::exhaustive;
    std::size_t checked = 0;
    std::vector<MonotonicityWitness> violations; // first few only
    std::size_t violation_count = 0;

    bool ok() const noexcept { return violation_count == 0; }
};

inline const char* to_string(MonotonicityReport::Mode m) {
    switch (m) {
    case MonotonicityReport::Mode::exhaustive: return "exhaustive";
    case MonotonicityReport::Mode::all_pairs: return "all-pairs";
    case MonotonicityReport::Mode::sampled: return "sampled";
    }
    return "?";
}

namespace detail {

inline void check_triple(const RejectionRule& rule, const HypothesisSet& r, const HypothesisSet& rp,
                         const HypothesisSet& a, std::size_t n, MonotonicityReport& report) {
    ++report.checked;
    const HypothesisSet small = rule(r, a, n);
    const HypothesisSet big = rule(rp, HypothesisSet(rp.universe()), n) | rp;
    if (small.subset_of(big)) return;
    ++report.violation_count;
    if (report.violations.size() >= 8) return;
    HypothesisSet off(small.universe());
    for (auto i : small.indices())
        if (!big.contains(i)) off.insert(i);
    report.violations.push_back({r, rp, a, n, off});
}

} // namespace detail

// Up to 8 elements every (R, R', A) configuration is enumerated (5 states per
// element); up to 15 every R within R' pair is checked with A empty and with one
// random A disjoint from R; beyond that `samples` random triples are drawn.
inline MonotonicityReport check_monotonicity(const RejectionRule& rule, std::size_t universe,
                                             const SampleSchedule& schedule, std::size_t samples = 20000,
                                             std::uint64_t seed = 1) {
    MonotonicityReport report;
    Rng rng(seed);
    if (universe <= 8) {
        report.mode = MonotonicityReport::Mode::exhaustive;
        std::size_t total = 1;
        for (std::size_t i = 0; i < universe; ++i) total *= 5;
        for (std::size_t code = 0; code < total; ++code) {
            HypothesisSet r(universe), rp(universe), a(universe);
            std::size_t c = code;
            for (std::size_t i = 0; i < universe; ++i, c /= 5) {
                // 0 none, 1 R (and R'), 2 R' only, 3 R' and A, 4 A only
                switch (c % 5) {
                case 1: r.insert(i); rp.insert(i); break;
                case 2: rp.insert(i); break;
                case 3: rp.insert(i); a.insert(i); break;
                case 4: a.insert(i); break;
                default: break;
                }
            }
            for (std::size_t n : schedule.sizes()) detail::check_triple(rule, r, rp, a, n, report);
        }
        return report;
    }
    if (universe <= 15) {
        report.mode = MonotonicityReport::Mode::all_pairs;
        std::size_t total = 1;
        for (std::size_t i = 0; i < universe; ++i) total *= 3;
        const HypothesisSet none(universe);
        for (std::size_t code = 0; code < total; ++code) {
            HypothesisSet r(universe), rp(universe), a(universe);
            std::size_t c = code;
            for (std::size_t i = 0; i < universe; ++i, c /= 3) {
                if (c % 3 == 1) {
                    r.insert(i);
                    rp.insert(i);
                } else if (c % 3 == 2) {
                    rp.insert(i);
                }
                if (c % 3 != 1 && (rng() & 1u)) a.insert(i);
            }
            for (std::size_t n : schedule.sizes()) {
                detail::check_triple(rule, r, rp, none, n, report);
                detail::check_triple(rule, r, rp, a, n, report);
            }
        }
        return report;
    }
    report.mode = MonotonicityReport::Mode::sampled;
    std::uniform_int_distribution<std::size_t> state(0, 4);
    std::uniform_int_distribution<std::size_t> look(0, schedule.size() - 1);
    for (std::size_t t = 0; t < samples; ++t) {
        HypothesisSet r(universe), rp(universe), a(universe);
        for (std::size_t i = 0; i < universe; ++i) {
            switch (state(rng)) {
            case 1: r.insert(i); rp.insert(i); break;
            case 2: rp.insert(i); break;
            case 3: rp.insert(i); a.insert(i); break;
            case 4: a.insert(i); break;
            default: break;
            }
        }
        detail::check_triple(rule, r, rp, a, schedule.sizes()[look(rng)], report);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Scenarios.

struct Scenario {
    std::string name;
    std::function<StreamSet(Rng&)> generate;
    std::vector<char> truth;       // per family element: 1 if the hypothesis is true
    std::vector<char> alternative; // per family element: 1 if in the alternative region (type-II FWER)

    StreamSet draw(std::uint64_t seed) const {
        Rng rng(seed);
        return generate(rng);
    }
    HypothesisSet false_set() const {
        HypothesisSet f(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i)
            if (!truth[i]) f.insert(i);
        return f;
    }
};

// Normal streams sharing a per-observation factor with weight sqrt(correlation).
inline std::function<StreamSet(Rng&)> gaussian_streams(std::vector<double> means, double sd, std::size_t length,
                                                       double correlation = 0.0) {
    if (sd <= 0) throw validation_error("standard deviation must be positive");
    if (correlation < 0 || correlation >= 1) throw validation_error("correlation must lie in [0, 1)");
    return [means = std::move(means), sd, length, correlation](Rng& rng) {
        std::normal_distribution<double> z;
        const double shared = std::sqrt(correlation);
        const double own = std::sqrt(1.0 - correlation);
        std::vector<std::vector<double>> s(means.size(), std::vector<double>(length));
        for (std::size_t i = 0; i < length; ++i) {
            const double common = correlation > 0 ? z(rng) : 0.0;
            for (std::size_t j = 0; j < means.size(); ++j)
                s[j][i] = means[j] + sd * (shared * common + own * z(rng));
        }
        return StreamSet(std::move(s));
    };
}

// Independent streams of iid draws from finite distributions.
struct DiscreteScenario {
    std::vector<std::vector<double>> support; // per stream
    std::vector<std::vector<double>> probs;   // per stream, same shape
    std::size_t length = 1;
    std::vector<char> truth;

    void validate() const {
        if (support.size() != probs.size()) throw validation_error("support and probability lists differ in size");
        for (std::size_t s = 0; s < support.size(); ++s) {
            if (support[s].empty() || support[s].size() != probs[s].size())
                throw validation_error("stream " + std::to_string(s) + " has mismatched support and probabilities");
            double total = 0;
            for (double p : probs[s]) {
                if (p < 0) throw validation_error("negative probability in stream " + std::to_string(s));
                total += p;
            }
            if (std::fabs(total - 1.0) > 1e-9)
                throw validation_error("probabilities of stream " + std::to_string(s) + " do not sum to 1");
        }
    }

    Scenario as_scenario(std::string name = "discrete") const {
        validate();
        auto self = *this;
        Scenario out;
        out.name = std::move(name);
        out.truth = truth;
        out.generate = [self](Rng& rng) {
            std::vector<std::vector<double>> s(self.support.size(), std::vector<double>(self.length));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (std::size_t i = 0; i < self.length; ++i)
                for (std::size_t j = 0; j < self.support.size(); ++j) {
                    const double x = u(rng);
                    double acc = 0;
                    std::size_t pick = self.probs[j].size() - 1;
                    for (std::size_t v = 0; v < self.probs[j].size(); ++v) {
                        acc += self.probs[j][v];
                        if (x < acc) {
                            pick = v;
                            break;
                        }
                    }
                    s[j][i] = self.support[j][pick];
                }
            return StreamSet(std::move(s));
        };
        return out;
    }
};

using ProcedureRunner = std::function<DecisionTrace(const StreamSet&)>;
using RuleFactory = std::function<RejectionRule(const StreamSet&)>;

// ---------------------------------------------------------------------------
// Estimators. Replicate i draws its data from derive_seed(seed, i).

// P(rho(F, {}, n) not within F for some look n).
inline EstimateReport estimate_single_step(const RuleFactory& make_rule, const Scenario& scenario,
                                           const SampleSchedule& schedule, std::size_t reps, std::uint64_t seed,
                                           double alpha) {
    const HypothesisSet f = scenario.false_set();
    const HypothesisSet none(f.universe());
    std::vector<char> hit(reps, 0);
    parallel_for(reps, [&](std::size_t i) {
        const StreamSet data = scenario.draw(derive_seed(seed, i));
        const RejectionRule rule = make_rule(data);
        for (std::size_t n : schedule.sizes())
            if (!rule(f, none, n).subset_of(f)) {
                hit[i] = 1;
                return;
            }
    });
    const auto hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), char{1}));
    return make_estimate("single-step " + scenario.name, hits, reps, seed, alpha);
}

// Fraction of replicates that reject any true hypothesis.
inline EstimateReport estimate_fwer(const ProcedureRunner& run, const Scenario& scenario, std::size_t reps,
                                    std::uint64_t seed, double alpha,
                                    const std::function<void(const DecisionTrace&, const StreamSet&)>& inspect = {}) {
    std::vector<char> hit(reps, 0);
    parallel_for(reps, [&](std::size_t i) {
        const StreamSet data = scenario.draw(derive_seed(seed, i));
        const DecisionTrace trace = run(data);
        if (inspect) inspect(trace, data);
        for (std::size_t e = 0; e < scenario.truth.size(); ++e)
            if (scenario.truth[e] && trace.rejects(e)) {
                hit[i] = 1;
                break;
            }
    });
    const auto hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), char{1}));
    return make_estimate("FWER " + scenario.name, hits, reps, seed, alpha);
}

// Fraction of replicates that accept any hypothesis flagged as alternative.
inline EstimateReport estimate_fwer2(const ProcedureRunner& run, const Scenario& scenario, std::size_t reps,
                                     std::uint64_t seed, double beta,
                                     const std::function<void(const DecisionTrace&, const StreamSet&)>& inspect = {}) {
    std::vector<char> hit(reps, 0);
    parallel_for(reps, [&](std::size_t i) {
        const StreamSet data = scenario.draw(derive_seed(seed, i));
        const DecisionTrace trace = run(data);
        if (inspect) inspect(trace, data);
        for (std::size_t e = 0; e < scenario.alternative.size(); ++e)
            if (scenario.alternative[e] && trace.accepts(e)) {
                hit[i] = 1;
                break;
            }
    });
    const auto hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), char{1}));
    return make_estimate("type-II FWER " + scenario.name, hits, reps, seed, beta);
}

// Exact FWER by enumerating every outcome sequence of a tiny discrete scenario.
inline double brute_force_fwer(const ProcedureRunner& run, const DiscreteScenario& scenario,
                               std::size_t cap = 1'000'000) {
    scenario.validate();
    const std::size_t streams = scenario.support.size();
    const std::size_t cells = streams * scenario.length;
    double outcomes = 1;
    for (std::size_t j = 0; j < streams; ++j)
        outcomes *= std::pow(static_cast<double>(scenario.support[j].size()), static_cast<double>(scenario.length));
    if (outcomes > static_cast<double>(cap))
        throw std::length_error("outcome space of " + std::to_string(static_cast<long long>(outcomes)) +
                                " exceeds the enumeration cap of " + std::to_string(cap));

    std::vector<std::size_t> digit(cells, 0);
    auto radix = [&](std::size_t c) { return scenario.support[c % streams].size(); };
    double total = 0;
    for (;;) {
        std::vector<std::vector<double>> s(streams, std::vector<double>(scenario.length));
        double p = 1;
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t j = c % streams, i = c / streams;
            s[j][i] = scenario.support[j][digit[c]];
            p *= scenario.probs[j][digit[c]];
        }
        if (p > 0) {
            const DecisionTrace trace = run(StreamSet(std::move(s)));
            for (std::size_t e = 0; e < scenario.truth.size(); ++e)
                if (scenario.truth[e] && trace.rejects(e)) {
                    total += p;
                    break;
                }
        }
        std::size_t c = 0;
        while (c < cells && ++digit[c] == radix(c)) digit[c++] = 0;
        if (c == cells) break;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Sequential exclusivity.

struct ExclusivityReport {
    bool exclusive = true;
    std::size_t block = 0; // 1-based violating block
    std::size_t first = 0; // family element indices of the true pair
    std::size_t second = 0;
};

// Exclusive iff, whenever every hypothesis in blocks before i is false, block i holds at most one true hypothesis.
inline ExclusivityReport check_sequential_exclusivity(const OrderedPartition& partition, const HypothesisFamily& family,
                                                      const std::vector<char>& truth) {
    if (truth.size() != family.size()) throw validation_error("need one truth flag per family element");
    element_blocks(partition, family);
    ExclusivityReport out;
    for (std::size_t b = 0; b < partition.size(); ++b) {
        std::vector<std::size_t> trues;
        for (const auto& h : partition.block(b))
            if (truth[*family.index_of(h)]) trues.push_back(*family.index_of(h));
        if (trues.size() > 1) {
            out.exclusive = false;
            out.block = b + 1;
            out.first = trues[0];
            out.second = trues[1];
            return out;
        }
        if (!trues.empty()) break; // later blocks are gated by a true hypothesis
    }
    return out;
}

// Truth of each family element from elementary truth flags: an intersection is true iff all members are.
inline std::vector<char> composite_truth(const HypothesisFamily& family, const std::vector<char>& elementary) {
    if (elementary.size() != family.k()) throw validation_error("need one truth flag per elementary hypothesis");
    std::vector<char> out(family.size(), 1);
    for (std::size_t e = 0; e < family.size(); ++e)
        for (auto j : family.element(e).members())
            if (!elementary[j - 1]) out[e] = 0;
    return out;
}

} // namespace seqfwer
