#pragma once

// The fixture set behind `seqfwer verify`: calibrated step-down, dual,
// in-order (chromosome partition) and closed-chain procedures, each run
// against independent, equicorrelated and mixed-truth scenarios, plus the
// monotonicity, exhaustive-oracle and exclusivity checks.

#include "seqfwer/calibration.hpp"
#include "seqfwer/experiments.hpp"
#include "seqfwer/procedures.hpp"
#include "seqfwer/verify.hpp"

#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace seqfwer {

struct SuiteOptions {
    double alpha = 0.05;
    double beta = 0.10;
    double separation = 1.0; // dual alternative mean per observation
    double correlation = 0.8;
    std::size_t reps = 20000;
    std::size_t calibration_reps = 100000;
    std::size_t oracle_reps = 20000;
    std::size_t monotonicity_trials = 3;
    bool large_closed_monotonicity = false; // closed k=4 (15 elements), all R within R' pairs
    std::uint64_t seed = 0;

    void validate() const {
        if (!(alpha > 0 && alpha < 1)) throw validation_error("alpha must lie in (0, 1)");
        if (!(beta > 0 && beta < 1)) throw validation_error("beta must lie in (0, 1)");
        if (!(separation > 0)) throw validation_error("separation must be positive");
        if (correlation < 0 || correlation >= 1) throw validation_error("correlation must lie in [0, 1)");
        if (reps < 1 || oracle_reps < 1) throw validation_error("reps must be >= 1");
    }
};

struct CheckResult {
    std::string group; // fwer, fwer2, single-step, calibration, monotonicity, oracle, tables, exclusivity, traces
    std::string name;
    bool pass = true;
    std::string detail;
    std::optional<EstimateReport> estimate;
};

struct SuiteResult {
    std::vector<CheckResult> checks;
    std::size_t traces_audited = 0;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
    bool group_pass(const std::string& group) const {
        return std::all_of(checks.begin(), checks.end(),
                           [&](const CheckResult& c) { return c.group != group || c.pass; });
    }
    std::size_t group_size(const std::string& group) const {
        return static_cast<std::size_t>(
            std::count_if(checks.begin(), checks.end(), [&](const CheckResult& c) { return c.group == group; }));
    }
};

// Thread-safe collector of DecisionTrace invariant failures.
class TraceAudit {
public:
    void check(const DecisionTrace& trace, const SampleSchedule& schedule, bool chain) {
        ++count_;
        auto report = trace.check_invariants(schedule);
        if (chain)
            for (std::size_t i = 1; i < trace.universe(); ++i)
                if (trace.rejects(i) && !trace.rejects(i - 1))
                    report.problems.push_back("chain element " + std::to_string(i) + " rejected before element " +
                                              std::to_string(i - 1));
        if (report.ok()) return;
        std::lock_guard lock(mutex_);
        ++failures_;
        if (first_.empty()) first_ = report.problems.front();
    }

    std::size_t count() const noexcept { return count_.load(); }
    std::size_t failures() const noexcept { return failures_; }
    const std::string& first_problem() const noexcept { return first_; }

private:
    std::atomic<std::size_t> count_{0};
    std::size_t failures_ = 0;
    std::string first_;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Fixtures.

struct Fixture {
    std::string name;
    SampleSchedule schedule;
    ProcedureRunner run;
    RuleFactory rule;
    std::vector<Scenario> scenarios;    // type-I FWER and single-step
    std::vector<Scenario> alternatives; // type-II FWER (dual only)
    bool chain = false;
    std::vector<CheckResult> calibration;
};

// Truth of (H_+, H_b, H_c, H_*, H_#, H_0) for means of (y_a, y_b, y_c).
inline std::vector<char> chromosome_truth(double a, double b, double c) {
    const double hi = std::max(b, c), lo = std::min(b, c);
    return {a <= (b + c) / 2, a <= b, a <= c, a - c <= c - b, a - b <= b - c, a - hi <= hi - lo};
}

// Elementary truth of the chain family: elementary index m (1-based) is dose k-m+1,
// unsafe while its mean does not exceed lambda times control.
inline std::vector<char> chain_truth(const std::vector<double>& mu, double lambda = 1.0) {
    const std::size_t k = mu.size() - 1;
    std::vector<char> elementary(k);
    for (std::size_t m = 1; m <= k; ++m) elementary[m - 1] = mu[k - m + 1] <= lambda * mu[0];
    return composite_truth(build_chain_family(k).family, elementary);
}

namespace detail {

inline CheckResult calibration_check(const std::string& fixture, const std::vector<EstimateReport>& reports) {
    CheckResult c{"calibration", fixture, true, "", std::nullopt};
    for (const auto& r : reports)
        if (!r.pass) {
            c.pass = false;
            c.detail += r.name + " crossing " + std::to_string(r.estimate) + " > " + std::to_string(r.limit()) + "; ";
        }
    if (c.pass) c.detail = std::to_string(reports.size()) + " rungs re-simulated within bound";
    return c;
}

inline Scenario gaussian(std::string name, std::vector<double> means, std::size_t length, double correlation,
                         std::vector<char> truth, std::vector<char> alternative = {}) {
    Scenario s;
    s.name = std::move(name);
    s.generate = gaussian_streams(std::move(means), 1.0, length, correlation);
    s.truth = std::move(truth);
    s.alternative = alternative.empty() ? std::vector<char>(s.truth.size(), 0) : std::move(alternative);
    return s;
}

} // namespace detail

inline Fixture step_down_fixture(const SuiteOptions& o) {
    const std::size_t k = 3, length = 50;
    Fixture f;
    f.name = "step-down k=3";
    f.schedule = make_range_schedule(5, length, 5);
    const CalibrationSpec spec{o.alpha, std::nullopt, o.calibration_reps, derive_seed(o.seed, 101), k};
    const CriticalLadder ladder = calibrate_ladder(GaussianMeanSampler{0.0}, f.schedule, spec);
    f.calibration.push_back(detail::calibration_check(
        f.name, validate_ladder(GaussianMeanSampler{0.0}, nullptr, f.schedule, ladder, spec, derive_seed(o.seed, 102))));
    auto cfg = std::make_shared<StepDownConfig>();
    cfg->family = HypothesisFamily::elementary(k);
    cfg->schedule = f.schedule;
    for (std::size_t j = 0; j < k; ++j) cfg->statistics.push_back(SequentialStatistic::standardized_mean(j));
    cfg->ladders.assign(k, ladder);
    f.run = [cfg](const StreamSet& d) { return run_step_down(*cfg, d); };
    f.rule = [cfg](const StreamSet& d) { return make_step_down_rule(*cfg, d); };
    f.scenarios = {
        detail::gaussian("all-null independent", {0, 0, 0}, length, 0.0, {1, 1, 1}),
        detail::gaussian("all-null equicorrelated", {0, 0, 0}, length, o.correlation, {1, 1, 1}),
        detail::gaussian("mixed truth", {0, 0.5, 1.0}, length, 0.0, {1, 0, 0}),
    };
    return f;
}

inline Fixture dual_fixture(const SuiteOptions& o) {
    const std::size_t k = 3, length = 50;
    const double d = o.separation;
    Fixture f;
    f.name = "dual k=3";
    f.schedule = make_range_schedule(5, length, 5);
    const CalibrationSpec spec{o.alpha, o.beta, o.calibration_reps, derive_seed(o.seed, 201), k};
    const CriticalLadder ladder = calibrate_dual(GaussianMeanSampler{0.0}, GaussianMeanSampler{d}, f.schedule, spec);
    const AnyPathSampler alt = GaussianMeanSampler{d};
    f.calibration.push_back(detail::calibration_check(
        f.name, validate_ladder(GaussianMeanSampler{0.0}, &alt, f.schedule, ladder, spec, derive_seed(o.seed, 202))));
    auto cfg = std::make_shared<StepDownConfig>();
    cfg->family = HypothesisFamily::elementary(k);
    cfg->schedule = f.schedule;
    for (std::size_t j = 0; j < k; ++j) cfg->statistics.push_back(SequentialStatistic::standardized_mean(j));
    cfg->ladders.assign(k, ladder);
    f.run = [cfg](const StreamSet& data) { return run_dual(*cfg, data); };
    f.rule = [cfg](const StreamSet& data) { return make_step_down_rule(*cfg, data, true); };
    f.scenarios = {
        detail::gaussian("all-null independent", {0, 0, 0}, length, 0.0, {1, 1, 1}),
        detail::gaussian("all-null equicorrelated", {0, 0, 0}, length, o.correlation, {1, 1, 1}),
        detail::gaussian("mixed truth", {0, d, 0}, length, 0.0, {1, 0, 1}, {0, 1, 0}),
    };
    f.alternatives = {
        detail::gaussian("all-alternative independent", {d, d, d}, length, 0.0, {0, 0, 0}, {1, 1, 1}),
        detail::gaussian("all-alternative equicorrelated", {d, d, d}, length, o.correlation, {0, 0, 0}, {1, 1, 1}),
        detail::gaussian("mixed truth", {0, d, 0}, length, 0.0, {1, 0, 1}, {0, 1, 0}),
    };
    return f;
}

inline Fixture chromosome_fixture(const SuiteOptions& o) {
    const std::size_t length = 30;
    Fixture f;
    f.name = "in-order chromosome partition";
    f.schedule = make_range_schedule(5, length, 5);
    const double critical = calibrate_single(SignedRankNullSampler{}, f.schedule, o.alpha, o.calibration_reps,
                                             derive_seed(o.seed, 301));
    const CalibrationSpec spec{o.alpha, std::nullopt, o.calibration_reps, derive_seed(o.seed, 301), 1};
    f.calibration.push_back(detail::calibration_check(
        f.name, validate_ladder(SignedRankNullSampler{}, nullptr, f.schedule, CriticalLadder{{critical}, std::nullopt},
                                spec, derive_seed(o.seed, 302))));
    auto cfg = std::make_shared<InOrderConfig>(chromosome_procedure(chromosome_design(), f.schedule, -critical));
    f.run = [cfg](const StreamSet& d) { return run_in_order(*cfg, d); };
    f.rule = [cfg](const StreamSet& d) { return make_in_order_rule(*cfg, d); };
    f.scenarios = {
        detail::gaussian("all-null independent", {0, 0, 0}, length, 0.0, chromosome_truth(0, 0, 0)),
        detail::gaussian("all-null equicorrelated", {0, 0, 0}, length, o.correlation, chromosome_truth(0, 0, 0)),
        detail::gaussian("mixed truth", {1.0, 0.5, 0.0}, length, 0.0, chromosome_truth(1.0, 0.5, 0.0)),
    };
    return f;
}

inline Fixture closed_chain_fixture(const SuiteOptions& o) {
    const std::size_t k = 3, length = 40;
    Fixture f;
    f.name = "closed chain k=3";
    f.chain = true;
    f.schedule = make_range_schedule(4, length, 4);
    const double critical = calibrate_single(TwoSampleTSampler{}, f.schedule, o.alpha, o.calibration_reps,
                                             derive_seed(o.seed, 401));
    const CalibrationSpec spec{o.alpha, std::nullopt, o.calibration_reps, derive_seed(o.seed, 401), 1};
    f.calibration.push_back(detail::calibration_check(
        f.name, validate_ladder(TwoSampleTSampler{}, nullptr, f.schedule, CriticalLadder{{critical}, std::nullopt},
                                spec, derive_seed(o.seed, 402))));
    MaxsdScenario s;
    s.k = k;
    s.mu.assign(k + 1, 0.0);
    auto cfg = std::make_shared<InOrderConfig>(maxsd_procedure(s, f.schedule, critical));
    f.run = [cfg](const StreamSet& d) { return run_closed(*cfg, d); };
    f.rule = [cfg](const StreamSet& d) { return make_in_order_rule(*cfg, d); };
    const std::vector<double> zero(k + 1, 0.0), mixed{0, 0, 0.5, 1.0};
    f.scenarios = {
        detail::gaussian("all-null independent", zero, length, 0.0, chain_truth(zero)),
        detail::gaussian("all-null equicorrelated", zero, length, o.correlation, chain_truth(zero)),
        detail::gaussian("mixed truth", mixed, length, 0.0, chain_truth(mixed)),
    };
    return f;
}

inline std::vector<Fixture> build_fixtures(const SuiteOptions& o) {
    return {step_down_fixture(o), dual_fixture(o), chromosome_fixture(o), closed_chain_fixture(o)};
}

// ---------------------------------------------------------------------------
// Tiny discrete problems with exact answers.

struct OracleFixture {
    std::string name;
    ProcedureRunner run;
    DiscreteScenario scenario;
};

inline std::vector<OracleFixture> oracle_fixtures() {
    std::vector<OracleFixture> out;
    auto sums = [](std::size_t k) {
        std::vector<SequentialStatistic> s;
        for (std::size_t j = 0; j < k; ++j) s.push_back(SequentialStatistic::running_sum(j));
        return s;
    };
    {
        // One look, reject iff the single observation is the rare point.
        auto cfg = std::make_shared<StepDownConfig>();
        cfg->family = HypothesisFamily::elementary(1);
        cfg->schedule = make_schedule({1});
        cfg->statistics = sums(1);
        cfg->ladders = {CriticalLadder{{1.0}, std::nullopt}};
        out.push_back({"k=1 one look", [cfg](const StreamSet& d) { return run_step_down(*cfg, d); },
                       DiscreteScenario{{{1.0, 0.0}}, {{0.04, 0.96}}, 1, {1}}});
    }
    {
        auto cfg = std::make_shared<StepDownConfig>();
        cfg->family = HypothesisFamily::elementary(2);
        cfg->schedule = make_schedule({1, 2});
        cfg->statistics = sums(2);
        cfg->ladders.assign(2, CriticalLadder{{2.0, 1.0}, std::nullopt});
        ProcedureRunner run = [cfg](const StreamSet& d) { return run_step_down(*cfg, d); };
        out.push_back({"k=2 step-down coin flips", run,
                       DiscreteScenario{{{-1, 1}, {-1, 1}}, {{0.5, 0.5}, {0.5, 0.5}}, 2, {1, 1}}});
        out.push_back({"k=2 step-down biased second stream", run,
                       DiscreteScenario{{{-1, 1}, {-1, 1}}, {{0.5, 0.5}, {0.2, 0.8}}, 2, {1, 0}}});
    }
    {
        auto cfg = std::make_shared<InOrderConfig>();
        cfg->family = HypothesisFamily::elementary(2);
        const auto& e = cfg->family.elements();
        cfg->partition = OrderedPartition({{e[0]}, {e[1]}});
        cfg->schedule = make_schedule({1, 2, 3});
        cfg->statistics = sums(2);
        cfg->thresholds = {2.0, 2.0};
        ProcedureRunner run = [cfg](const StreamSet& d) { return run_in_order(*cfg, d); };
        out.push_back({"k=2 in-order three-point", run,
                       DiscreteScenario{{{-1, 0, 1}, {-1, 0, 1}}, {{0.1, 0.3, 0.6}, {0.3, 0.4, 0.3}}, 3, {0, 1}}});
    }
    {
        auto cfg = std::make_shared<StepDownConfig>();
        cfg->family = HypothesisFamily::elementary(2);
        cfg->schedule = make_schedule({1, 2, 3});
        cfg->statistics = sums(2);
        cfg->ladders.assign(2, CriticalLadder{{3.0, 2.0}, std::vector<double>{-2.0, -1.0}});
        out.push_back({"k=2 dual three-point", [cfg](const StreamSet& d) { return run_dual(*cfg, d); },
                       DiscreteScenario{{{-1, 0, 1}, {-1, 0, 1}}, {{0.25, 0.25, 0.5}, {0.4, 0.3, 0.3}}, 3, {0, 1}}});
    }
    {
        // Closed chain k=2 over control + 2 doses; statistic = dose sum minus control sum.
        const auto chain = build_chain_family(2);
        auto cfg = std::make_shared<InOrderConfig>();
        cfg->family = chain.family;
        cfg->partition = chain.partition;
        cfg->schedule = make_schedule({1, 2, 3});
        for (std::size_t i = 0; i < 2; ++i) {
            const std::size_t dose = chain_dose(i, 2);
            cfg->statistics.push_back(SequentialStatistic::custom(
                {dose, 0}, 1,
                [dose](const StreamSet& d, std::size_t n) {
                    double s = 0;
                    for (auto x : d.prefix(dose, n)) s += x;
                    for (auto x : d.prefix(0, n)) s -= x;
                    return s;
                },
                "difference of sums"));
        }
        cfg->thresholds = {2.0, 2.0};
        out.push_back({"closed chain k=2", [cfg](const StreamSet& d) { return run_closed(*cfg, d); },
                       DiscreteScenario{{{0, 1}, {0, 1}, {0, 1}}, {{0.5, 0.5}, {0.5, 0.5}, {0.1, 0.9}}, 3,
                                        chain_truth({0.5, 0.5, 0.9})}});
    }
    return out;
}

// Exact null of W by 2^n sign enumeration.
inline std::vector<double> enumerate_signed_rank_tail(std::size_t n) {
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> counts(max_sum + 1, 0.0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::size_t w = 0;
        for (std::size_t r = 1; r <= n; ++r)
            if (mask & (std::uint64_t{1} << (r - 1))) w += r;
        counts[w] += 1.0;
    }
    std::vector<double> tail(max_sum + 1, 0.0);
    double acc = 0;
    for (std::size_t w = max_sum + 1; w-- > 0;) {
        acc += counts[w];
        tail[w] = acc / std::ldexp(1.0, static_cast<int>(n));
    }
    return tail;
}

// ---------------------------------------------------------------------------
// Groups.

inline void run_fwer_checks(const std::vector<Fixture>& fixtures, const SuiteOptions& o, SuiteResult& out,
                            TraceAudit& audit) {
    std::uint64_t tag = 1000;
    for (const auto& f : fixtures) {
        auto inspect = [&](const DecisionTrace& t, const StreamSet&) { audit.check(t, f.schedule, f.chain); };
        for (const auto& s : f.scenarios) {
            auto r = estimate_fwer(f.run, s, o.reps, derive_seed(o.seed, ++tag), o.alpha, inspect);
            out.checks.push_back({"fwer", f.name + " / " + s.name, r.pass, "", r});
        }
        for (const auto& s : f.alternatives) {
            auto r = estimate_fwer2(f.run, s, o.reps, derive_seed(o.seed, ++tag), o.beta, inspect);
            out.checks.push_back({"fwer2", f.name + " / " + s.name, r.pass, "", r});
        }
    }
}

inline void run_single_step_checks(const std::vector<Fixture>& fixtures, const SuiteOptions& o, SuiteResult& out) {
    std::uint64_t tag = 2000;
    for (const auto& f : fixtures)
        for (const auto& s : f.scenarios) {
            auto r = estimate_single_step(f.rule, s, f.schedule, o.reps, derive_seed(o.seed, ++tag), o.alpha);
            out.checks.push_back({"single-step", f.name + " / " + s.name, r.pass, "", r});
        }
}

inline CheckResult monotonicity_check(std::string name, const RejectionRule& rule, std::size_t universe,
                                      const SampleSchedule& schedule, std::uint64_t seed) {
    const auto rep = check_monotonicity(rule, universe, schedule, 20000, seed);
    CheckResult c{"monotonicity", std::move(name), rep.ok(), "", std::nullopt};
    c.detail = std::string(to_string(rep.mode)) + ", " + std::to_string(rep.checked) + " triples";
    if (!rep.ok()) c.detail += ", " + std::to_string(rep.violation_count) + " violations, e.g. " +
                               rep.violations.front().describe();
    return c;
}

inline void run_monotonicity_checks(const SuiteOptions& o, SuiteResult& out) {
    for (std::size_t t = 0; t < o.monotonicity_trials; ++t) {
        const std::uint64_t seed = derive_seed(o.seed, 3000 + t);
        for (std::size_t k = 1; k <= 4; ++k) {
            // Fixed, non-calibrated ladders: the condition is pathwise and ladder-free.
            StepDownConfig cfg;
            cfg.family = HypothesisFamily::elementary(k);
            cfg.schedule = make_schedule({2, 4, 6});
            for (std::size_t j = 0; j < k; ++j) {
                cfg.statistics.push_back(SequentialStatistic::standardized_mean(j));
                CriticalLadder l;
                for (std::size_t s = 1; s <= k; ++s) l.upper.push_back(0.2 * static_cast<double>(k - s));
                cfg.ladders.push_back(l);
            }
            Rng rng(seed + k);
            const StreamSet data = gaussian_streams(std::vector<double>(k, 0.0), 1.0, 6)(rng);
            out.checks.push_back(monotonicity_check("step-down k=" + std::to_string(k) + " trial " + std::to_string(t + 1),
                                                    make_step_down_rule(cfg, data), k, cfg.schedule, seed));
        }
        {
            Rng rng(seed);
            const InOrderConfig cfg = chromosome_procedure(chromosome_design(), make_schedule({5, 10, 15}), 0.2);
            const StreamSet data = gaussian_streams({0.5, 0.2, 0.0}, 1.0, 15)(rng);
            out.checks.push_back(monotonicity_check("in-order chromosome trial " + std::to_string(t + 1),
                                                    make_in_order_rule(cfg, data), 6, cfg.schedule, seed));
        }
        for (std::size_t k = 2; k <= 3; ++k) {
            Rng rng(seed + 17 * k);
            const auto closed = build_closed_partition(k);
            InOrderConfig cfg;
            cfg.family = closed.family;
            cfg.partition = closed.partition;
            cfg.schedule = make_schedule({2, 4});
            for (const auto& h : closed.family.elements())
                cfg.statistics.push_back(SequentialStatistic::standardized_mean(h.min_member() - 1));
            cfg.thresholds.assign(closed.family.size(), 0.3);
            const StreamSet data = gaussian_streams(std::vector<double>(k, 0.3), 1.0, 4)(rng);
            out.checks.push_back(monotonicity_check("closed k=" + std::to_string(k) + " trial " + std::to_string(t + 1),
                                                    make_in_order_rule(cfg, data), cfg.family.size(), cfg.schedule,
                                                    seed));
        }
    }
    if (o.large_closed_monotonicity) {
        Rng rng(derive_seed(o.seed, 3999));
        const auto closed = build_closed_partition(4);
        InOrderConfig cfg;
        cfg.family = closed.family;
        cfg.partition = closed.partition;
        cfg.schedule = make_schedule({4});
        for (const auto& h : closed.family.elements())
            cfg.statistics.push_back(SequentialStatistic::standardized_mean(h.min_member() - 1));
        cfg.thresholds.assign(closed.family.size(), 0.0);
        const StreamSet data = gaussian_streams(std::vector<double>(4, 0.5), 1.0, 4)(rng);
        out.checks.push_back(monotonicity_check("closed k=4", make_in_order_rule(cfg, data), cfg.family.size(),
                                                cfg.schedule, derive_seed(o.seed, 3998)));
    }
}

inline void run_oracle_checks(const SuiteOptions& o, SuiteResult& out, TraceAudit& audit) {
    std::uint64_t tag = 4000;
    for (const auto& f : oracle_fixtures()) {
        const double exact = brute_force_fwer(f.run, f.scenario);
        const Scenario s = f.scenario.as_scenario(f.name);
        const auto schedule = make_range_schedule(1, f.scenario.length);
        auto r = estimate_fwer(f.run, s, o.oracle_reps, derive_seed(o.seed, ++tag), o.alpha,
                               [&](const DecisionTrace& t, const StreamSet&) { audit.check(t, schedule, false); });
        const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(o.oracle_reps));
        const double gap = std::fabs(r.estimate - exact);
        CheckResult c{"oracle", f.name, se > 0 ? gap <= 4 * se : gap == 0.0, "", std::nullopt};
        c.detail = "exact " + std::to_string(exact) + ", simulated " + std::to_string(r.estimate) + ", |gap| " +
                   std::to_string(gap) + " vs 4 SE " + std::to_string(4 * se);
        out.checks.push_back(c);
    }
}

inline void run_table_checks(SuiteResult& out) {
    for (std::size_t n = 1; n <= 12; ++n) {
        const auto brute = enumerate_signed_rank_tail(n);
        const auto& table = signed_rank_table(n);
        double worst = 0;
        for (std::size_t w = 0; w < brute.size(); ++w)
            worst = std::max(worst, std::fabs(brute[w] - table.tail(static_cast<long long>(w))));
        out.checks.push_back({"tables", "signed-rank n=" + std::to_string(n), worst <= 1e-12,
                              "max |diff| " + std::to_string(worst), std::nullopt});
    }
}

inline void run_exclusivity_checks(SuiteResult& out) {
    for (std::size_t k = 1; k <= 3; ++k) {
        const auto closed = build_closed_partition(k);
        bool ok = true;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
            std::vector<char> elementary(k);
            for (std::size_t j = 0; j < k; ++j) elementary[j] = (mask >> j) & 1u;
            ok = ok && check_sequential_exclusivity(closed.partition, closed.family,
                                                    composite_truth(closed.family, elementary))
                           .exclusive;
        }
        out.checks.push_back({"exclusivity", "closed partition k=" + std::to_string(k), ok,
                              "all elementary truth assignments", std::nullopt});
    }
    const auto design = chromosome_design();
    bool ok = true;
    const std::array<double, 5> grid{-1.0, -0.5, 0.0, 0.5, 1.0};
    for (double a : grid)
        for (double b : grid)
            for (double c : grid)
                ok = ok && check_sequential_exclusivity(design.partition, design.family, chromosome_truth(a, b, c))
                               .exclusive;
    out.checks.push_back({"exclusivity", "chromosome partition", ok, "5x5x5 grid of means", std::nullopt});
}

inline SuiteResult run_verification_suite(const SuiteOptions& o) {
    o.validate();
    SuiteResult out;
    TraceAudit audit;
    const auto fixtures = build_fixtures(o);
    for (const auto& f : fixtures)
        for (const auto& c : f.calibration) out.checks.push_back(c);
    run_fwer_checks(fixtures, o, out, audit);
    run_single_step_checks(fixtures, o, out);
    run_monotonicity_checks(o, out);
    run_oracle_checks(o, out, audit);
    run_table_checks(out);
    run_exclusivity_checks(out);
    out.traces_audited = audit.count();
    CheckResult t{"traces", "decision-trace invariants", audit.failures() == 0, "", std::nullopt};
    t.detail = std::to_string(audit.count()) + " traces, " + std::to_string(audit.failures()) + " failing";
    if (audit.failures()) t.detail += ": " + audit.first_problem();
    out.checks.push_back(t);
    return out;
}

} // namespace seqfwer
