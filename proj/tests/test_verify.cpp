#include "seqfwer/verify.hpp"

#include <gtest/gtest.h>

using namespace seqfwer;

namespace {

RejectionRule constant_step_down(std::vector<double> standardized) {
    return [standardized](const HypothesisSet& r, const HypothesisSet& a, std::size_t) {
        return step_down_rho(r, a, standardized);
    };
}

} // namespace

TEST(Monotonicity, StepDownKernelPasses) {
    const auto report = check_monotonicity(constant_step_down({2.5, 0.3, 1.7, 3.1}), 4, make_schedule({1, 2}));
    EXPECT_EQ(report.mode, MonotonicityReport::Mode::exhaustive);
    EXPECT_EQ(report.checked, 625u * 2);
    EXPECT_TRUE(report.ok());
}

TEST(Monotonicity, AdversarialRuleIsCaught) {
    // Rejects element 1 only while R is empty: enlarging R withdraws the rejection.
    RejectionRule bad = [](const HypothesisSet& r, const HypothesisSet& a, std::size_t) {
        HypothesisSet out(r.universe());
        if (r.empty() && !a.contains(1)) out.insert(1);
        return out;
    };
    const auto report = check_monotonicity(bad, 3, make_schedule({1}));
    ASSERT_FALSE(report.ok());
    const auto& w = report.violations.front();
    EXPECT_TRUE(w.r.subset_of(w.r_prime));
    EXPECT_TRUE(w.offending.contains(1));
    EXPECT_FALSE(w.r_prime.contains(1));
    EXPECT_NE(w.describe().find("escapes"), std::string::npos);
    EXPECT_LE(report.violations.size(), 8u);
    EXPECT_GE(report.violation_count, report.violations.size());
}

TEST(Monotonicity, ModesBySize) {
    const auto rule = constant_step_down(std::vector<double>(10, 0.0));
    EXPECT_EQ(check_monotonicity(rule, 10, make_schedule({1})).mode, MonotonicityReport::Mode::all_pairs);
    const auto big = constant_step_down(std::vector<double>(20, 5.0));
    const auto r = check_monotonicity(big, 20, make_schedule({1}), 500);
    EXPECT_EQ(r.mode, MonotonicityReport::Mode::sampled);
    EXPECT_EQ(r.checked, 500u);
    EXPECT_TRUE(r.ok());
}

TEST(Fwer, NeverRejectingRuleHasZeroError) {
    Scenario s;
    s.name = "null";
    s.generate = gaussian_streams({0, 0}, 1.0, 5);
    s.truth = {1, 1};
    ProcedureRunner run = [](const StreamSet&) {
        return run_rejection_loop(2, make_schedule({5}), [](const HypothesisSet& r, const HypothesisSet&, std::size_t) {
            return HypothesisSet(r.universe());
        });
    };
    const auto est = estimate_fwer(run, s, 500, 1, 0.05);
    EXPECT_EQ(est.estimate, 0.0);
    EXPECT_TRUE(est.pass);
}

TEST(BruteForce, SingleLookExactProbability) {
    StepDownConfig cfg;
    cfg.family = HypothesisFamily::elementary(1);
    cfg.schedule = make_schedule({1});
    cfg.statistics = {SequentialStatistic::running_sum(0)};
    cfg.ladders = {CriticalLadder{{1.0}, std::nullopt}};
    ProcedureRunner run = [&](const StreamSet& d) { return run_step_down(cfg, d); };
    const DiscreteScenario sc{{{1.0, 0.0}}, {{0.04, 0.96}}, 1, {1}};
    EXPECT_NEAR(brute_force_fwer(run, sc), 0.04, 1e-15);
    // Monte Carlo agrees with the enumeration.
    const auto est = estimate_fwer(run, sc.as_scenario(), 40000, 3, 0.04);
    EXPECT_NEAR(est.estimate, 0.04, 4 * est.standard_error);
}

TEST(BruteForce, TwoLooksByHand) {
    // Running sum of +-1 coin flips reaching 2 over looks {1, 2}: only ++ does, probability 1/4.
    StepDownConfig cfg;
    cfg.family = HypothesisFamily::elementary(1);
    cfg.schedule = make_schedule({1, 2});
    cfg.statistics = {SequentialStatistic::running_sum(0)};
    cfg.ladders = {CriticalLadder{{2.0}, std::nullopt}};
    ProcedureRunner run = [&](const StreamSet& d) { return run_step_down(cfg, d); };
    EXPECT_DOUBLE_EQ(brute_force_fwer(run, {{{-1, 1}}, {{0.5, 0.5}}, 2, {1}}), 0.25);
    EXPECT_DOUBLE_EQ(brute_force_fwer(run, {{{-1, 1}}, {{0.5, 0.5}}, 2, {0}}), 0.0);
}

TEST(BruteForce, CapAndValidation) {
    ProcedureRunner run = [](const StreamSet&) { return DecisionTrace{}; };
    const DiscreteScenario huge{{{0, 1, 2, 3}}, {{0.25, 0.25, 0.25, 0.25}}, 12, {1}};
    EXPECT_THROW(brute_force_fwer(run, huge), std::length_error);
    const DiscreteScenario bad{{{0, 1}}, {{0.5, 0.6}}, 1, {1}};
    EXPECT_THROW(brute_force_fwer(run, bad), validation_error);
}

TEST(SingleStep, DetectsAnIllegalRule) {
    Scenario s;
    s.name = "one false";
    s.generate = gaussian_streams({0, 0}, 1.0, 3);
    s.truth = {1, 0};
    RuleFactory leaky = [](const StreamSet&) {
        return RejectionRule([](const HypothesisSet& r, const HypothesisSet&, std::size_t) {
            return HypothesisSet::from_indices(r.universe(), {0});
        });
    };
    const auto est = estimate_single_step(leaky, s, make_schedule({1, 2}), 100, 1, 0.05);
    EXPECT_EQ(est.estimate, 1.0);
    EXPECT_FALSE(est.pass);
}

TEST(Exclusivity, ChainIsExclusiveFlatFamilyIsNot) {
    const auto chain = build_chain_family(3);
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        std::vector<char> el(3);
        for (std::size_t j = 0; j < 3; ++j) el[j] = static_cast<char>(mask >> j & 1);
        EXPECT_TRUE(check_sequential_exclusivity(chain.partition, chain.family, composite_truth(chain.family, el)).exclusive);
    }
    const auto flat = HypothesisFamily::elementary(3);
    const auto& e = flat.elements();
    const OrderedPartition p({{e[0]}, {e[1], e[2]}});
    const auto r = check_sequential_exclusivity(p, flat, {0, 1, 1});
    EXPECT_FALSE(r.exclusive);
    EXPECT_EQ(r.block, 2u);
    EXPECT_EQ(r.first, 1u);
    EXPECT_EQ(r.second, 2u);
    // A true hypothesis in block 1 shields block 2.
    EXPECT_TRUE(check_sequential_exclusivity(p, flat, {1, 1, 1}).exclusive);
}

TEST(CompositeTruth, IntersectionTrueIffAllMembersTrue) {
    const auto chain = build_chain_family(3);
    EXPECT_EQ(composite_truth(chain.family, {0, 1, 1}), (std::vector<char>{0, 1, 1}));
    EXPECT_EQ(composite_truth(chain.family, {1, 1, 0}), (std::vector<char>{0, 0, 0}));
    EXPECT_THROW(composite_truth(chain.family, {1}), validation_error);
}

TEST(Scenarios, GaussianCorrelation) {
    const auto gen = gaussian_streams({0, 0}, 1.0, 20000, 0.64);
    Rng rng(2);
    const auto d = gen(rng);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < 20000; ++i) {
        sxy += d.streams[0][i] * d.streams[1][i];
        sxx += d.streams[0][i] * d.streams[0][i];
        syy += d.streams[1][i] * d.streams[1][i];
    }
    EXPECT_NEAR(sxy / std::sqrt(sxx * syy), 0.64, 0.03);
    EXPECT_THROW(gaussian_streams({0}, 0.0, 1), validation_error);
    EXPECT_THROW(gaussian_streams({0}, 1.0, 1, 1.0), validation_error);
}
