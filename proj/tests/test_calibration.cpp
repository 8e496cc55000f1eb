#include "seqfwer/calibration.hpp"

#include <gtest/gtest.h>

using namespace seqfwer;

namespace {

std::size_t count_at_least(const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double m) { return m >= x; }));
}

// Deterministic path: one value per look, drawn from the seed only.
struct UniformPath {
    std::vector<double> operator()(const SampleSchedule& s, std::uint64_t seed) const {
        Rng rng(seed);
        std::uniform_real_distribution<double> u;
        std::vector<double> out;
        for (std::size_t i = 0; i < s.size(); ++i) out.push_back(u(rng));
        return out;
    }
};

} // namespace

TEST(Quantile, SmallestValueWithFewEnoughExceedances) {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // floor(0.2 * 10) = 2 values may reach the threshold.
    EXPECT_EQ(upper_threshold(v, 0.2), 9.0);
    EXPECT_EQ(upper_threshold(v, 0.25), 9.0);
    EXPECT_GT(upper_threshold(v, 0.05), 10.0);
    EXPECT_EQ(lower_threshold(v, 0.2), 2.0);
    EXPECT_LT(lower_threshold(v, 0.05), 1.0);
}

TEST(Quantile, TiesAreNeverSplit) {
    const std::vector<double> v{1, 2, 3, 3, 3, 3, 7, 8, 9, 10};
    // Allowing 5 hits: 3 would admit 8, so the answer moves up to 7.
    EXPECT_EQ(upper_threshold(v, 0.5), 7.0);
    EXPECT_EQ(lower_threshold(std::vector<double>{1, 2, 2, 2, 5}, 0.4), 1.0);
}

TEST(Quantile, BruteForceEquivalence) {
    Rng rng(3);
    std::uniform_int_distribution<int> val(0, 12), len(1, 40);
    std::uniform_real_distribution<double> q(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = val(rng);
        std::sort(v.begin(), v.end());
        const double qq = q(rng);
        const auto allowed = static_cast<std::size_t>(std::floor(qq * static_cast<double>(v.size()) + 1e-9));
        const double b = upper_threshold(v, qq);
        EXPECT_LE(count_at_least(v, b), allowed);
        // No smaller sample value qualifies.
        for (double x : v)
            if (x < b) {
                EXPECT_GT(count_at_least(v, x), allowed);
            }
    }
}

TEST(Calibration, LadderIsNonIncreasingAndHonoursRungLevels) {
    const auto schedule = make_range_schedule(5, 40, 5);
    const CalibrationSpec spec{0.05, std::nullopt, 20000, 9, 4};
    const auto ladder = calibrate_ladder(GaussianMeanSampler{}, schedule, spec);
    ASSERT_EQ(ladder.k(), 4u);
    EXPECT_NO_THROW(ladder.validate());
    const auto maxima = draw_extremes(GaussianMeanSampler{}, schedule, spec.reps, spec.seed);
    for (std::size_t s = 1; s <= 4; ++s) {
        const double q = 0.05 / static_cast<double>(4 - s + 1);
        EXPECT_LE(count_at_least(maxima, ladder.upper[s - 1]), static_cast<std::size_t>(q * 20000 + 1e-9));
    }
    // Bonferroni rung for a Brownian max over 8 looks sits between the one-look and continuous values.
    EXPECT_GT(ladder.upper[0], 2.3);
    EXPECT_LT(ladder.upper[0], 2.8);
}

TEST(Calibration, DeterministicAcrossThreadCounts) {
    const auto schedule = make_range_schedule(2, 20, 2);
    const CalibrationSpec spec{0.05, std::nullopt, 5000, 77, 2};
    set_thread_count(1);
    const auto a = calibrate_ladder(TwoSampleTSampler{}, schedule, spec);
    set_thread_count(4);
    const auto b = calibrate_ladder(TwoSampleTSampler{}, schedule, spec);
    set_thread_count(0);
    EXPECT_EQ(a.upper, b.upper);
}

TEST(Calibration, PrecisionGuard) {
    const auto schedule = make_schedule({1, 2});
    EXPECT_THROW(calibrate_ladder(UniformPath{}, schedule, CalibrationSpec{0.05, std::nullopt, 1000, 1, 10}),
                 precision_error);
    EXPECT_THROW(calibrate_ladder(UniformPath{}, schedule, CalibrationSpec{0.05, std::nullopt, 999, 1, 1}),
                 validation_error);
    EXPECT_THROW(calibrate_ladder(UniformPath{}, schedule, CalibrationSpec{1.5, std::nullopt, 5000, 1, 1}),
                 validation_error);
}

TEST(Calibration, DualLowerLadderAndInfeasibility) {
    // A strong alternative lifts the acceptance rungs above the rejection rungs.
    const auto schedule = make_range_schedule(5, 50, 5);
    CalibrationSpec spec{0.05, 0.10, 20000, 4, 3};
    const auto ladder = calibrate_dual(GaussianMeanSampler{0.0}, GaussianMeanSampler{1.0}, schedule, spec);
    ASSERT_TRUE(ladder.lower);
    EXPECT_NO_THROW(ladder.validate());
    EXPECT_THROW(calibrate_dual(GaussianMeanSampler{0.0}, GaussianMeanSampler{2.0}, schedule, spec),
                 infeasible_error);
    spec.beta.reset();
    EXPECT_THROW(calibrate_dual(GaussianMeanSampler{0.0}, GaussianMeanSampler{1.0}, schedule, spec), config_error);
}

TEST(Samplers, SignedRankNullMatchesExactTable) {
    // At a single look n the path value is -p, and P(p <= t) <= t for every t.
    const auto schedule = make_schedule({12});
    std::size_t hits = 0;
    const std::size_t reps = 40000;
    const double target = signed_rank_table(12).tail(60);
    for (std::size_t i = 0; i < reps; ++i)
        if (-SignedRankNullSampler{}(schedule, derive_seed(8, i))[0] <= target + 1e-15) ++hits;
    const double rate = static_cast<double>(hits) / reps;
    EXPECT_NEAR(rate, target, 4 * std::sqrt(target * (1 - target) / reps));
}

TEST(Samplers, TwoSampleTPathMatchesDirectStatistic) {
    const auto schedule = make_schedule({3, 7});
    const auto path = TwoSampleTSampler{0.5, 0.0, 0.0, 2.0}(schedule, 21);
    Rng rng(21);
    std::normal_distribution<double> z;
    std::vector<double> t, c;
    for (std::size_t n = 1; n <= 7; ++n) {
        t.push_back(2.0 * z(rng));
        c.push_back(2.0 * z(rng));
    }
    EXPECT_NEAR(path[0], two_sample_t(std::span(t).first(3), std::span(c).first(3), 0.5), 1e-9);
    EXPECT_NEAR(path[1], two_sample_t(t, c, 0.5), 1e-9);
}

TEST(Validation, ReSimulationWithinBound) {
    const auto schedule = make_range_schedule(5, 30, 5);
    const CalibrationSpec spec{0.05, std::nullopt, 40000, 12, 2};
    const auto ladder = calibrate_ladder(GaussianMeanSampler{}, schedule, spec);
    const auto reports = validate_ladder(GaussianMeanSampler{}, nullptr, schedule, ladder, spec, 99);
    ASSERT_EQ(reports.size(), 2u);
    for (const auto& r : reports) EXPECT_TRUE(r.pass) << r.name << " " << r.estimate;
}
