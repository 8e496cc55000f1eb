#include "seqfwer/statistics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace seqfwer;

namespace {

// P(W >= w) by listing all 2^n sign patterns over ranks 1..n.
std::vector<double> brute_tail(std::size_t n) {
    const std::size_t m = n * (n + 1) / 2;
    std::vector<double> count(m + 1, 0);
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        std::size_t w = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) w += i + 1;
        count[w] += 1;
    }
    std::vector<double> tail(m + 1);
    double acc = 0;
    for (std::size_t w = m + 1; w-- > 0;) {
        acc += count[w];
        tail[w] = acc / static_cast<double>(1ull << n);
    }
    return tail;
}

// Exact p with ties: flip signs of the observed magnitudes, keep the midrank scores.
double brute_p(const std::vector<double>& d) {
    const std::size_t n = d.size();
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(d[j]) < std::fabs(d[i]) - 1e-12) ++less;
            else if (std::fabs(std::fabs(d[j]) - std::fabs(d[i])) <= 1e-12) ++equal;
        }
        score[i] = less + (equal + 1) / 2;
    }
    double obs = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0) obs += score[i];
    std::size_t hits = 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) w += score[i];
        if (w >= obs - 1e-9) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(1ull << n);
}

} // namespace

TEST(SignedRankTable, MatchesEnumeration) {
    for (std::size_t n = 1; n <= 14; ++n) {
        const auto ref = brute_tail(n);
        const auto& t = signed_rank_table(n);
        ASSERT_EQ(t.max_sum(), ref.size() - 1);
        for (std::size_t w = 0; w < ref.size(); ++w) EXPECT_NEAR(t.tail(static_cast<long long>(w)), ref[w], 1e-12);
        EXPECT_EQ(t.tail(-3), 1.0);
        EXPECT_EQ(t.tail(static_cast<long long>(t.max_sum() + 1)), 0.0);
    }
}

TEST(SignedRankTable, LargeNIsAProbability) {
    const auto& t = signed_rank_table(200);
    double total = 0;
    for (std::size_t w = 0; w <= t.max_sum(); ++w) total += t.point(w);
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_NEAR(t.tail(static_cast<long long>(t.max_sum() / 2 + 1)), 0.5, 0.02);
    EXPECT_THROW(signed_rank_table(0), validation_error);
    EXPECT_THROW(signed_rank_table(201), validation_error);
}

TEST(SignedRankP, KnownValues) {
    EXPECT_DOUBLE_EQ(signed_rank_p(std::vector<double>{1, 2, 3}), 0.125);
    EXPECT_DOUBLE_EQ(signed_rank_p(std::vector<double>{-1, -2, -3}), 1.0);
    EXPECT_DOUBLE_EQ(signed_rank_p(std::vector<double>{-1, 2, 3}), 0.25);
    EXPECT_THROW(signed_rank_p(std::vector<double>{1, 0}), validation_error);
    EXPECT_THROW(signed_rank_p(std::vector<double>{}), validation_error);
}

TEST(SignedRankP, UntiedAgreesWithSignEnumeration) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> len(1, 14);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> d(static_cast<std::size_t>(len(rng)));
        for (auto& x : d) x = z(rng) + 0.3;
        EXPECT_DOUBLE_EQ(signed_rank_p(d), brute_p(d));
    }
}

// Tied magnitudes take midranks; a half-integer sum is referred to the table at its ceiling.
TEST(SignedRankP, TiesUseMidranksAndCeiling) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> mag(1, 3), sign(0, 1), len(2, 12);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> d(static_cast<std::size_t>(len(rng)));
        for (auto& x : d) x = (sign(rng) ? 1.0 : -1.0) * mag(rng);
        std::size_t w2 = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            std::size_t less = 0, eq = 0;
            for (double v : d) {
                if (std::fabs(v) < std::fabs(d[i])) ++less;
                else if (std::fabs(v) == std::fabs(d[i])) ++eq;
            }
            if (d[i] > 0) w2 += 2 * less + eq + 1;
        }
        const auto w = static_cast<long long>((w2 + 1) / 2);
        EXPECT_DOUBLE_EQ(signed_rank_p(d), signed_rank_table(d.size()).tail(w));
    }
    // {1, 1, -2}: midranks 1.5, 1.5, so W = 3 and P(W >= 3) = 5/8 for n = 3.
    EXPECT_DOUBLE_EQ(signed_rank_p(std::vector<double>{1, 1, -2}), 0.625);
    // {1, -1, 2}: W = 1.5 + 3 = 4.5 -> P(W >= 5) = 2/8.
    EXPECT_DOUBLE_EQ(signed_rank_p(std::vector<double>{1, -1, 2}), 0.25);
}

TEST(SignedRankP, InvariantToPositiveScale) {
    const std::vector<double> d{0.3, -1.2, 2.5, 0.7, -0.1, 4.0};
    std::vector<double> s = d;
    for (auto& x : s) x *= 7.5;
    EXPECT_DOUBLE_EQ(signed_rank_p(d), signed_rank_p(s));
}

TEST(TwoSampleT, MatchesFormula) {
    const std::vector<double> t{1, 2, 3, 4}, c{0, 1, 1, 2};
    // means 2.5 and 1, pooled var (5 + 2) / 6
    const double expect = 1.5 / std::sqrt(7.0 / 6.0 * 0.5);
    EXPECT_NEAR(two_sample_t(t, c), expect, 1e-12);
    const double half = (2.5 - 0.5) / std::sqrt(7.0 / 6.0 * (0.25 + 0.0625));
    EXPECT_NEAR(two_sample_t(t, c, 0.5), half, 1e-12);
    EXPECT_THROW(two_sample_t(std::vector<double>{1}, c), validation_error);
    EXPECT_THROW(two_sample_t(std::vector<double>{1, 1}, std::vector<double>{2, 2}), validation_error);
    EXPECT_THROW(two_sample_t(t, c, 1.5), validation_error);
}

TEST(Statistic, EvaluatesOnPrefixes) {
    StreamSet data({{1, 2, 3, 4}, {0, 1, 1, 2}, {5, -1, 2, 2}});
    const auto sr = SequentialStatistic::signed_rank({0, 1}, {1, -1});
    EXPECT_DOUBLE_EQ(sr.evaluate(data, 3), -signed_rank_p(std::vector<double>{1, 1, 2}));
    const auto t = SequentialStatistic::t_statistic(0, 1);
    EXPECT_NEAR(t.evaluate(data, 4), two_sample_t(data.streams[0], data.streams[1]), 1e-12);
    EXPECT_THROW(t.evaluate(data, 1), validation_error);
    EXPECT_THROW(t.evaluate(data, 5), data_error);
    EXPECT_DOUBLE_EQ(SequentialStatistic::running_sum(2).evaluate(data, 3), 6.0);
    EXPECT_DOUBLE_EQ(SequentialStatistic::standardized_mean(0, 1.0, 2.0).evaluate(data, 4), 1.5);
    EXPECT_TRUE(std::isinf(SequentialStatistic::gate_only().evaluate(data, 2)));
    EXPECT_THROW(SequentialStatistic::signed_rank({0}, {0}), validation_error);
    EXPECT_THROW(SequentialStatistic::signed_rank({0, 1}, {1}), validation_error);
    EXPECT_THROW(SequentialStatistic::running_sum(7).evaluate(data, 1), data_error);
}
