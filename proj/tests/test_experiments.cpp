#include "seqfwer/calibration.hpp"
#include "seqfwer/experiments.hpp"

#include <gtest/gtest.h>

using namespace seqfwer;

namespace {
const std::string data_dir = std::string(SEQFWER_SOURCE_DIR) + "/data/";
}

TEST(Triples, LoadsTheShippedData) {
    const auto t = load_triples(data_dir + "masjedi.csv");
    ASSERT_EQ(t.size(), 36u);
    EXPECT_EQ(t[0], (Triple{1.00, 0.50, 3.00}));
    EXPECT_EQ(t[3], (Triple{0.50, 2.66, 3.33}));
    const auto p = preprocess_chromosome(t);
    EXPECT_EQ(p.size(), 31u);
    EXPECT_EQ(preprocess_chromosome(p), p);
    for (const auto& x : p) EXPECT_NE(x.y_a, x.y_b);
}

TEST(Triples, ParseErrorsCarryLineNumbers) {
    auto line_of = [](const std::vector<std::string>& lines) -> std::size_t {
        try {
            parse_triples(lines);
        } catch (const parse_error& e) {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ(line_of({}), 1u);
    EXPECT_EQ(line_of({"a,b,c", "1,2,3"}), 1u);
    EXPECT_EQ(line_of({"y_c,y_b,y_a", "1,2,3", "1,x,3"}), 3u);
    EXPECT_EQ(line_of({"y_c,y_b,y_a", "1,2"}), 2u);
    EXPECT_EQ(line_of({"y_c,y_b,y_a", "1,2,3", "", "1,-2,3"}), 4u);
    EXPECT_EQ(line_of({"y_c,y_b,y_a"}), 1u);
    EXPECT_EQ(line_of({"y_c,y_b,y_a", " 1 , 2 ,3 "}), 0u);
    EXPECT_THROW(load_triples(data_dir + "no_such_file.csv"), io_error);
}

TEST(Streams, RaggedColumns) {
    const auto s = parse_streams({"a,b", "1,2", "3,", "5,"});
    EXPECT_EQ(s.names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(s.length(0), 3u);
    EXPECT_EQ(s.length(1), 1u);
    EXPECT_THROW(parse_streams({"a,b", "1,", "3,4"}), parse_error);
    EXPECT_THROW(parse_streams({"a,", "1,2"}), parse_error);
    EXPECT_THROW(s.prefix(1, 2), data_error);
}

TEST(Chromosome, DesignAndStreams) {
    const auto d = chromosome_design();
    EXPECT_EQ(d.family.size(), 6u);
    EXPECT_EQ(d.partition.size(), 4u);
    EXPECT_EQ(d.statistics[5].name(), "gate_only");
    EXPECT_EQ(chromosome_design(std::vector<double>{1, -1, 0}).statistics[5].kind(), StatisticKind::signed_rank_neg_p);
    const auto s = triples_to_streams({{1, 2, 3}, {4, 5, 6}});
    EXPECT_EQ(s.streams[0], (std::vector<double>{3, 6}));
    EXPECT_EQ(s.streams[2], (std::vector<double>{1, 4}));
}

TEST(Chromosome, ObservedOrderRejectsEverythingAtLooseThreshold) {
    const auto triples = preprocess_chromosome(load_triples(data_dir + "masjedi.csv"));
    const auto d = chromosome_design();
    const auto trace = run_in_order(chromosome_procedure(d, make_range_schedule(1, 31), 0.0140), triples_to_streams(triples));
    EXPECT_TRUE(trace.check_invariants().ok());
    EXPECT_TRUE(trace.rejects(0));
    // H_0 is gated: rejected once every contrast before it fell.
    EXPECT_EQ(trace.rejects(5), trace.rejects(3) && trace.rejects(4) && trace.rejects(1) && trace.rejects(2));
}

TEST(Chromosome, StudyIsDeterministic) {
    const auto triples = preprocess_chromosome(load_triples(data_dir + "masjedi.csv"));
    ChromosomeConfig c;
    c.schedules = {make_schedule({15, 31})};
    c.calibration_reps = 2000;
    c.permutations = 300;
    c.seed = 5;
    set_thread_count(1);
    const auto a = run_chromosome_study(c, triples);
    set_thread_count(3);
    const auto b = run_chromosome_study(c, triples);
    set_thread_count(0);
    EXPECT_EQ(a.rows[0].p_threshold, b.rows[0].p_threshold);
    EXPECT_EQ(a.rows[0].average_size, b.rows[0].average_size);
    EXPECT_EQ(a.rows[0].size_histogram, b.rows[0].size_histogram);
    std::size_t total = 0;
    for (auto h : a.rows[0].size_histogram) total += h;
    EXPECT_EQ(total, 300u);
    c.schedules = {make_schedule({15, 40})};
    EXPECT_THROW(run_chromosome_study(c, triples), validation_error);
}

TEST(Maxsd, ChainMapsHighestDoseFirst) {
    EXPECT_EQ(chain_dose(0, 4), 4u);
    EXPECT_EQ(chain_dose(3, 4), 1u);
    MaxsdScenario s;
    const auto proc = maxsd_procedure(s, make_schedule({5, 10}), 2.0);
    EXPECT_EQ(proc.statistics[0].streams(), (std::vector<std::size_t>{4, 0}));
    EXPECT_EQ(proc.statistics[3].streams(), (std::vector<std::size_t>{1, 0}));
    EXPECT_TRUE(proc.family.is_closed());
}

TEST(Maxsd, EstimateAndGroupSizesFromATrace) {
    DecisionTrace t;
    t.terminal_state = DecisionState(4);
    t.terminal_state.rejected.insert(0);
    t.terminal_state.rejected.insert(1);
    t.terminal_state.rejected.insert(3); // not leading: does not count
    t.terminal_state.accepted.insert(2);
    t.terminal_state.sample_size = 30;
    t.decision_size = {10, 20, 30, 25};
    EXPECT_EQ(maxsd_estimate(t), 2u);
    EXPECT_EQ(maxsd_group_sizes(t), (std::vector<std::size_t>{30, 25, 30, 20, 10}));
}

TEST(Maxsd, SmallStudyInvariants) {
    MaxsdScenario s;
    s.reps = 400;
    s.calibration_reps = 2000;
    s.seed = 3;
    s.max_n = 20;
    const auto study = run_maxsd_study(s);
    double total = 0;
    for (double p : study.sequential.p_maxsd) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    ASSERT_TRUE(study.fixed);
    for (double n : study.fixed->average_size) EXPECT_DOUBLE_EQ(n, 20.0);
    for (double n : study.sequential.average_size) EXPECT_LE(n, 20.0);
    // Control runs to the end of every replicate, so it is never smaller than a dose arm.
    for (std::size_t j = 1; j <= s.k; ++j) EXPECT_GE(study.sequential.average_size[0], study.sequential.average_size[j]);
    EXPECT_GT(study.sequential.critical, study.fixed->critical);
}

TEST(Maxsd, Validation) {
    MaxsdScenario s;
    s.mu = {0, 1};
    EXPECT_THROW(s.validate(), validation_error);
    s = MaxsdScenario{};
    s.schedule = make_schedule({2, 10});
    EXPECT_THROW(s.validate(), validation_error);
    s.schedule = make_schedule({1, 50});
    EXPECT_THROW(s.validate(), validation_error);
    s.schedule.reset();
    s.lambda = 0;
    EXPECT_THROW(s.validate(), validation_error);
}
