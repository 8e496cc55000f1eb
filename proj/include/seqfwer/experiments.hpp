#pragma once

// The chromosome-aberration permutation study and the maximum-safe-dose
// operating-characteristics simulation.

#include "seqfwer/calibration.hpp"
#include "seqfwer/core.hpp"
#include "seqfwer/parallel.hpp"
#include "seqfwer/procedures.hpp"
#include "seqfwer/statistics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace seqfwer {

// ---------------------------------------------------------------------------
// CSV input.

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_number(std::string_view field, std::size_t line, const std::string& column) {
    double v = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last)
        throw parse_error("field '" + column + "' is not a number: '" + std::string(field) + "'", line);
    if (!std::isfinite(v)) throw parse_error("field '" + column + "' is not finite", line);
    return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    if (in.bad()) throw io_error("error reading " + path);
    return lines;
}

} // namespace detail

struct Triple {
    double y_c = 0;
    double y_b = 0;
    double y_a = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

inline std::vector<Triple> parse_triples(const std::vector<std::string>& lines) {
    if (lines.empty() || detail::trim(lines[0]).empty()) throw parse_error("empty file", 1);
    const auto header = detail::split_csv(lines[0]);
    if (header.size() != 3 || header[0] != "y_c" || header[1] != "y_b" || header[2] != "y_a")
        throw parse_error("header must be y_c,y_b,y_a", 1);
    std::vector<Triple> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (detail::trim(lines[i]).empty()) continue;
        const auto f = detail::split_csv(lines[i]);
        if (f.size() != 3)
            throw parse_error("expected 3 fields, found " + std::to_string(f.size()), i + 1);
        Triple t{detail::parse_number(f[0], i + 1, "y_c"), detail::parse_number(f[1], i + 1, "y_b"),
                 detail::parse_number(f[2], i + 1, "y_a")};
        if (t.y_c < 0 || t.y_b < 0 || t.y_a < 0) throw parse_error("negative response", i + 1);
        out.push_back(t);
    }
    if (out.empty()) throw parse_error("no data rows", lines.size());
    return out;
}

inline std::vector<Triple> load_triples(const std::string& path) { return parse_triples(detail::read_lines(path)); }

// Drops the subjects whose before and after responses coincide.
inline std::vector<Triple> preprocess_chromosome(const std::vector<Triple>& triples) {
    std::vector<Triple> out;
    std::copy_if(triples.begin(), triples.end(), std::back_inserter(out),
                 [](const Triple& t) { return t.y_a != t.y_b; });
    return out;
}

// One column per stream, named by the header; a column may end early with empty cells.
inline StreamSet parse_streams(const std::vector<std::string>& lines) {
    if (lines.empty() || detail::trim(lines[0]).empty()) throw parse_error("empty file", 1);
    const auto header = detail::split_csv(lines[0]);
    StreamSet data;
    for (auto h : header) {
        if (h.empty()) throw parse_error("empty column name", 1);
        data.names.emplace_back(h);
    }
    data.streams.resize(header.size());
    std::vector<char> ended(header.size(), 0);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (detail::trim(lines[i]).empty()) continue;
        const auto f = detail::split_csv(lines[i]);
        if (f.size() != header.size())
            throw parse_error("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                              i + 1);
        for (std::size_t s = 0; s < f.size(); ++s) {
            if (f[s].empty()) {
                ended[s] = 1;
                continue;
            }
            if (ended[s]) throw parse_error("column '" + data.names[s] + "' resumes after an empty cell", i + 1);
            data.streams[s].push_back(detail::parse_number(f[s], i + 1, data.names[s]));
        }
    }
    return data;
}

inline StreamSet load_streams(const std::string& path) { return parse_streams(detail::read_lines(path)); }

// ---------------------------------------------------------------------------
// Chromosome study.

struct ChromosomeConfig {
    std::string data_path;
    double alpha = 0.05;
    std::vector<SampleSchedule> schedules;
    std::size_t calibration_reps = 20000;
    std::size_t permutations = 10000;
    std::uint64_t seed = 0;
    // Weights on (y_a, y_b, y_c) for a signed-rank test of H_0; unset decides H_0 by its gate alone.
    std::optional<std::vector<double>> h0_weights;

    void validate() const {
        if (!(alpha > 0 && alpha < 1)) throw validation_error("alpha must lie in (0, 1)");
        if (schedules.empty()) throw validation_error("at least one schedule is required");
        if (permutations < 1) throw validation_error("permutations must be >= 1");
        if (h0_weights && h0_weights->size() != 3) throw validation_error("h0_weights needs 3 entries");
    }
};

// Family {H_+, H_b, H_c, H_*, H_#, H_0} over streams (y_a, y_b, y_c) = (0, 1, 2).
struct ChromosomeDesign {
    HypothesisFamily family;
    OrderedPartition partition;
    std::vector<SequentialStatistic> statistics;
};

inline const std::vector<std::string>& chromosome_labels() {
    static const std::vector<std::string> labels{"H_+", "H_b", "H_c", "H_*", "H_#", "H_0"};
    return labels;
}

inline ChromosomeDesign chromosome_design(const std::optional<std::vector<double>>& h0_weights = std::nullopt) {
    std::vector<CompositeHypothesis> elems;
    for (std::size_t j = 1; j <= 6; ++j) elems.push_back(CompositeHypothesis::elementary(j));
    ChromosomeDesign d;
    d.family = HypothesisFamily(6, elems, chromosome_labels());
    d.partition = OrderedPartition({{elems[0]}, {elems[1], elems[2]}, {elems[3], elems[4]}, {elems[5]}});
    const std::vector<std::size_t> s{0, 1, 2};
    d.statistics = {
        SequentialStatistic::signed_rank(s, {1, -0.5, -0.5}), SequentialStatistic::signed_rank(s, {1, -1, 0}),
        SequentialStatistic::signed_rank(s, {1, 0, -1}),      SequentialStatistic::signed_rank(s, {1, 1, -2}),
        SequentialStatistic::signed_rank(s, {1, -2, 1}),
        h0_weights ? SequentialStatistic::signed_rank(s, *h0_weights) : SequentialStatistic::gate_only(),
    };
    return d;
}

inline StreamSet triples_to_streams(const std::vector<Triple>& triples) {
    StreamSet data;
    data.names = {"y_a", "y_b", "y_c"};
    data.streams.assign(3, {});
    for (const auto& t : triples) {
        data.streams[0].push_back(t.y_a);
        data.streams[1].push_back(t.y_b);
        data.streams[2].push_back(t.y_c);
    }
    return data;
}

// p-value threshold B for a -p statistic is minus the calibrated critical value.
inline InOrderConfig chromosome_procedure(const ChromosomeDesign& design, const SampleSchedule& schedule,
                                          double p_threshold) {
    InOrderConfig c;
    c.family = design.family;
    c.partition = design.partition;
    c.schedule = schedule;
    c.statistics = design.statistics;
    c.thresholds.assign(design.family.size(), -p_threshold);
    return c;
}

struct ChromosomeRow {
    SampleSchedule schedule;
    double p_threshold = 0;    // reject when the one-sided p-value is <= this
    double average_size = 0;   // mean over permutations of the n at which the last decision was made
    double size_se = 0;
    std::size_t observed_size = 0;      // same, on the data in its recorded order
    std::vector<std::string> observed_rejected;
    std::vector<std::size_t> size_histogram; // counts per look of the schedule
};

struct ChromosomeStudy {
    std::size_t triples = 0;
    double alpha = 0.05;
    std::size_t calibration_reps = 0;
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
    std::vector<ChromosomeRow> rows;
};

inline ChromosomeStudy run_chromosome_study(const ChromosomeConfig& config, const std::vector<Triple>& triples) {
    config.validate();
    const ChromosomeDesign design = chromosome_design(config.h0_weights);
    ChromosomeStudy study;
    study.triples = triples.size();
    study.alpha = config.alpha;
    study.calibration_reps = config.calibration_reps;
    study.permutations = config.permutations;
    study.seed = config.seed;
    const StreamSet observed = triples_to_streams(triples);

    for (std::size_t si = 0; si < config.schedules.size(); ++si) {
        const SampleSchedule& schedule = config.schedules[si];
        if (schedule.max() > triples.size())
            throw validation_error("schedule " + schedule.to_string() + " exceeds the " +
                                   std::to_string(triples.size()) + " available triples");
        ChromosomeRow row;
        row.schedule = schedule;
        const double critical = calibrate_single(SignedRankNullSampler{}, schedule, config.alpha,
                                                 config.calibration_reps, derive_seed(config.seed, 2 * si));
        row.p_threshold = -critical;
        const InOrderConfig procedure = chromosome_procedure(design, schedule, row.p_threshold);

        const DecisionTrace obs = run_in_order(procedure, observed);
        row.observed_size = obs.final_sample_size();
        for (auto e : obs.terminal_state.rejected.indices()) row.observed_rejected.push_back(design.family.label(e));

        std::vector<std::size_t> sizes(config.permutations);
        const std::uint64_t perm_seed = derive_seed(config.seed, 2 * si + 1);
        parallel_for(config.permutations, [&](std::size_t i) {
            Rng rng(derive_seed(perm_seed, i));
            std::vector<Triple> shuffled = triples;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            sizes[i] = run_in_order(procedure, triples_to_streams(shuffled)).final_sample_size();
        });
        double sum = 0, sum2 = 0;
        row.size_histogram.assign(schedule.size(), 0);
        for (auto n : sizes) {
            sum += static_cast<double>(n);
            sum2 += static_cast<double>(n) * static_cast<double>(n);
            const auto it = std::lower_bound(schedule.sizes().begin(), schedule.sizes().end(), n);
            ++row.size_histogram[static_cast<std::size_t>(it - schedule.sizes().begin())];
        }
        const auto m = static_cast<double>(sizes.size());
        row.average_size = sum / m;
        row.size_se = m > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / m) / (m - 1)) / m) : 0.0;
        study.rows.push_back(std::move(row));
    }
    return study;
}

// ---------------------------------------------------------------------------
// Maximum safe dose.

struct MaxsdScenario {
    std::size_t k = 4;
    double lambda = 1.0;
    std::vector<double> mu{0, 0, 0.5, 1.0, 2.0}; // mu_0 (control) .. mu_k
    double sigma = 1.0;
    std::size_t max_n = 50;
    std::optional<SampleSchedule> schedule; // default {2, ..., max_n}
    double alpha = 0.05;
    std::size_t reps = 10000;
    std::size_t calibration_reps = 20000;
    std::uint64_t seed = 0;
    bool fixed_comparator = true;

    void validate() const {
        if (k < 1) throw validation_error("k must be >= 1");
        if (!(lambda > 0 && lambda <= 1)) throw validation_error("lambda must lie in (0, 1]");
        if (mu.size() != k + 1)
            throw validation_error("mu needs k+1 = " + std::to_string(k + 1) + " entries, got " +
                                   std::to_string(mu.size()));
        if (!(sigma > 0)) throw validation_error("sigma must be positive");
        if (max_n < 2) throw validation_error("max_n must be >= 2");
        if (!(alpha > 0 && alpha < 1)) throw validation_error("alpha must lie in (0, 1)");
        if (reps < 1) throw validation_error("reps must be >= 1");
        if (schedule) {
            if (schedule->max() != max_n)
                throw validation_error("schedule must end at max_n = " + std::to_string(max_n));
            if (schedule->min() < 2) throw validation_error("t statistics need every look n >= 2");
        }
    }

    SampleSchedule sequential_schedule() const { return schedule ? *schedule : make_range_schedule(2, max_n); }
};

// Chain element i (0-based, block i+1) tests dose k-i against control: the
// highest dose is examined first and each rejection declares one more dose safe.
inline std::size_t chain_dose(std::size_t element, std::size_t k) { return k - element; }

inline InOrderConfig maxsd_procedure(const MaxsdScenario& s, const SampleSchedule& schedule, double critical) {
    const auto chain = build_chain_family(s.k);
    InOrderConfig c;
    c.family = chain.family;
    c.partition = chain.partition;
    c.schedule = schedule;
    for (std::size_t i = 0; i < s.k; ++i)
        c.statistics.push_back(SequentialStatistic::t_statistic(chain_dose(i, s.k), 0, s.lambda));
    c.thresholds.assign(s.k, critical);
    return c;
}

// k minus the number of leading rejected chain elements.
inline std::size_t maxsd_estimate(const DecisionTrace& trace) {
    std::size_t lead = 0;
    while (lead < trace.universe() && trace.rejects(lead)) ++lead;
    return trace.universe() - lead;
}

// Sample size drawn from each group 0..k: a dose stops when decided; control runs to the end.
inline std::vector<std::size_t> maxsd_group_sizes(const DecisionTrace& trace) {
    const std::size_t k = trace.universe();
    std::vector<std::size_t> out(k + 1, trace.final_sample_size());
    for (std::size_t i = 0; i < k; ++i) out[chain_dose(i, k)] = trace.decision_size[i];
    return out;
}

struct MaxsdArm {
    SampleSchedule schedule;
    double critical = 0;
    std::vector<double> average_size; // per group 0..k
    std::vector<double> p_maxsd;      // per dose level 0..k
    double weighted_maxsd = 0;
};

struct MaxsdStudy {
    MaxsdScenario scenario;
    MaxsdArm sequential;
    std::optional<MaxsdArm> fixed;
};

inline MaxsdArm run_maxsd_arm(const MaxsdScenario& s, const SampleSchedule& schedule, std::uint64_t seed) {
    MaxsdArm arm;
    arm.schedule = schedule;
    arm.critical = calibrate_single(TwoSampleTSampler{s.lambda, s.lambda * s.mu[0], s.mu[0], s.sigma}, schedule,
                                    s.alpha, s.calibration_reps, derive_seed(seed, 0));
    const InOrderConfig procedure = maxsd_procedure(s, schedule, arm.critical);
    std::vector<std::size_t> estimate(s.reps);
    std::vector<std::vector<std::size_t>> sizes(s.reps);
    const std::uint64_t sim_seed = derive_seed(seed, 1);
    parallel_for(s.reps, [&](std::size_t r) {
        Rng rng(derive_seed(sim_seed, r));
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<std::vector<double>> groups(s.k + 1, std::vector<double>(s.max_n));
        for (std::size_t j = 0; j <= s.k; ++j)
            for (auto& x : groups[j]) x = s.mu[j] + s.sigma * z(rng);
        const DecisionTrace trace = run_closed(procedure, StreamSet(std::move(groups)));
        estimate[r] = maxsd_estimate(trace);
        sizes[r] = maxsd_group_sizes(trace);
    });
    arm.average_size.assign(s.k + 1, 0.0);
    arm.p_maxsd.assign(s.k + 1, 0.0);
    for (std::size_t r = 0; r < s.reps; ++r) {
        arm.p_maxsd[estimate[r]] += 1.0;
        for (std::size_t j = 0; j <= s.k; ++j) arm.average_size[j] += static_cast<double>(sizes[r][j]);
    }
    const auto reps = static_cast<double>(s.reps);
    for (std::size_t j = 0; j <= s.k; ++j) {
        arm.average_size[j] /= reps;
        arm.p_maxsd[j] /= reps;
        arm.weighted_maxsd += static_cast<double>(j) * arm.p_maxsd[j];
    }
    return arm;
}

inline MaxsdStudy run_maxsd_study(const MaxsdScenario& scenario) {
    scenario.validate();
    MaxsdStudy study;
    study.scenario = scenario;
    study.sequential = run_maxsd_arm(scenario, scenario.sequential_schedule(), derive_seed(scenario.seed, 1));
    if (scenario.fixed_comparator)
        study.fixed = run_maxsd_arm(scenario, make_schedule({static_cast<long long>(scenario.max_n)}),
                                    derive_seed(scenario.seed, 2));
    return study;
}

} // namespace seqfwer
