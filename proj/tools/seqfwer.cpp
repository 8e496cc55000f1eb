// seqfwer: calibrate, run, simulate-chromosome, simulate-maxsd, verify.
//
// Exit status: 0 ok, 1 validation/config error, 2 failed verification bound, 3 I/O error.

#include "seqfwer/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace seqfwer;

enum Exit { ok = 0, invalid = 1, bound_failed = 2, io_failed = 3 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<double> alpha;
    std::optional<std::string> schedule;
    std::string out;
    std::string format = "json";
    std::optional<unsigned> threads;
    bool verbose = false;
};

void common_flags(CLI::App* app, Flags& f, bool stochastic, bool with_schedule) {
    app->add_option("--config", f.config, "JSON config file")->required();
    if (stochastic) {
        app->add_option("--seed", f.seed, "override the config seed");
        app->add_option("--reps", f.reps, "override the replicate count");
        app->add_option("--alpha", f.alpha, "override the type-I level");
    }
    if (with_schedule) app->add_option("--schedule", f.schedule, "override the schedule: 5,10,20 or first:last[:step]");
    app->add_option("--out", f.out, "output path (default stdout)");
    app->add_option("--format", f.format, "json, csv or markdown")
        ->check(CLI::IsMember({"json", "csv", "markdown"}));
    app->add_option("--threads", f.threads, "worker threads (default SEQFWER_THREADS, else all cores)")
        ->check(CLI::PositiveNumber);
    app->add_flag("--verbose", f.verbose, "progress on stderr; per-look statistics in run traces");
}

void note(const Flags& f, const std::string& msg) {
    if (f.verbose) std::cerr << msg << "\n";
}

int do_calibrate(const Flags& f) {
    auto job = parse_calibrate_config(read_json_file(f.config));
    if (f.seed) job.spec.seed = *f.seed;
    if (f.reps) job.spec.reps = *f.reps;
    if (f.alpha) job.spec.alpha = *f.alpha;
    if (f.schedule) job.schedule = parse_schedule_flag(*f.schedule);
    note(f, "calibrating " + std::to_string(job.spec.k) + " rungs on " + job.schedule.to_string());
    const CalibrationReport rep = run_calibration(job);
    write_text(f.out, render_calibration(rep, parse_format(f.format)));
    if (!rep.all_pass()) {
        std::cerr << "calibration re-simulation exceeded its bound\n";
        return bound_failed;
    }
    return ok;
}

int do_run(const Flags& f) {
    const json cfg = read_json_file(f.config);
    const std::optional<SampleSchedule> schedule =
        f.schedule ? std::optional(parse_schedule_flag(*f.schedule)) : std::nullopt;
    const RunJob job = parse_run_config(cfg, f.config, schedule);
    const DecisionTrace trace = execute(job, RunOptions{f.verbose});
    const HypothesisFamily& family =
        job.procedure == ProcedureKind::step_down || job.procedure == ProcedureKind::dual ? job.step_down.family
                                                                                         : job.in_order.family;
    write_text(f.out, render_trace(trace, family, job.procedure, job.seed, parse_format(f.format), f.verbose));
    return ok;
}

int do_chromosome(const Flags& f) {
    auto cfg = parse_chromosome_config(read_json_file(f.config), f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.reps) cfg.permutations = *f.reps;
    if (f.alpha) cfg.alpha = *f.alpha;
    cfg.validate();
    const auto triples = preprocess_chromosome(load_triples(cfg.data_path));
    note(f, std::to_string(triples.size()) + " triples after removing ties");
    for (const auto& s : cfg.schedules)
        if (s.max() != triples.size())
            std::cerr << "warning: schedule " << s.to_string() << " does not end at " << triples.size() << "\n";
    const ChromosomeStudy study = run_chromosome_study(cfg, triples);
    write_text(f.out, render_chromosome(study, parse_format(f.format)));
    return ok;
}

int do_maxsd(const Flags& f) {
    auto s = parse_maxsd_config(read_json_file(f.config));
    if (f.seed) s.seed = *f.seed;
    if (f.reps) s.reps = *f.reps;
    if (f.alpha) s.alpha = *f.alpha;
    if (f.schedule) s.schedule = parse_schedule_flag(*f.schedule);
    s.validate();
    note(f, "simulating " + std::to_string(s.reps) + " replicates on " + s.sequential_schedule().to_string());
    const MaxsdStudy study = run_maxsd_study(s);
    write_text(f.out, render_maxsd(study, parse_format(f.format)));
    return ok;
}

int do_verify(const Flags& f) {
    auto o = parse_verify_config(read_json_file(f.config));
    if (f.seed) o.seed = *f.seed;
    if (f.reps) {
        o.reps = *f.reps;
        o.oracle_reps = *f.reps;
    }
    if (f.alpha) o.alpha = *f.alpha;
    o.validate();
    const SuiteResult r = run_verification_suite(o);
    if (f.verbose)
        for (const auto& c : r.checks)
            if (!c.pass) std::cerr << "FAIL " << c.group << ": " << c.name << " " << c.detail << "\n";
    write_text(f.out, render_suite(r, o, parse_format(f.format)));
    if (!r.all_pass()) {
        std::cerr << "verification failed\n";
        return bound_failed;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential multiple testing with familywise error control"};
    app.require_subcommand(1);
    Flags f;
    auto* calibrate = app.add_subcommand("calibrate", "Monte Carlo critical-value ladders");
    common_flags(calibrate, f, true, true);
    auto* run = app.add_subcommand("run", "run a procedure on stream data (CSV, one column per stream)");
    common_flags(run, f, false, true);
    auto* chromosome = app.add_subcommand("simulate-chromosome", "permutation study of the chromosome aberration data");
    common_flags(chromosome, f, true, false);
    auto* maxsd = app.add_subcommand("simulate-maxsd", "maximum-safe-dose operating characteristics");
    common_flags(maxsd, f, true, true);
    auto* verify = app.add_subcommand("verify", "FWER, condition, oracle and invariant checks");
    common_flags(verify, f, true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : invalid;
    }

    try {
        if (f.threads) set_thread_count(*f.threads);
        if (*calibrate) return do_calibrate(f);
        if (*run) return do_run(f);
        if (*chromosome) return do_chromosome(f);
        if (*maxsd) return do_maxsd(f);
        if (*verify) return do_verify(f);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io_failed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    }
    return invalid;
}
