#pragma once

// JSON configs and reports. Config readers reject unknown keys; every config
// must carry a seed.

#include "seqfwer/calibration.hpp"
#include "seqfwer/experiments.hpp"
#include "seqfwer/procedures.hpp"
#include "seqfwer/suite.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace seqfwer {

using json = nlohmann::json;

enum class ReportFormat { json, csv, markdown };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw validation_error("unknown report format '" + s + "' (expected json, csv or markdown)");
}

// ---------------------------------------------------------------------------
// Files.

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
}

// Empty path writes to stdout.
inline void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << text;
    out.flush();
    if (!out) throw io_error("error writing " + path);
}

// Relative paths inside a config resolve against the config's directory.
inline std::string resolve_path(const std::string& config_path, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute() || config_path.empty()) return p;
    return (std::filesystem::path(config_path).parent_path() / path).lexically_normal().string();
}

// ---------------------------------------------------------------------------
// Config reading.

class ConfigReader {
public:
    ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw config_error(where_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw config_error(path(key) + ": missing required field");
        return j_.at(key);
    }

    template <class T>
    T require(const std::string& key) {
        return convert<T>(raw(key), key);
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(j_.at(key), key);
    }

    template <class T>
    std::optional<T> optional(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
        return convert<T>(j_.at(key), key);
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    // Throws on any key that was never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw config_error(path(it.key()) + ": unknown key");
    }

private:
    template <class T>
    T convert(const json& v, const std::string& key) const {
        try {
            if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
                if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
                    throw config_error(path(key) + ": expected a non-negative integer");
            }
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw config_error(path(key) + ": expected a number");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            throw config_error(path(key) + ": " + e.what());
        }
    }

    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

// Either [n1, n2, ...] or {"first": a, "last": b, "step": s}.
inline SampleSchedule parse_schedule(const json& v, const std::string& where) {
    try {
        if (v.is_array()) {
            std::vector<long long> sizes;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number_integer())
                    throw config_error(where + "[" + std::to_string(i) + "]: expected an integer");
                sizes.push_back(v[i].get<long long>());
            }
            return make_schedule(std::span<const long long>(sizes));
        }
        if (v.is_object()) {
            ConfigReader r(v, where);
            const auto first = r.require<long long>("first");
            const auto last = r.require<long long>("last");
            const auto step = r.get<long long>("step", 1);
            r.finish();
            if (first < 1 || last < first || step < 1) throw validation_error("need 1 <= first <= last and step >= 1");
            return make_range_schedule(static_cast<std::size_t>(first), static_cast<std::size_t>(last),
                                       static_cast<std::size_t>(step));
        }
    } catch (const validation_error& e) {
        throw validation_error(where + ": " + e.what());
    }
    throw config_error(where + ": expected an array of sample sizes or {first, last, step}");
}

// "5,10,20" or "first:last[:step]" from the command line.
inline SampleSchedule parse_schedule_flag(const std::string& s) {
    try {
        if (s.find(':') != std::string::npos) {
            std::vector<long long> parts;
            std::stringstream ss(s);
            for (std::string p; std::getline(ss, p, ':');) parts.push_back(std::stoll(p));
            if (parts.size() < 2 || parts.size() > 3 || parts[0] < 1 || parts[1] < parts[0] ||
                (parts.size() == 3 && parts[2] < 1))
                throw validation_error("expected first:last[:step]");
            return make_range_schedule(static_cast<std::size_t>(parts[0]), static_cast<std::size_t>(parts[1]),
                                       parts.size() == 3 ? static_cast<std::size_t>(parts[2]) : 1);
        }
        std::vector<long long> sizes;
        std::stringstream ss(s);
        for (std::string p; std::getline(ss, p, ',');) sizes.push_back(std::stoll(p));
        return make_schedule(std::span<const long long>(sizes));
    } catch (const validation_error& e) {
        throw validation_error(std::string("--schedule: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw validation_error("--schedule: cannot parse '" + s + "'");
    } catch (const std::out_of_range&) {
        throw validation_error("--schedule: value out of range in '" + s + "'");
    }
}

inline std::string compact_schedule(const SampleSchedule& s) {
    const auto& v = s.sizes();
    if (v.size() > 4) {
        bool unit = true;
        for (std::size_t i = 1; i < v.size(); ++i) unit = unit && v[i] == v[i - 1] + 1;
        if (unit) return "{" + std::to_string(v.front()) + ", ..., " + std::to_string(v.back()) + "}";
    }
    std::string out = "{";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out + "}";
}

// ---------------------------------------------------------------------------
// Samplers and statistics from JSON.

inline AnyPathSampler parse_sampler(const json& v, const std::string& where) {
    ConfigReader r(v, where);
    const auto type = r.require<std::string>("type");
    AnyPathSampler out;
    if (type == "gaussian_mean") {
        out = GaussianMeanSampler{r.get<double>("mean", 0.0)};
    } else if (type == "signed_rank") {
        out = SignedRankNullSampler{};
    } else if (type == "two_sample_t") {
        TwoSampleTSampler s;
        s.lambda = r.get<double>("lambda", 1.0);
        s.control_mean = r.get<double>("control_mean", 0.0);
        s.treatment_mean = r.get<double>("treatment_mean", s.lambda * s.control_mean);
        s.sigma = r.get<double>("sigma", 1.0);
        if (!(s.lambda > 0 && s.lambda <= 1)) throw validation_error(r.path("lambda") + ": must lie in (0, 1]");
        if (!(s.sigma > 0)) throw validation_error(r.path("sigma") + ": must be positive");
        out = s;
    } else {
        throw config_error(r.path("type") + ": unknown sampler '" + type +
                           "' (expected gaussian_mean, signed_rank or two_sample_t)");
    }
    r.finish();
    return out;
}

inline std::size_t stream_index(const StreamSet& data, const std::string& name, const std::string& where) {
    for (std::size_t i = 0; i < data.names.size(); ++i)
        if (data.names[i] == name) return i;
    throw config_error(where + ": no data column named '" + name + "'");
}

inline SequentialStatistic parse_statistic(const json& v, const std::string& where, const StreamSet& data) {
    ConfigReader r(v, where);
    const auto type = r.require<std::string>("type");
    std::optional<SequentialStatistic> out;
    if (type == "signed_rank") {
        const auto names = r.require<std::vector<std::string>>("streams");
        std::vector<std::size_t> idx;
        for (const auto& n : names) idx.push_back(stream_index(data, n, r.path("streams")));
        out = SequentialStatistic::signed_rank(idx, r.require<std::vector<double>>("weights"));
    } else if (type == "t") {
        out = SequentialStatistic::t_statistic(stream_index(data, r.require<std::string>("treatment"), r.path("treatment")),
                                               stream_index(data, r.require<std::string>("control"), r.path("control")),
                                               r.get<double>("lambda", 1.0));
    } else if (type == "mean") {
        out = SequentialStatistic::standardized_mean(stream_index(data, r.require<std::string>("stream"), r.path("stream")),
                                                     r.get<double>("mu0", 0.0), r.get<double>("sigma", 1.0));
    } else if (type == "sum") {
        out = SequentialStatistic::running_sum(stream_index(data, r.require<std::string>("stream"), r.path("stream")));
    } else if (type == "gate") {
        out = SequentialStatistic::gate_only();
    } else {
        throw config_error(r.path("type") + ": unknown statistic '" + type +
                           "' (expected signed_rank, t, mean, sum or gate)");
    }
    r.finish();
    return *out;
}

inline CriticalLadder parse_ladder(const json& v, const std::string& where) {
    ConfigReader r(v, where);
    CriticalLadder l;
    l.upper = r.require<std::vector<double>>("upper");
    l.lower = r.optional<std::vector<double>>("lower");
    r.finish();
    try {
        l.validate();
    } catch (const validation_error& e) {
        throw validation_error(where + ": " + e.what());
    }
    return l;
}

// ---------------------------------------------------------------------------
// Calibrate.

struct CalibrateJob {
    CalibrationSpec spec;
    SampleSchedule schedule;
    AnyPathSampler sampler;
    std::optional<AnyPathSampler> alternative;
    std::vector<std::string> hypotheses;
    bool validate = true;
};

inline CalibrateJob parse_calibrate_config(const json& j, const std::string& where = "config") {
    ConfigReader r(j, where);
    CalibrateJob job;
    job.spec.seed = r.require<std::uint64_t>("seed");
    job.spec.alpha = r.get<double>("alpha", 0.05);
    job.spec.beta = r.optional<double>("beta");
    job.spec.reps = r.get<std::size_t>("reps", 20000);
    job.spec.k = r.get<std::size_t>("k", 1);
    job.schedule = parse_schedule(r.raw("schedule"), r.path("schedule"));
    job.sampler = parse_sampler(r.raw("sampler"), r.path("sampler"));
    if (r.has("alternative")) job.alternative = parse_sampler(r.raw("alternative"), r.path("alternative"));
    job.hypotheses = r.get<std::vector<std::string>>("hypotheses", {});
    job.validate = r.get<bool>("validate", true);
    r.finish();
    if (job.spec.beta && !job.alternative) throw config_error(r.path("alternative") + ": required when beta is set");
    if (!job.spec.beta && job.alternative) throw config_error(r.path("beta") + ": required when alternative is set");
    if (job.hypotheses.empty())
        for (std::size_t j2 = 1; j2 <= job.spec.k; ++j2) job.hypotheses.push_back("H" + std::to_string(j2));
    if (job.hypotheses.size() != job.spec.k)
        throw validation_error(r.path("hypotheses") + ": need k = " + std::to_string(job.spec.k) + " labels");
    return job;
}

inline CalibrationReport run_calibration(const CalibrateJob& job) {
    job.spec.validate();
    CalibrationReport rep;
    rep.k = job.spec.k;
    rep.schedule = job.schedule;
    rep.alpha = job.spec.alpha;
    rep.beta = job.spec.beta;
    rep.reps = job.spec.reps;
    rep.seed = job.spec.seed;
    rep.hypotheses = job.hypotheses;
    const CriticalLadder ladder = job.alternative ? calibrate_dual(job.sampler, *job.alternative, job.schedule, job.spec)
                                                  : calibrate_ladder(job.sampler, job.schedule, job.spec);
    rep.ladders.assign(job.spec.k, ladder);
    if (job.validate)
        rep.validation = validate_ladder(job.sampler, job.alternative ? &*job.alternative : nullptr, job.schedule,
                                         ladder, job.spec, derive_seed(job.spec.seed, 0x5EED));
    return rep;
}

// ---------------------------------------------------------------------------
// Run.

enum class ProcedureKind { step_down, dual, in_order, closed };

inline ProcedureKind parse_procedure(const std::string& s, const std::string& where) {
    if (s == "step_down") return ProcedureKind::step_down;
    if (s == "dual") return ProcedureKind::dual;
    if (s == "in_order") return ProcedureKind::in_order;
    if (s == "closed") return ProcedureKind::closed;
    throw config_error(where + ": unknown procedure '" + s + "' (expected step_down, dual, in_order or closed)");
}

inline const char* to_string(ProcedureKind k) {
    switch (k) {
    case ProcedureKind::step_down: return "step_down";
    case ProcedureKind::dual: return "dual";
    case ProcedureKind::in_order: return "in_order";
    case ProcedureKind::closed: return "closed";
    }
    return "?";
}

struct RunJob {
    ProcedureKind procedure = ProcedureKind::step_down;
    std::uint64_t seed = 0;
    StreamSet data;
    StepDownConfig step_down;
    InOrderConfig in_order;
};

inline json ladder_to_json(const CriticalLadder& l);

// Reads the stream CSV named in the config as well.
inline RunJob parse_run_config(const json& j, const std::string& config_path,
                               const std::optional<SampleSchedule>& schedule_override = std::nullopt) {
    ConfigReader r(j, "config");
    RunJob job;
    job.seed = r.require<std::uint64_t>("seed");
    job.procedure = parse_procedure(r.require<std::string>("procedure"), r.path("procedure"));
    job.data = load_streams(resolve_path(config_path, r.require<std::string>("data")));
    const SampleSchedule schedule =
        schedule_override ? *schedule_override : parse_schedule(r.raw("schedule"), r.path("schedule"));
    if (schedule_override) r.optional<json>("schedule");

    std::vector<CriticalLadder> from_file;
    if (r.has("ladders_from")) {
        const auto path = resolve_path(config_path, r.require<std::string>("ladders_from"));
        const json cal = read_json_file(path);
        if (!cal.contains("ladders") || !cal.at("ladders").is_array())
            throw config_error(path + ": not a calibration report (no ladders array)");
        for (std::size_t i = 0; i < cal.at("ladders").size(); ++i)
            from_file.push_back(parse_ladder(cal.at("ladders")[i], path + ".ladders[" + std::to_string(i) + "]"));
    }

    const json& hyps = r.raw("hypotheses");
    if (!hyps.is_array() || hyps.empty()) throw config_error(r.path("hypotheses") + ": expected a non-empty array");
    std::vector<std::string> labels;
    std::vector<CompositeHypothesis> elements;
    std::vector<SequentialStatistic> statistics;
    std::vector<CriticalLadder> ladders;
    std::vector<double> thresholds;
    std::size_t k = 0;
    const bool single = job.procedure == ProcedureKind::in_order || job.procedure == ProcedureKind::closed;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        const std::string where = r.path("hypotheses") + "[" + std::to_string(i) + "]";
        ConfigReader h(hyps[i], where);
        labels.push_back(h.get<std::string>("label", "H" + std::to_string(i + 1)));
        const auto members = h.get<std::vector<std::size_t>>("members", {i + 1});
        try {
            elements.emplace_back(members);
        } catch (const validation_error& e) {
            throw validation_error(h.path("members") + ": " + e.what());
        }
        k = std::max(k, elements.back().max_member());
        statistics.push_back(parse_statistic(h.raw("statistic"), h.path("statistic"), job.data));
        if (single) {
            if (h.has("threshold"))
                thresholds.push_back(h.require<double>("threshold"));
            else if (i < from_file.size())
                thresholds.push_back(from_file[i].upper.front());
            else
                throw config_error(h.path("threshold") + ": missing (and no ladders_from entry)");
        } else {
            if (h.has("ladder"))
                ladders.push_back(parse_ladder(h.raw("ladder"), h.path("ladder")));
            else if (i < from_file.size())
                ladders.push_back(from_file[i]);
            else
                throw config_error(h.path("ladder") + ": missing (and no ladders_from entry)");
        }
        h.finish();
    }
    const HypothesisFamily family(k, elements, labels);
    if (!single) {
        job.step_down = StepDownConfig{family, schedule, statistics, ladders, {}};
        job.step_down.validate(job.procedure == ProcedureKind::dual);
        r.optional<json>("partition");
        if (j.contains("partition")) throw config_error(r.path("partition") + ": only used by in_order");
    } else {
        OrderedPartition partition;
        if (job.procedure == ProcedureKind::in_order) {
            const auto blocks = r.require<std::vector<std::vector<std::string>>>("partition");
            std::vector<std::vector<CompositeHypothesis>> b;
            for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
                b.emplace_back();
                for (const auto& name : blocks[bi]) {
                    auto it = std::find(labels.begin(), labels.end(), name);
                    if (it == labels.end())
                        throw config_error(r.path("partition") + "[" + std::to_string(bi) + "]: unknown hypothesis '" +
                                           name + "'");
                    b.back().push_back(elements[static_cast<std::size_t>(it - labels.begin())]);
                }
            }
            partition = OrderedPartition(std::move(b));
        } else {
            if (j.contains("partition")) throw config_error(r.path("partition") + ": closed testing orders blocks by dimension");
            std::size_t top = 0;
            for (const auto& e : elements) top = std::max(top, e.dimension());
            std::vector<std::vector<CompositeHypothesis>> b;
            for (std::size_t d = top; d >= 1; --d) {
                std::vector<CompositeHypothesis> block;
                for (const auto& e : elements)
                    if (e.dimension() == d) block.push_back(e);
                if (!block.empty()) b.push_back(block);
            }
            partition = OrderedPartition(std::move(b));
        }
        job.in_order = InOrderConfig{family, partition, schedule, statistics, thresholds};
        job.in_order.validate();
    }
    r.finish();
    return job;
}

inline DecisionTrace execute(const RunJob& job, const RunOptions& options) {
    switch (job.procedure) {
    case ProcedureKind::step_down: return run_step_down(job.step_down, job.data, options);
    case ProcedureKind::dual: return run_dual(job.step_down, job.data, options);
    case ProcedureKind::in_order: return run_in_order(job.in_order, job.data, options);
    case ProcedureKind::closed: return run_closed(job.in_order, job.data, options);
    }
    throw contract_error("unreachable");
}

// ---------------------------------------------------------------------------
// Study configs.

inline ChromosomeConfig parse_chromosome_config(const json& j, const std::string& config_path) {
    ConfigReader r(j, "config");
    ChromosomeConfig c;
    c.seed = r.require<std::uint64_t>("seed");
    c.data_path = resolve_path(config_path, r.require<std::string>("data"));
    c.alpha = r.get<double>("alpha", 0.05);
    c.calibration_reps = r.get<std::size_t>("calibration_reps", 20000);
    c.permutations = r.get<std::size_t>("permutations", 10000);
    c.h0_weights = r.optional<std::vector<double>>("h0_weights");
    const json& s = r.raw("schedules");
    if (!s.is_array() || s.empty()) throw config_error(r.path("schedules") + ": expected a non-empty array");
    for (std::size_t i = 0; i < s.size(); ++i)
        c.schedules.push_back(parse_schedule(s[i], r.path("schedules") + "[" + std::to_string(i) + "]"));
    r.finish();
    c.validate();
    return c;
}

inline MaxsdScenario parse_maxsd_config(const json& j) {
    ConfigReader r(j, "config");
    MaxsdScenario s;
    s.seed = r.require<std::uint64_t>("seed");
    s.k = r.get<std::size_t>("k", s.k);
    s.lambda = r.get<double>("lambda", s.lambda);
    s.mu = r.get<std::vector<double>>("mu", s.mu);
    s.sigma = r.get<double>("sigma", s.sigma);
    s.max_n = r.get<std::size_t>("max_n", s.max_n);
    if (r.has("schedule")) s.schedule = parse_schedule(r.raw("schedule"), r.path("schedule"));
    s.alpha = r.get<double>("alpha", s.alpha);
    s.reps = r.get<std::size_t>("reps", s.reps);
    s.calibration_reps = r.get<std::size_t>("calibration_reps", s.calibration_reps);
    s.fixed_comparator = r.get<bool>("fixed_comparator", s.fixed_comparator);
    r.finish();
    s.validate();
    return s;
}

inline SuiteOptions parse_verify_config(const json& j) {
    ConfigReader r(j, "config");
    SuiteOptions o;
    o.seed = r.require<std::uint64_t>("seed");
    o.alpha = r.get<double>("alpha", o.alpha);
    o.beta = r.get<double>("beta", o.beta);
    o.separation = r.get<double>("separation", o.separation);
    o.correlation = r.get<double>("correlation", o.correlation);
    o.reps = r.get<std::size_t>("reps", o.reps);
    o.calibration_reps = r.get<std::size_t>("calibration_reps", o.calibration_reps);
    o.oracle_reps = r.get<std::size_t>("oracle_reps", o.oracle_reps);
    o.monotonicity_trials = r.get<std::size_t>("monotonicity_trials", o.monotonicity_trials);
    o.large_closed_monotonicity = r.get<bool>("large_closed_monotonicity", o.large_closed_monotonicity);
    r.finish();
    o.validate();
    return o;
}

// ---------------------------------------------------------------------------
// JSON output.

inline json schedule_to_json(const SampleSchedule& s) { return json(s.sizes()); }

inline json ladder_to_json(const CriticalLadder& l) {
    json j{{"upper", l.upper}};
    if (l.lower) j["lower"] = *l.lower;
    return j;
}

inline json estimate_to_json(const EstimateReport& r) {
    return json{{"name", r.name},   {"estimate", r.estimate}, {"standard_error", r.standard_error},
                {"reps", r.reps},   {"seed", r.seed},         {"bound", r.bound},
                {"slack_se", r.slack_se}, {"limit", r.limit()}, {"pass", r.pass}};
}

inline json calibration_to_json(const CalibrationReport& r) {
    json j{{"k", r.k}, {"schedule", schedule_to_json(r.schedule)}, {"alpha", r.alpha}, {"reps", r.reps},
           {"seed", r.seed}, {"hypotheses", r.hypotheses}};
    if (r.beta) j["beta"] = *r.beta;
    j["ladders"] = json::array();
    for (const auto& l : r.ladders) j["ladders"].push_back(ladder_to_json(l));
    j["validation"] = json::array();
    for (const auto& v : r.validation) j["validation"].push_back(estimate_to_json(v));
    return j;
}

inline json labels_of(const std::vector<std::size_t>& idx, const HypothesisFamily& family) {
    json out = json::array();
    for (auto i : idx) out.push_back(family.label(i));
    return out;
}

inline json trace_to_json(const DecisionTrace& t, const HypothesisFamily& family, bool verbose = false) {
    json records = json::array();
    for (const auto& rec : t.records) {
        json r{{"stage", rec.stage}, {"n", rec.sample_size}, {"rejected", labels_of(rec.rejected, family)},
               {"accepted", labels_of(rec.accepted, family)}, {"terminal", rec.terminal}};
        if (verbose) {
            json stats = json::object();
            for (std::size_t i = 0; i < rec.statistics.size(); ++i)
                if (!std::isnan(rec.statistics[i])) stats[family.label(i)] = rec.statistics[i];
            r["statistics"] = stats;
        }
        records.push_back(r);
    }
    json decision_n = json::object();
    for (std::size_t i = 0; i < t.decision_size.size(); ++i) decision_n[family.label(i)] = t.decision_size[i];
    return json{{"records", records},
                {"rejected", labels_of(t.terminal_state.rejected.indices(), family)},
                {"accepted", labels_of(t.terminal_state.accepted.indices(), family)},
                {"final_n", t.final_sample_size()},
                {"decision_n", decision_n}};
}

inline json chromosome_to_json(const ChromosomeStudy& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back(json{{"schedule", schedule_to_json(r.schedule)},
                            {"p_threshold", r.p_threshold},
                            {"average_sample_size", r.average_size},
                            {"average_sample_size_se", r.size_se},
                            {"observed_sample_size", r.observed_size},
                            {"observed_rejected", r.observed_rejected},
                            {"sample_size_histogram", r.size_histogram}});
    return json{{"triples", s.triples},       {"alpha", s.alpha},
                {"calibration_reps", s.calibration_reps}, {"permutations", s.permutations},
                {"seed", s.seed},             {"rows", rows}};
}

inline json maxsd_arm_to_json(const MaxsdArm& a) {
    return json{{"schedule", schedule_to_json(a.schedule)}, {"critical_value", a.critical},
                {"average_sample_size", a.average_size},    {"p_maxsd", a.p_maxsd},
                {"weighted_average_maxsd", a.weighted_maxsd}};
}

inline json maxsd_to_json(const MaxsdStudy& s) {
    const auto& sc = s.scenario;
    json j{{"k", sc.k},         {"lambda", sc.lambda}, {"mu", sc.mu},       {"sigma", sc.sigma},
           {"max_n", sc.max_n}, {"alpha", sc.alpha},   {"reps", sc.reps},   {"calibration_reps", sc.calibration_reps},
           {"seed", sc.seed},   {"sequential", maxsd_arm_to_json(s.sequential)}};
    if (s.fixed) j["fixed"] = maxsd_arm_to_json(*s.fixed);
    return j;
}

inline json suite_to_json(const SuiteResult& r, const SuiteOptions& o) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        json j{{"group", c.group}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}};
        if (c.estimate) j["estimate"] = estimate_to_json(*c.estimate);
        checks.push_back(j);
    }
    return json{{"seed", o.seed},   {"alpha", o.alpha}, {"beta", o.beta}, {"reps", o.reps},
                {"calibration_reps", o.calibration_reps}, {"all_pass", r.all_pass()},
                {"traces_audited", r.traces_audited}, {"checks", checks}};
}

// ---------------------------------------------------------------------------
// Text tables.

inline std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::string render_calibration(const CalibrationReport& r, ReportFormat f) {
    if (f == ReportFormat::json) return calibration_to_json(r).dump(2) + "\n";
    std::ostringstream o;
    const auto& l = r.ladders.front();
    if (f == ReportFormat::csv) {
        o << "s,upper" << (l.lower ? ",lower" : "") << "\n";
        for (std::size_t s = 0; s < l.k(); ++s)
            o << s + 1 << "," << fmt(l.upper[s], 6) << (l.lower ? "," + fmt((*l.lower)[s], 6) : "") << "\n";
        return o.str();
    }
    o << "Schedule " << compact_schedule(r.schedule) << ", alpha " << r.alpha;
    if (r.beta) o << ", beta " << *r.beta;
    o << ", " << r.reps << " replicates, seed " << r.seed << "\n\n";
    o << "| s | B_s |" << (l.lower ? " A_s |" : "") << "\n|---|---|" << (l.lower ? "---|" : "") << "\n";
    for (std::size_t s = 0; s < l.k(); ++s)
        o << "| " << s + 1 << " | " << fmt(l.upper[s], 4) << " |" << (l.lower ? " " + fmt((*l.lower)[s], 4) + " |" : "")
          << "\n";
    return o.str();
}

inline std::string render_trace(const DecisionTrace& t, const HypothesisFamily& family, ProcedureKind kind,
                                 std::uint64_t seed, ReportFormat f, bool verbose) {
    auto join = [&](const std::vector<std::size_t>& idx) {
        std::string s;
        for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? " " : "") + family.label(idx[i]);
        return s;
    };
    if (f == ReportFormat::json) {
        json j = trace_to_json(t, family, verbose);
        j["procedure"] = to_string(kind);
        j["seed"] = seed;
        j["hypotheses"] = family.labels();
        return j.dump(2) + "\n";
    }
    std::ostringstream o;
    if (f == ReportFormat::csv) {
        o << "stage,n,rejected,accepted,terminal\n";
        for (const auto& r : t.records)
            o << r.stage << "," << r.sample_size << "," << csv_quote(join(r.rejected)) << ","
              << csv_quote(join(r.accepted)) << "," << (r.terminal ? 1 : 0) << "\n";
        return o.str();
    }
    o << "| stage | n | rejected | accepted |\n|---|---|---|---|\n";
    for (const auto& r : t.records)
        o << "| " << r.stage << " | " << r.sample_size << " | " << join(r.rejected) << " | " << join(r.accepted)
          << (r.terminal ? " (terminal)" : "") << " |\n";
    return o.str();
}

inline std::string render_chromosome(const ChromosomeStudy& s, ReportFormat f) {
    if (f == ReportFormat::json) return chromosome_to_json(s).dump(2) + "\n";
    std::ostringstream o;
    if (f == ReportFormat::csv) {
        o << "schedule,B,average_sample_size,se,observed_sample_size\n";
        for (const auto& r : s.rows)
            o << csv_quote(compact_schedule(r.schedule)) << "," << fmt(r.p_threshold, 6) << ","
              << fmt(r.average_size, 4) << "," << fmt(r.size_se, 4) << "," << r.observed_size << "\n";
        return o.str();
    }
    o << "| N | B | Average sample size |\n|---|---|---|\n";
    for (const auto& r : s.rows)
        o << "| " << compact_schedule(r.schedule) << " | " << fmt(r.p_threshold, 4) << " | " << fmt(r.average_size, 1)
          << " |\n";
    return o.str();
}

inline std::string render_maxsd(const MaxsdStudy& s, ReportFormat f) {
    if (f == ReportFormat::json) return maxsd_to_json(s).dump(2) + "\n";
    const auto& sc = s.scenario;
    std::ostringstream o;
    if (f == ReportFormat::csv) {
        o << "level,mu,seq_avg_ss,seq_p_maxsd" << (s.fixed ? ",fixed_avg_ss,fixed_p_maxsd" : "") << "\n";
        for (std::size_t j = 0; j <= sc.k; ++j) {
            o << j << "," << fmt(sc.mu[j], 3) << "," << fmt(s.sequential.average_size[j], 4) << ","
              << fmt(s.sequential.p_maxsd[j], 6);
            if (s.fixed) o << "," << fmt(s.fixed->average_size[j], 4) << "," << fmt(s.fixed->p_maxsd[j], 6);
            o << "\n";
        }
        o << "weighted," << "," << "," << fmt(s.sequential.weighted_maxsd, 4);
        if (s.fixed) o << ",," << fmt(s.fixed->weighted_maxsd, 4);
        o << "\n";
        return o.str();
    }
    o << "| Level j | mu_j | Seq. Avg SS | Seq. P(MAXSD=j) |" << (s.fixed ? " Fixed Avg SS | Fixed P(MAXSD=j) |" : "")
      << "\n|---|---|---|---|" << (s.fixed ? "---|---|" : "") << "\n";
    for (std::size_t j = 0; j <= sc.k; ++j) {
        o << "| " << j << " | " << fmt(sc.mu[j], 1) << " | " << fmt(s.sequential.average_size[j], 1) << " | "
          << fmt(100 * s.sequential.p_maxsd[j], 2) << "% |";
        if (s.fixed)
            o << " " << fmt(s.fixed->average_size[j], 1) << " | " << fmt(100 * s.fixed->p_maxsd[j], 2) << "% |";
        o << "\n";
    }
    o << "| Weighted average MAXSD | | " << fmt(s.sequential.weighted_maxsd, 2) << " | |";
    if (s.fixed) o << " " << fmt(s.fixed->weighted_maxsd, 2) << " | |";
    o << "\n";
    return o.str();
}

inline std::string render_suite(const SuiteResult& r, const SuiteOptions& opt, ReportFormat f) {
    if (f == ReportFormat::json) return suite_to_json(r, opt).dump(2) + "\n";
    std::ostringstream o;
    if (f == ReportFormat::csv) {
        o << "group,name,pass,estimate,limit,detail\n";
        for (const auto& c : r.checks)
            o << c.group << "," << csv_quote(c.name) << "," << (c.pass ? 1 : 0) << ","
              << (c.estimate ? fmt(c.estimate->estimate, 6) : "") << "," << (c.estimate ? fmt(c.estimate->limit(), 6) : "")
              << "," << csv_quote(c.detail) << "\n";
        return o.str();
    }
    o << "| group | check | result | estimate | limit | detail |\n|---|---|---|---|---|---|\n";
    for (const auto& c : r.checks)
        o << "| " << c.group << " | " << c.name << " | " << (c.pass ? "pass" : "FAIL") << " | "
          << (c.estimate ? fmt(c.estimate->estimate, 5) : "") << " | " << (c.estimate ? fmt(c.estimate->limit(), 5) : "")
          << " | " << c.detail << " |\n";
    return o.str();
}

} // namespace seqfwer
