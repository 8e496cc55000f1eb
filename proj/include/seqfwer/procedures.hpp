#pragma once

// The rejection-function recursion and the procedures built on it.
//
// A run walks the looks of N in order. At each look the rejection rule and
// then the acceptance rule are applied repeatedly until neither changes the
// state (an enlarged R can unlock further rejections at the same n), after
// which sampling moves to the next look. At max N every still-active
// hypothesis is accepted.

#include "seqfwer/core.hpp"
#include "seqfwer/standardize.hpp"
#include "seqfwer/statistics.hpp"

#include <concepts>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seqfwer {

// rho(R, A, n): hypotheses to reject at look n. Data is bound into the closure.
using RejectionRule = std::function<HypothesisSet(const HypothesisSet&, const HypothesisSet&, std::size_t)>;
// Same signature; hypotheses to accept.
using AcceptanceRule = RejectionRule;

struct RunOptions {
    bool verbose = false;
};

// Lazily evaluated T_n for each family element, cached for the current look.
class StatisticBank {
public:
    StatisticBank(const std::vector<SequentialStatistic>& statistics, const StreamSet& data)
        : statistics_(&statistics), data_(&data), values_(statistics.size()), have_(statistics.size(), 0) {}

    double value(std::size_t element, std::size_t n) {
        if (n != n_) {
            n_ = n;
            std::fill(have_.begin(), have_.end(), char{0});
        }
        if (!have_[element]) {
            values_[element] = (*statistics_)[element].evaluate(*data_, n);
            have_[element] = 1;
        }
        return values_[element];
    }

    // Values computed so far at look n (NaN where not evaluated).
    std::vector<double> snapshot(std::size_t n) const {
        std::vector<double> out(values_.size(), std::numeric_limits<double>::quiet_NaN());
        if (n != n_) return out;
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (have_[i]) out[i] = values_[i];
        return out;
    }

private:
    const std::vector<SequentialStatistic>* statistics_;
    const StreamSet* data_;
    std::size_t n_ = 0;
    std::vector<double> values_;
    std::vector<char> have_;
};

namespace detail {

inline void check_disjoint(const HypothesisSet& out, const HypothesisSet& r, const HypothesisSet& a, const char* who) {
    if (out.universe() != r.universe())
        throw contract_error(std::string(who) + " returned a set over the wrong universe");
    if (out.intersects(r) || out.intersects(a))
        throw contract_error(std::string(who) + " emitted an already-decided hypothesis: " + out.to_string());
}

} // namespace detail

// The generic engine. `probe`, when set, supplies per-look statistic values for verbose traces.
inline DecisionTrace run_rejection_loop(std::size_t universe, const SampleSchedule& schedule, const RejectionRule& rho,
                                        const AcceptanceRule& acceptance = {}, const RunOptions& options = {},
                                        const std::function<std::vector<double>(std::size_t)>& probe = {}) {
    if (universe == 0) throw validation_error("empty hypothesis family");
    if (schedule.size() == 0) throw validation_error("empty schedule");
    DecisionTrace trace;
    DecisionState& state = trace.terminal_state;
    state = DecisionState(universe);
    trace.decision_size.assign(universe, 0);

    auto note = [&](DecisionRecord& rec) {
        if (options.verbose && probe) rec.statistics = probe(rec.sample_size);
    };

    for (std::size_t n : schedule.sizes()) {
        if (state.all_decided()) break;
        state.sample_size = n;
        for (;;) {
            HypothesisSet rej = rho(state.rejected, state.accepted, n);
            detail::check_disjoint(rej, state.rejected, state.accepted, "rejection rule");
            HypothesisSet acc(universe);
            if (!rej.empty()) state.rejected |= rej;
            if (acceptance) {
                acc = acceptance(state.rejected, state.accepted, n);
                detail::check_disjoint(acc, state.rejected, state.accepted, "acceptance rule");
                state.accepted |= acc;
            }
            if (rej.empty() && acc.empty()) break;
            ++state.stage;
            DecisionRecord rec;
            rec.stage = state.stage;
            rec.sample_size = n;
            rec.rejected = rej.indices();
            rec.accepted = acc.indices();
            for (auto i : rec.rejected) trace.decision_size[i] = n;
            for (auto i : rec.accepted) trace.decision_size[i] = n;
            state.rejected_count = state.rejected.count();
            note(rec);
            trace.records.push_back(std::move(rec));
            if (state.all_decided()) break;
        }
        if (!state.all_decided() && n == schedule.max()) {
            DecisionRecord rec;
            rec.stage = state.stage + 1;
            rec.sample_size = n;
            rec.terminal = true;
            rec.accepted = state.active();
            for (auto i : rec.accepted) {
                state.accepted.insert(i);
                trace.decision_size[i] = n;
            }
            note(rec);
            trace.records.push_back(std::move(rec));
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Rule kernels on precomputed values.

// {active j : standardized[j] >= k - |R|}, k = universe size.
inline HypothesisSet step_down_rho(const HypothesisSet& rejected, const HypothesisSet& accepted,
                                   std::span<const double> standardized) {
    const std::size_t k = rejected.universe();
    const double level = static_cast<double>(k) - static_cast<double>(rejected.count());
    HypothesisSet out(k);
    for (std::size_t j = 0; j < k; ++j)
        if (!rejected.contains(j) && !accepted.contains(j) && standardized[j] >= level) out.insert(j);
    return out;
}

// {active j : standardized[j] <= -(k - |A|)}.
inline HypothesisSet dual_accept_rho(const HypothesisSet& rejected, const HypothesisSet& accepted,
                                     std::span<const double> standardized) {
    const std::size_t k = rejected.universe();
    const double level = -(static_cast<double>(k) - static_cast<double>(accepted.count()));
    HypothesisSet out(k);
    for (std::size_t j = 0; j < k; ++j)
        if (!rejected.contains(j) && !accepted.contains(j) && standardized[j] <= level) out.insert(j);
    return out;
}

// Block b (0-based) is open when every element of every earlier block is in R.
inline std::vector<char> open_blocks(const HypothesisSet& rejected, const std::vector<std::size_t>& element_block,
                                     std::size_t block_count) {
    std::vector<char> fully_rejected(block_count, 1);
    for (std::size_t e = 0; e < element_block.size(); ++e)
        if (!rejected.contains(e)) fully_rejected[element_block[e]] = 0;
    std::vector<char> open(block_count, 0);
    bool gate = true;
    for (std::size_t b = 0; b < block_count; ++b) {
        open[b] = gate;
        gate = gate && fully_rejected[b];
    }
    return open;
}

// {undecided j : T_n(j) >= B(j) and every block before j's is contained in R}.
// Statistics are requested only for hypotheses whose gate is open.
template <class ValueFn>
    requires std::invocable<ValueFn&, std::size_t>
HypothesisSet in_order_rho(const HypothesisSet& rejected, const HypothesisSet& accepted, ValueFn&& value,
                           std::span<const double> thresholds, const std::vector<std::size_t>& element_block,
                           std::size_t block_count) {
    const auto open = open_blocks(rejected, element_block, block_count);
    HypothesisSet out(rejected.universe());
    for (std::size_t j = 0; j < rejected.universe(); ++j) {
        if (rejected.contains(j) || accepted.contains(j) || !open[element_block[j]]) continue;
        if (value(j) >= thresholds[j]) out.insert(j);
    }
    return out;
}

inline HypothesisSet in_order_rho(const HypothesisSet& rejected, const HypothesisSet& accepted,
                                  std::span<const double> values, std::span<const double> thresholds,
                                  const std::vector<std::size_t>& element_block, std::size_t block_count) {
    return in_order_rho(
        rejected, accepted, [&](std::size_t j) { return values[j]; }, thresholds, element_block, block_count);
}

// ---------------------------------------------------------------------------
// Step-down (and its dual with explicit acceptances).

struct StepDownConfig {
    HypothesisFamily family;
    SampleSchedule schedule;
    std::vector<SequentialStatistic> statistics;
    std::vector<CriticalLadder> ladders;
    // Optional mid-run acceptance hook; it may only remove active hypotheses.
    AcceptanceRule acceptance;

    void validate(bool need_lower = false) const {
        const std::size_t k = family.size();
        if (statistics.size() != k)
            throw validation_error("need one statistic per family element (" + std::to_string(k) + "), got " +
                                   std::to_string(statistics.size()));
        if (ladders.size() != k)
            throw validation_error("need one ladder per family element (" + std::to_string(k) + "), got " +
                                   std::to_string(ladders.size()));
        for (std::size_t j = 0; j < k; ++j) {
            if (ladders[j].k() != k)
                throw validation_error("ladder " + std::to_string(j + 1) + " has " + std::to_string(ladders[j].k()) +
                                       " rungs, expected " + std::to_string(k));
            ladders[j].validate();
            if (need_lower && !ladders[j].lower)
                throw config_error("dual procedure needs a lower ladder for hypothesis " + std::to_string(j + 1));
        }
    }
};

namespace detail {

struct StepDownState {
    StandardizingSpec spec;
    StatisticBank bank;
    bool joint;

    StepDownState(const StepDownConfig& config, const StreamSet& data, bool use_joint)
        : spec(config.ladders), bank(config.statistics, data), joint(use_joint) {}

    double standardized(std::size_t j, std::size_t n) {
        const double t = bank.value(j, n);
        const HypothesisId id{j + 1};
        return joint ? spec.standardize_joint(id, t) : spec.standardize(id, t);
    }

    std::vector<double> active_standardized(const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        std::vector<double> out(r.universe(), -std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < r.universe(); ++j)
            if (!r.contains(j) && !a.contains(j)) out[j] = standardized(j, n);
        return out;
    }
};

} // namespace detail

// The config and data must outlive the returned rule.
inline RejectionRule make_step_down_rule(const StepDownConfig& config, const StreamSet& data, bool joint = false) {
    auto st = std::make_shared<detail::StepDownState>(config, data, joint);
    return [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        return step_down_rho(r, a, st->active_standardized(r, a, n));
    };
}

inline AcceptanceRule make_dual_acceptance_rule(const StepDownConfig& config, const StreamSet& data) {
    auto st = std::make_shared<detail::StepDownState>(config, data, true);
    return [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        std::vector<double> v(r.universe(), std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < r.universe(); ++j)
            if (!r.contains(j) && !a.contains(j)) v[j] = st->standardized(j, n);
        return dual_accept_rho(r, a, v);
    };
}

inline DecisionTrace run_step_down(const StepDownConfig& config, const StreamSet& data, const RunOptions& options = {}) {
    config.validate();
    auto st = std::make_shared<detail::StepDownState>(config, data, false);
    RejectionRule rho = [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        return step_down_rho(r, a, st->active_standardized(r, a, n));
    };
    return run_rejection_loop(config.family.size(), config.schedule, rho, config.acceptance, options,
                              [st](std::size_t n) { return st->bank.snapshot(n); });
}

// Rejections per the step-down rule and acceptances per its mirror image,
// alternated to a joint fixpoint at every look; rejection is applied first.
inline DecisionTrace run_dual(const StepDownConfig& config, const StreamSet& data, const RunOptions& options = {}) {
    config.validate(true);
    auto st = std::make_shared<detail::StepDownState>(config, data, true);
    RejectionRule rho = [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        return step_down_rho(r, a, st->active_standardized(r, a, n));
    };
    AcceptanceRule acc = [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        std::vector<double> v(r.universe(), std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < r.universe(); ++j)
            if (!r.contains(j) && !a.contains(j)) v[j] = st->standardized(j, n);
        return dual_accept_rho(r, a, v);
    };
    return run_rejection_loop(config.family.size(), config.schedule, rho, acc, options,
                              [st](std::size_t n) { return st->bank.snapshot(n); });
}

// ---------------------------------------------------------------------------
// Testing in order, and closed testing as its special case.

struct InOrderConfig {
    HypothesisFamily family;
    OrderedPartition partition;
    SampleSchedule schedule;
    std::vector<SequentialStatistic> statistics;
    std::vector<double> thresholds; // single critical value B per element

    std::vector<std::size_t> validate() const {
        const std::size_t k = family.size();
        if (statistics.size() != k)
            throw validation_error("need one statistic per family element (" + std::to_string(k) + "), got " +
                                   std::to_string(statistics.size()));
        if (thresholds.size() != k)
            throw validation_error("need one critical value per family element (" + std::to_string(k) + "), got " +
                                   std::to_string(thresholds.size()));
        return element_blocks(partition, family);
    }
};

namespace detail {

struct InOrderState {
    StatisticBank bank;
    std::vector<std::size_t> blocks;
    std::size_t block_count;
    std::vector<double> thresholds;

    InOrderState(const InOrderConfig& config, const StreamSet& data)
        : bank(config.statistics, data), blocks(config.validate()), block_count(config.partition.size()),
          thresholds(config.thresholds) {}

    HypothesisSet rho(const HypothesisSet& r, const HypothesisSet& a, std::size_t n) {
        return in_order_rho(
            r, a, [&](std::size_t j) { return bank.value(j, n); }, thresholds, blocks, block_count);
    }
};

} // namespace detail

inline RejectionRule make_in_order_rule(const InOrderConfig& config, const StreamSet& data) {
    auto st = std::make_shared<detail::InOrderState>(config, data);
    return [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) { return st->rho(r, a, n); };
}

// First block (1-based) that is not fully rejected; size()+1 when all are.
inline std::size_t current_block(const HypothesisSet& rejected, const std::vector<std::size_t>& element_block,
                                 std::size_t block_count) {
    std::vector<char> full(block_count, 1);
    for (std::size_t e = 0; e < element_block.size(); ++e)
        if (!rejected.contains(e)) full[element_block[e]] = 0;
    for (std::size_t b = 0; b < block_count; ++b)
        if (!full[b]) return b + 1;
    return block_count + 1;
}

inline DecisionTrace run_in_order(const InOrderConfig& config, const StreamSet& data, const RunOptions& options = {}) {
    auto st = std::make_shared<detail::InOrderState>(config, data);
    RejectionRule rho = [st](const HypothesisSet& r, const HypothesisSet& a, std::size_t n) { return st->rho(r, a, n); };
    auto trace = run_rejection_loop(config.family.size(), config.schedule, rho, {}, options,
                                    [st](std::size_t n) { return st->bank.snapshot(n); });
    trace.terminal_state.block_cursor = current_block(trace.terminal_state.rejected, st->blocks, st->block_count);
    return trace;
}

// Testing in order on a closed family; the partition should be the decreasing-dimension
// one from build_closed_partition or build_chain_family.
inline DecisionTrace run_closed(const InOrderConfig& config, const StreamSet& data, const RunOptions& options = {}) {
    if (!config.family.is_closed()) throw validation_error("closed testing needs a family closed under intersection");
    for (std::size_t b = 1; b < config.partition.size(); ++b)
        for (const auto& h : config.partition.block(b))
            for (const auto& g : config.partition.block(b - 1))
                if (h.dimension() > g.dimension())
                    throw validation_error("closed-testing partition must list blocks in decreasing dimension");
    return run_in_order(config, data, options);
}

} // namespace seqfwer
