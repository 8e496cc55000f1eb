#pragma once

// Domain types shared by every procedure: hypothesis families and their
// partitions, sample-size schedules, critical-value ladders, the evolving
// decision state and the trace a run leaves behind.

#include "seqfwer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace seqfwer {

// 1-based index of an elementary hypothesis H^(j).
struct HypothesisId {
    std::size_t index = 1;

    friend bool operator==(HypothesisId, HypothesisId) = default;
};

// Intersection of elementary hypotheses, stored as a sorted set of 1-based indices.
class CompositeHypothesis {
public:
    CompositeHypothesis() = default;

    explicit CompositeHypothesis(std::vector<std::size_t> members) : members_(std::move(members)) {
        std::sort(members_.begin(), members_.end());
        members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
        if (members_.empty()) throw validation_error("composite hypothesis must have at least one member");
        if (members_.front() == 0) throw validation_error("hypothesis indices are 1-based");
    }

    CompositeHypothesis(std::initializer_list<std::size_t> members)
        : CompositeHypothesis(std::vector<std::size_t>(members)) {}

    static CompositeHypothesis elementary(std::size_t j) { return CompositeHypothesis({j}); }

    const std::vector<std::size_t>& members() const noexcept { return members_; }
    std::size_t dimension() const noexcept { return members_.size(); }
    std::size_t min_member() const noexcept { return members_.front(); }
    std::size_t max_member() const noexcept { return members_.back(); }

    bool contains(std::size_t j) const { return std::binary_search(members_.begin(), members_.end(), j); }

    // Every member of `other` is a member of this one.
    bool includes(const CompositeHypothesis& other) const {
        return std::includes(members_.begin(), members_.end(), other.members_.begin(), other.members_.end());
    }

    CompositeHypothesis united(const CompositeHypothesis& other) const {
        std::vector<std::size_t> out;
        std::set_union(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                       std::back_inserter(out));
        return CompositeHypothesis(std::move(out));
    }

    std::string to_string() const {
        std::string s = "{";
        for (std::size_t i = 0; i < members_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(members_[i]);
        }
        return s + "}";
    }

    friend bool operator==(const CompositeHypothesis&, const CompositeHypothesis&) = default;
    friend auto operator<=>(const CompositeHypothesis&, const CompositeHypothesis&) = default;

private:
    std::vector<std::size_t> members_;
};

class HypothesisFamily {
public:
    HypothesisFamily() = default;

    HypothesisFamily(std::size_t k, std::vector<CompositeHypothesis> elements, std::vector<std::string> labels = {})
        : k_(k), elements_(std::move(elements)), labels_(std::move(labels)) {
        if (k_ < 1) throw validation_error("family needs k >= 1 elementary hypotheses");
        if (elements_.empty()) throw validation_error("family has no elements");
        for (std::size_t i = 0; i < elements_.size(); ++i) {
            if (elements_[i].max_member() > k_)
                throw validation_error("element " + elements_[i].to_string() + " references an index above k=" +
                                       std::to_string(k_));
            for (std::size_t j = 0; j < i; ++j)
                if (elements_[i] == elements_[j])
                    throw validation_error("duplicate family element " + elements_[i].to_string());
        }
        if (!labels_.empty() && labels_.size() != elements_.size())
            throw validation_error("label count does not match element count");
    }

    // {H^(1)}, ..., {H^(k)}.
    static HypothesisFamily elementary(std::size_t k, std::vector<std::string> labels = {}) {
        if (k < 1) throw validation_error("family needs k >= 1 elementary hypotheses");
        std::vector<CompositeHypothesis> elems;
        elems.reserve(k);
        for (std::size_t j = 1; j <= k; ++j) elems.push_back(CompositeHypothesis::elementary(j));
        return HypothesisFamily(k, std::move(elems), std::move(labels));
    }

    std::size_t k() const noexcept { return k_; }
    std::size_t size() const noexcept { return elements_.size(); }
    const std::vector<CompositeHypothesis>& elements() const noexcept { return elements_; }
    const CompositeHypothesis& element(std::size_t i) const { return elements_.at(i); }

    std::string label(std::size_t i) const {
        if (!labels_.empty()) return labels_.at(i);
        return elements_.at(i).to_string();
    }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::optional<std::size_t> index_of(const CompositeHypothesis& h) const {
        for (std::size_t i = 0; i < elements_.size(); ++i)
            if (elements_[i] == h) return i;
        return std::nullopt;
    }

    // Closed under intersection: the union of member sets of any two elements is an element.
    bool is_closed() const {
        for (std::size_t a = 0; a < elements_.size(); ++a)
            for (std::size_t b = a + 1; b < elements_.size(); ++b)
                if (!index_of(elements_[a].united(elements_[b]))) return false;
        return true;
    }

private:
    std::size_t k_ = 0;
    std::vector<CompositeHypothesis> elements_;
    std::vector<std::string> labels_;
};

// The set N of permissible per-stream sample sizes (looks).
class SampleSchedule {
public:
    SampleSchedule() = default;

    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t max() const noexcept { return sizes_.back(); }
    std::size_t min() const noexcept { return sizes_.front(); }
    std::size_t size() const noexcept { return sizes_.size(); }
    bool contains(std::size_t n) const { return std::binary_search(sizes_.begin(), sizes_.end(), n); }

    std::string to_string() const {
        std::string s = "{";
        for (std::size_t i = 0; i < sizes_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(sizes_[i]);
        }
        return s + "}";
    }

    friend bool operator==(const SampleSchedule&, const SampleSchedule&) = default;

private:
    explicit SampleSchedule(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {}
    friend SampleSchedule make_schedule(std::span<const long long> sizes);

    std::vector<std::size_t> sizes_;
};

inline SampleSchedule make_schedule(std::span<const long long> sizes) {
    if (sizes.empty()) throw validation_error("schedule is empty");
    std::vector<std::size_t> out;
    out.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] <= 0)
            throw validation_error("schedule entry " + std::to_string(i) + " is not positive (" +
                                   std::to_string(sizes[i]) + ")");
        if (i > 0 && sizes[i] <= sizes[i - 1])
            throw validation_error("schedule entry " + std::to_string(i) + " (" + std::to_string(sizes[i]) +
                                   ") is not strictly greater than entry " + std::to_string(i - 1));
        out.push_back(static_cast<std::size_t>(sizes[i]));
    }
    return SampleSchedule(std::move(out));
}

inline SampleSchedule make_schedule(std::initializer_list<long long> sizes) {
    return make_schedule(std::span<const long long>(sizes.begin(), sizes.size()));
}

inline SampleSchedule make_schedule(const std::vector<std::size_t>& sizes) {
    std::vector<long long> v(sizes.begin(), sizes.end());
    return make_schedule(std::span<const long long>(v));
}

// {first, first+step, ...} up to and including last.
inline SampleSchedule make_range_schedule(std::size_t first, std::size_t last, std::size_t step = 1) {
    std::vector<long long> v;
    for (std::size_t n = first; n <= last; n += step) v.push_back(static_cast<long long>(n));
    if (v.empty() || static_cast<std::size_t>(v.back()) != last) v.push_back(static_cast<long long>(last));
    return make_schedule(std::span<const long long>(v));
}

// Per-hypothesis rungs B_1 >= ... >= B_k, and optionally A_1 <= ... <= A_k.
struct CriticalLadder {
    std::vector<double> upper;
    std::optional<std::vector<double>> lower;

    std::size_t k() const noexcept { return upper.size(); }

    void validate() const {
        if (upper.empty()) throw validation_error("ladder has no rungs");
        for (std::size_t s = 0; s < upper.size(); ++s) {
            if (std::isnan(upper[s])) throw validation_error("ladder rung B_" + std::to_string(s + 1) + " is NaN");
            if (s > 0 && upper[s] > upper[s - 1])
                throw validation_error("upper ladder must be non-increasing: B_" + std::to_string(s + 1) + " > B_" +
                                       std::to_string(s));
        }
        if (!lower) return;
        if (lower->size() != upper.size()) throw validation_error("lower and upper ladders differ in length");
        for (std::size_t s = 0; s < lower->size(); ++s) {
            if (std::isnan((*lower)[s])) throw validation_error("ladder rung A_" + std::to_string(s + 1) + " is NaN");
            if (s > 0 && (*lower)[s] < (*lower)[s - 1])
                throw validation_error("lower ladder must be non-decreasing: A_" + std::to_string(s + 1) + " < A_" +
                                       std::to_string(s));
        }
        if (!(lower->back() < upper.back())) throw validation_error("lower ladder must satisfy A_k < B_k");
    }
};

// Ordered disjoint blocks H_1, ..., H_s of a family.
class OrderedPartition {
public:
    OrderedPartition() = default;
    explicit OrderedPartition(std::vector<std::vector<CompositeHypothesis>> blocks) : blocks_(std::move(blocks)) {}

    const std::vector<std::vector<CompositeHypothesis>>& blocks() const noexcept { return blocks_; }
    std::size_t size() const noexcept { return blocks_.size(); }
    const std::vector<CompositeHypothesis>& block(std::size_t i) const { return blocks_.at(i); }

private:
    std::vector<std::vector<CompositeHypothesis>> blocks_;
};

// 1-based index i_j of the block holding h.
inline std::size_t block_index(const OrderedPartition& partition, const CompositeHypothesis& h) {
    for (std::size_t i = 0; i < partition.size(); ++i)
        for (const auto& member : partition.block(i))
            if (member == h) return i + 1;
    throw lookup_error("hypothesis " + h.to_string() + " is not in any block");
}

struct PartitionViolation {
    enum class Kind { empty_block, overlap, missing, unknown_element };
    Kind kind;
    std::size_t block_a = 0; // 1-based
    std::size_t block_b = 0; // 1-based, overlap only
    CompositeHypothesis element;

    std::string describe() const {
        switch (kind) {
        case Kind::empty_block: return "block " + std::to_string(block_a) + " is empty";
        case Kind::overlap:
            return element.to_string() + " appears in blocks " + std::to_string(block_a) + " and " +
                   std::to_string(block_b);
        case Kind::missing: return element.to_string() + " is not covered by any block";
        case Kind::unknown_element:
            return element.to_string() + " in block " + std::to_string(block_a) + " is not a family element";
        }
        return "unknown violation";
    }
};

struct PartitionReport {
    std::vector<PartitionViolation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

inline PartitionReport validate_partition(const OrderedPartition& partition, const HypothesisFamily& family) {
    PartitionReport report;
    std::vector<std::size_t> seen_in(family.size(), 0);
    for (std::size_t i = 0; i < partition.size(); ++i) {
        const auto& block = partition.block(i);
        if (block.empty()) report.violations.push_back({PartitionViolation::Kind::empty_block, i + 1, 0, {}});
        for (const auto& h : block) {
            auto idx = family.index_of(h);
            if (!idx) {
                report.violations.push_back({PartitionViolation::Kind::unknown_element, i + 1, 0, h});
                continue;
            }
            if (seen_in[*idx] != 0)
                report.violations.push_back({PartitionViolation::Kind::overlap, seen_in[*idx], i + 1, h});
            else
                seen_in[*idx] = i + 1;
        }
    }
    for (std::size_t e = 0; e < family.size(); ++e)
        if (seen_in[e] == 0) report.violations.push_back({PartitionViolation::Kind::missing, 0, 0, family.element(e)});
    return report;
}

// Block number (0-based) of each family element; throws if the partition is invalid.
inline std::vector<std::size_t> element_blocks(const OrderedPartition& partition, const HypothesisFamily& family) {
    auto report = validate_partition(partition, family);
    if (!report.ok()) throw validation_error("invalid partition: " + report.violations.front().describe());
    std::vector<std::size_t> out(family.size());
    for (std::size_t i = 0; i < partition.size(); ++i)
        for (const auto& h : partition.block(i)) out[*family.index_of(h)] = i;
    return out;
}

struct FamilyWithPartition {
    HypothesisFamily family;
    OrderedPartition partition;
};

// All nonempty subsets of {1..k}; block i holds the composites of dimension k-i+1.
inline FamilyWithPartition build_closed_partition(std::size_t k) {
    if (k < 1) throw validation_error("closed family needs k >= 1");
    if (k > 20) throw validation_error("closed family with k > 20 has too many elements");
    std::vector<std::vector<CompositeHypothesis>> blocks(k);
    std::vector<CompositeHypothesis> elements;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < k; ++j)
            if (mask & (std::uint64_t{1} << j)) members.push_back(j + 1);
        blocks[k - members.size()].emplace_back(members);
    }
    for (auto& b : blocks) {
        std::sort(b.begin(), b.end());
        elements.insert(elements.end(), b.begin(), b.end());
    }
    return {HypothesisFamily(k, std::move(elements)), OrderedPartition(std::move(blocks))};
}

// Chain J_j = {j, ..., k}; block i is the singleton {J_i}, so dimension decreases along the blocks.
inline FamilyWithPartition build_chain_family(std::size_t k) {
    if (k < 1) throw validation_error("chain family needs k >= 1");
    std::vector<CompositeHypothesis> elements;
    std::vector<std::vector<CompositeHypothesis>> blocks;
    for (std::size_t j = 1; j <= k; ++j) {
        std::vector<std::size_t> members;
        for (std::size_t m = j; m <= k; ++m) members.push_back(m);
        elements.emplace_back(members);
        blocks.push_back({elements.back()});
    }
    return {HypothesisFamily(k, std::move(elements)), OrderedPartition(std::move(blocks))};
}

// Subset of family elements, indexed 0..size-1.
class HypothesisSet {
public:
    HypothesisSet() = default;
    explicit HypothesisSet(std::size_t universe) : bits_(universe, 0) {}

    static HypothesisSet from_indices(std::size_t universe, std::initializer_list<std::size_t> idx) {
        HypothesisSet s(universe);
        for (auto i : idx) s.insert(i);
        return s;
    }
    static HypothesisSet from_mask(std::size_t universe, std::uint64_t mask) {
        HypothesisSet s(universe);
        for (std::size_t i = 0; i < universe; ++i)
            if (mask & (std::uint64_t{1} << i)) s.insert(i);
        return s;
    }

    std::size_t universe() const noexcept { return bits_.size(); }
    bool contains(std::size_t i) const { return bits_.at(i) != 0; }
    void insert(std::size_t i) { bits_.at(i) = 1; }
    void erase(std::size_t i) { bits_.at(i) = 0; }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), char{1}));
    }
    bool empty() const { return std::find(bits_.begin(), bits_.end(), char{1}) == bits_.end(); }
    bool full() const { return std::find(bits_.begin(), bits_.end(), char{0}) == bits_.end(); }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) out.push_back(i);
        return out;
    }

    bool subset_of(const HypothesisSet& other) const {
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i] && !other.bits_.at(i)) return false;
        return true;
    }
    bool intersects(const HypothesisSet& other) const {
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i] && other.bits_.at(i)) return true;
        return false;
    }

    HypothesisSet& operator|=(const HypothesisSet& other) {
        for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] = static_cast<char>(bits_[i] | other.bits_.at(i));
        return *this;
    }
    friend HypothesisSet operator|(HypothesisSet a, const HypothesisSet& b) { return a |= b; }
    friend bool operator==(const HypothesisSet&, const HypothesisSet&) = default;

    std::string to_string() const {
        std::string s = "{";
        bool first = true;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) {
                if (!first) s += ",";
                s += std::to_string(i);
                first = false;
            }
        return s + "}";
    }

private:
    std::vector<char> bits_;
};

struct DecisionState {
    HypothesisSet rejected;
    HypothesisSet accepted;
    std::size_t stage = 0;
    std::size_t sample_size = 0;
    std::size_t rejected_count = 0;
    std::size_t block_cursor = 1; // in-order procedures only

    DecisionState() = default;
    explicit DecisionState(std::size_t universe) : rejected(universe), accepted(universe) {}

    std::size_t universe() const noexcept { return rejected.universe(); }
    bool decided(std::size_t i) const { return rejected.contains(i) || accepted.contains(i); }
    bool all_decided() const {
        for (std::size_t i = 0; i < universe(); ++i)
            if (!decided(i)) return false;
        return true;
    }
    std::vector<std::size_t> active() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < universe(); ++i)
            if (!decided(i)) out.push_back(i);
        return out;
    }
};

struct DecisionRecord {
    std::size_t stage = 0;
    std::size_t sample_size = 0;
    std::vector<std::size_t> rejected;
    std::vector<std::size_t> accepted;
    bool terminal = false;
    // Statistic values of the elements active at this look (NaN for inactive); filled when verbose.
    std::vector<double> statistics;
};

struct TraceCheck {
    std::vector<std::string> problems;
    bool ok() const noexcept { return problems.empty(); }
};

struct DecisionTrace {
    std::vector<DecisionRecord> records;
    DecisionState terminal_state;
    // n at which each element was decided (0 if never decided).
    std::vector<std::size_t> decision_size;

    std::size_t universe() const noexcept { return terminal_state.universe(); }
    std::size_t final_sample_size() const noexcept { return terminal_state.sample_size; }

    bool rejects(std::size_t i) const { return terminal_state.rejected.contains(i); }
    bool accepts(std::size_t i) const { return terminal_state.accepted.contains(i); }

    std::size_t rejection_rounds() const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const DecisionRecord& r) { return !r.rejected.empty(); }));
    }

    TraceCheck check_invariants(const std::optional<SampleSchedule>& schedule = std::nullopt) const {
        TraceCheck out;
        std::vector<int> decided(universe(), 0);
        std::size_t prev_n = 0;
        for (const auto& r : records) {
            if (r.sample_size < prev_n) out.problems.push_back("sample size decreased at stage " + std::to_string(r.stage));
            prev_n = r.sample_size;
            if (schedule && r.sample_size > 0 && !schedule->contains(r.sample_size))
                out.problems.push_back("sample size " + std::to_string(r.sample_size) + " is not a scheduled look");
            for (auto lists : {&r.rejected, &r.accepted})
                for (auto i : *lists) {
                    if (i >= decided.size()) {
                        out.problems.push_back("element index out of range");
                        continue;
                    }
                    if (decided[i]++) out.problems.push_back("element " + std::to_string(i) + " decided twice");
                }
        }
        if (terminal_state.rejected.intersects(terminal_state.accepted))
            out.problems.push_back("terminal rejected and accepted sets overlap");
        for (std::size_t i = 0; i < decided.size(); ++i) {
            bool in_terminal = terminal_state.decided(i);
            if (in_terminal != (decided[i] == 1))
                out.problems.push_back("element " + std::to_string(i) + " terminal state disagrees with records");
        }
        if (rejection_rounds() > universe())
            out.problems.push_back("more nonempty rejection rounds than hypotheses");
        return out;
    }
};

} // namespace seqfwer
