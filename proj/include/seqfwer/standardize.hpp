#pragma once

// Piecewise-linear standardizing maps. The upper map sends B_s to k-s+1 so
// statistics on different scales can be ranked against one integer ladder;
// the lower map mirrors it, sending A_s to -(k-s+1).

#include "seqfwer/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace seqfwer {

namespace detail {

// Upper map for a single non-increasing ladder b[0] >= ... >= b[k-1].
// Tied rungs jump to the value of the smallest index sharing the rung, so
// x >= B_s  <=>  phi(x) >= k-s+1 holds for every s.
inline double standardize_upper(const std::vector<double>& b, double x) {
    const auto k = static_cast<double>(b.size());
    if (x >= b.front()) return x - b.front() + k;
    if (x < b.back()) return std::min(x - b.back() + 1.0, std::nextafter(1.0, -INFINITY));
    // s0: smallest 1-based index with B_s0 <= x. Exists and is >= 2 here.
    std::size_t s0 = 1;
    while (b[s0 - 1] > x) ++s0;
    const double base = k - static_cast<double>(s0) + 1.0;
    if (x == b[s0 - 1]) return base;
    const double hi = b[s0 - 2];
    const double lo = b[s0 - 1];
    double v = (x - lo) / (hi - lo) + base;
    // x < B_{s0-1} strictly, so the value must stay below the next integer.
    if (v >= base + 1.0) v = std::nextafter(base + 1.0, -INFINITY);
    return v;
}

} // namespace detail

class StandardizingSpec {
public:
    StandardizingSpec() = default;

    explicit StandardizingSpec(std::vector<CriticalLadder> ladders) : ladders_(std::move(ladders)) {
        if (ladders_.empty()) throw validation_error("standardizing spec needs at least one ladder");
        k_ = ladders_.front().k();
        for (const auto& l : ladders_) {
            if (l.k() != k_) throw validation_error("all ladders must have the same number of rungs");
            l.validate();
        }
        mirrored_.resize(ladders_.size());
        for (std::size_t j = 0; j < ladders_.size(); ++j) {
            if (!ladders_[j].lower) continue;
            auto& m = mirrored_[j];
            for (double a : *ladders_[j].lower) m.push_back(-a);
        }
    }

    std::size_t k() const noexcept { return k_; }
    std::size_t hypotheses() const noexcept { return ladders_.size(); }
    const CriticalLadder& ladder(HypothesisId j) const { return ladders_.at(j.index - 1); }
    bool has_lower(HypothesisId j) const { return ladder(j).lower.has_value(); }

    double standardize(HypothesisId j, double x) const {
        return detail::standardize_upper(ladder(j).upper, x);
    }

    double standardize_lower(HypothesisId j, double x) const {
        if (!has_lower(j))
            throw config_error("hypothesis " + std::to_string(j.index) + " has no lower ladder");
        return -detail::standardize_upper(mirrored_.at(j.index - 1), -x);
    }

    // Upper map above B_k, lower map below A_k, linear from -1 to +1 in between.
    double standardize_joint(HypothesisId j, double x) const {
        const auto& l = ladder(j);
        if (!l.lower) return standardize(j, x);
        const double bk = l.upper.back();
        const double ak = l.lower->back();
        if (x >= bk) return standardize(j, x);
        if (x <= ak) return standardize_lower(j, x);
        const double v = -1.0 + 2.0 * (x - ak) / (bk - ak);
        return std::clamp(v, std::nextafter(-1.0, INFINITY), std::nextafter(1.0, -INFINITY));
    }

private:
    std::size_t k_ = 0;
    std::vector<CriticalLadder> ladders_;
    std::vector<std::vector<double>> mirrored_;
};

inline double standardize(const StandardizingSpec& spec, HypothesisId j, double x) { return spec.standardize(j, x); }

inline double standardize_lower(const StandardizingSpec& spec, HypothesisId j, double x) {
    return spec.standardize_lower(j, x);
}

} // namespace seqfwer
