#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

namespace seqfwer {

// Monte Carlo proportion with its standard error and a pass/fail against bound + slack*SE.
struct EstimateReport {
    std::string name;
    double estimate = 0.0;
    double standard_error = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    double bound = 0.0;
    double slack_se = 3.0;
    bool pass = true;

    double limit() const noexcept { return bound + slack_se * standard_error; }
};

inline EstimateReport make_estimate(std::string name, std::size_t hits, std::size_t reps, std::uint64_t seed,
                                    double bound, double slack_se = 3.0) {
    EstimateReport r;
    r.name = std::move(name);
    r.reps = reps;
    r.seed = seed;
    r.bound = bound;
    r.slack_se = slack_se;
    r.estimate = reps ? static_cast<double>(hits) / static_cast<double>(reps) : 0.0;
    r.standard_error = reps ? std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(reps)) : 0.0;
    r.pass = r.estimate <= r.limit();
    return r;
}

} // namespace seqfwer
