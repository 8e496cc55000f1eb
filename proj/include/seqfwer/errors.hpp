#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqfwer {

// Bad input shape: schedules, ladders, family sizes, partitions.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Missing or inconsistent configuration (e.g. a lower ladder was asked for but never supplied).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class lookup_error : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A rule broke the R ∩ A = ∅ contract or re-decided a hypothesis.
class contract_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Monte Carlo sample too small to resolve the requested tail quantile.
class precision_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dual calibration produced A_k >= B_k.
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A file could not be opened, read or written.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A stream ran out of observations before the requested sample size.
class data_error : public std::runtime_error {
public:
    data_error(std::size_t stream, std::size_t have, std::size_t need)
        : std::runtime_error("stream " + std::to_string(stream) + " has " + std::to_string(have) +
                             " observations, need " + std::to_string(need)),
          stream_(stream), have_(have), need_(need) {}
    explicit data_error(const std::string& what)
        : std::runtime_error(what), stream_(0), have_(0), need_(0) {}

    std::size_t stream() const noexcept { return stream_; }
    std::size_t have() const noexcept { return have_; }
    std::size_t need() const noexcept { return need_; }

private:
    std::size_t stream_, have_, need_;
};

} // namespace seqfwer
