#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lossdev {

// Base of every error raised by the library. The CLI maps each subclass onto a
// process exit code (see experiment.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad parameters, inconsistent sizes, unknown config keys.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A CGF derivative was requested outside the finiteness domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// A module precondition is not met (e.g. a defective default-time law where a
// proper one is required).
class PreconditionError : public Error {
public:
    using Error::Error;
};

enum class TiltSide { below_infimum, above_supremum };

// No finite tilt solves Lambda'(sigma) = q because q sits on or outside an
// edge of the support.
class NoTiltError : public Error {
public:
    NoTiltError(TiltSide side, double level, double edge);

    TiltSide side() const noexcept { return side_; }
    double level() const noexcept { return level_; }
    double edge() const noexcept { return edge_; }

private:
    TiltSide side_;
    double level_;
    double edge_;
};

// The barrier does not exceed the mean loss path at some epoch, so the event
// is not rare.
class NotRareEventError : public Error {
public:
    NotRareEventError(int s, int t, double level, double mean_level);

    int start() const noexcept { return s_; }
    int epoch() const noexcept { return t_; }

private:
    int s_;
    int t_;
};

struct EpochPair {
    int s = 0;
    int t = 0;
};

// Two or more epochs attain the minimal rate within the uniqueness gap.
class NonUniqueOptimumError : public Error {
public:
    NonUniqueOptimumError(std::vector<EpochPair> tied, double rate, double gap_tol);

    const std::vector<EpochPair>& tied() const noexcept { return tied_; }

private:
    std::vector<EpochPair> tied_;
};

// Exact computation would exceed the configured state-space cap.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, std::size_t required, std::size_t cap);

    std::size_t required() const noexcept { return required_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t required_;
    std::size_t cap_;
};

}  // namespace lossdev
