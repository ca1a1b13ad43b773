#pragma once

// Exact (Bahadur-Rao type) asymptotics for the probability that the
// normalized loss process crosses a barrier, or that one of its increments
// exceeds an increment barrier:
//
//   P(...) = C* e^{-n I} / sqrt(n) * (1 + O(1/n)),
//
// where I is the smallest single-epoch rate and C* the Bahadur-Rao constant of
// the dominating epoch's variable.

#include "lossdev/barrier.hpp"
#include "lossdev/distributions.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lossdev {

struct BahadurRaoConstant {
    double constant = 0.0;
    double tilt = 0.0;       // sigma with Lambda'(sigma) = q
    double curvature = 0.0;  // Lambda''(sigma)
    std::optional<LatticeInfo> lattice;
    // q itself lies on the lattice (the lattice case presumes it does).
    bool on_lattice = true;
};

// Lattice: d / ((1 - e^{-sigma d}) sqrt(2 pi Lambda''(sigma))).
// Non-lattice: 1 / (sigma sqrt(2 pi Lambda''(sigma))).
// Requires q above the mean; propagates NoTiltError at a support edge.
BahadurRaoConstant bahadur_rao_constant(const CumulantFunction& cgf, double q, std::optional<LatticeInfo> lattice,
                                        double tol = 1e-12);

struct EpochRate {
    int s = 0;  // 0 for barrier epochs
    int t = 0;
    double level = 0.0;
    double success_mass = 0.0;
    double rate = 0.0;
    bool beyond_horizon = false;  // level taken from the growth declaration
};

struct TailCheck {
    int s = 0;
    bool declared = false;
    GrowthKind kind = GrowthKind::log;
    std::optional<double> slope;  // least-squares slope of I(t) against log t
    double min_ratio = kInf;      // min I(t)/log t over the checked epochs
    bool passed = true;
    std::string detail;
};

struct HypothesisReport {
    std::vector<EpochRate> rates;
    double gap_tol = 0.0;
    double uniqueness_gap = kInf;  // second smallest rate minus the smallest
    bool unique = true;
    std::vector<TailCheck> tails;
    bool tail_passed = true;
    std::vector<std::string> warnings;

    bool all_passed() const { return unique && tail_passed; }
};

struct NEstimate {
    int n = 0;
    double probability = 0.0;  // C* e^{-nI} / sqrt(n)
    bool lattice_mismatch = false;
};

struct AsymptoticEstimate {
    bool increment = false;
    int s_star = 0;
    int t_star = 0;
    double level = 0.0;
    double decay = 0.0;
    double tilt = 0.0;
    double prefactor = 0.0;
    double curvature = 0.0;
    double success_mass = 0.0;
    std::optional<LatticeInfo> lattice;
    std::vector<NEstimate> estimates;
    HypothesisReport diagnostics;
};

struct AsymptoticOptions {
    double gap_tol = 1e-9;
    double tol = 1e-12;
    // Last epoch evaluated; 0 means the tabulated horizon. Epochs beyond the
    // horizon take their level from the growth declaration.
    int t_check = 0;
};

// Throws NotRareEventError when a level does not exceed E[U] F_t, and
// NonUniqueOptimumError when the minimal rate is attained more than once.
AsymptoticEstimate barrier_asymptotics(const LossAmountModel& loss, const DefaultTimeModel& timing,
                                       const Barrier& barrier, std::span<const int> n_list,
                                       const AsymptoticOptions& options = {});

AsymptoticEstimate increment_asymptotics(const LossAmountModel& loss, const DefaultTimeModel& timing,
                                         const IncrementBarrier& barrier, std::span<const int> n_list,
                                         const AsymptoticOptions& options = {});

// Human-readable listing of per-epoch rates, the uniqueness gap, the tail
// slope and pass/fail per hypothesis.
std::string hypothesis_report(const AsymptoticEstimate& estimate);

}  // namespace lossdev
