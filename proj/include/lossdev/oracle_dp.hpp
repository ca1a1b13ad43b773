#pragma once

// Exact finite-n probabilities for portfolios whose loss amounts live on a
// lattice d*Z (including 0). Losses are carried as integer lattice indices so
// the convolutions are exact up to floating-point mass arithmetic.

#include "lossdev/barrier.hpp"
#include "lossdev/distributions.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lossdev {

inline constexpr std::size_t kDefaultStateCap = 2'000'000;

class LatticePortfolio {
public:
    // U must have finitely many atoms on a common lattice through 0.
    LatticePortfolio(int n, LossAmountModel loss, DefaultTimeModel timing, std::size_t state_cap = kDefaultStateCap);

    int obligors() const noexcept { return n_; }
    const LossAmountModel& loss() const noexcept { return loss_; }
    const DefaultTimeModel& timing() const noexcept { return timing_; }
    double span() const noexcept { return span_; }
    std::size_t state_cap() const noexcept { return cap_; }
    // Atom indices k (value k*span) and their probabilities.
    const std::vector<std::int64_t>& atom_index() const noexcept { return index_; }
    const std::vector<double>& atom_mass() const noexcept { return mass_; }
    std::int64_t max_index() const noexcept { return max_index_; }

    // Smallest lattice index K with K*span >= n*level (ties count as crossings).
    std::int64_t threshold_index(double level) const;

private:
    int n_;
    LossAmountModel loss_;
    DefaultTimeModel timing_;
    std::size_t cap_;
    double span_ = 1.0;
    std::vector<std::int64_t> index_;
    std::vector<double> mass_;
    std::int64_t max_index_ = 0;
};

// Law of L_n(t) on the lattice: masses[k] = P(L_n(t) = k*span).
struct LatticeLaw {
    double span = 1.0;
    std::vector<double> masses;

    double total() const;
    double mean() const;
};

LatticeLaw exact_marginal(const LatticePortfolio& portfolio, int t);

// P(L_n(t) >= n*level) from the marginal law.
double exact_marginal_tail(const LatticePortfolio& portfolio, int t, double level);

// P(exists t: L_n(t)/n >= zeta(t)) over the tabulated epochs, assembled as the
// largest single-epoch tail plus the probability of crossing elsewhere only,
// so the result never falls below any single-epoch tail.
double exact_barrier(const LatticePortfolio& portfolio, const Barrier& barrier);

// P(exists listed (s,t): (L_n(t) - L_n(s))/n >= xi(s,t)).
double exact_increment(const LatticePortfolio& portfolio, const IncrementBarrier& barrier);

}  // namespace lossdev
