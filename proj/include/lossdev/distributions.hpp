#pragma once

// Loss-amount and default-time laws, and the composite variables U*Z(t) and
// U*(Z(t) - Z(s)) built from them, all exposed through their cumulant
// generating functions.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lossdev {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Lambda, Lambda' and Lambda'' at one point.
struct Cumulants {
    double value = 0.0;
    double slope = 0.0;
    double curvature = 0.0;
};

// Support x0 + d*Z with maximal span d.
struct LatticeInfo {
    double span = 1.0;
    double offset = 0.0;

    bool contains(double v, double tol = 1e-9) const;
};

// Detects the maximal lattice carrying `values` (GCD of pairwise differences
// after rounding at 1e-9). Fewer than two distinct values is degenerate and
// yields no lattice.
std::optional<LatticeInfo> detect_lattice(std::span<const double> values);

// One edge of the essential support and the probability mass sitting on it.
// `value` is +-inf for unbounded support, in which case `mass` is 0.
struct SupportEdge {
    double value = 0.0;
    double mass = 0.0;
};

// Read-only access to the CGF of a real random variable. Evaluation outside
// the finiteness domain returns +inf instead of throwing.
class CumulantFunction {
public:
    virtual ~CumulantFunction() = default;

    virtual double operator()(double theta) const = 0;
    // Throws DomainError when theta is not strictly inside the domain.
    virtual Cumulants derivatives(double theta) const = 0;

    // Open finiteness domain (lower, upper); either end may be infinite.
    virtual double domain_lower() const = 0;
    virtual double domain_upper() const = 0;
    // Largest |theta| searched numerically before e^{theta X} risks overflow.
    virtual double probe_ceiling() const = 0;

    virtual SupportEdge support_lower() const = 0;
    virtual SupportEdge support_upper() const = 0;
    virtual double mean() const = 0;
    virtual std::optional<LatticeInfo> lattice() const = 0;

    bool in_domain(double theta) const { return theta > domain_lower() && theta < domain_upper(); }
};

struct Atom {
    double value = 0.0;
    double probability = 0.0;
};

enum class LossFamily { discrete, poisson_type, exponential, bounded_empirical };

std::string to_string(LossFamily family);

// Law of the loss given default U >= 0.
//
// poisson-type(u, lambda): P(U = (i+1)u) = e^{-lambda} lambda^i / i!, i >= 0,
//   so Lambda(theta) = theta*u + lambda*(e^{theta u} - 1).
// exponential(rate): density rate*e^{-rate*x}. Parameterized by rate; the
//   transform rate*x - 1 - log(rate*x) belongs to this parameterization even
//   where the literature calls the parameter a mean.
// bounded-empirical(samples): equal-weight atoms at the observed values.
class LossAmountModel final : public CumulantFunction {
public:
    static LossAmountModel discrete(std::vector<Atom> atoms);
    static LossAmountModel poisson_type(double unit, double lambda);
    static LossAmountModel exponential(double rate);
    static LossAmountModel bounded_empirical(std::span<const double> samples);
    // Point mass at `value`.
    static LossAmountModel constant(double value);

    LossFamily family() const noexcept { return family_; }
    // Sorted, merged atoms; empty for the continuous and infinite-support families.
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    double unit() const noexcept { return unit_; }
    double lambda() const noexcept { return lambda_; }
    double rate() const noexcept { return rate_; }
    bool has_finite_atoms() const noexcept { return !atoms_.empty(); }
    double variance() const;

    double operator()(double theta) const override;
    Cumulants derivatives(double theta) const override;
    double domain_lower() const override { return -kInf; }
    double domain_upper() const override;
    double probe_ceiling() const override;
    SupportEdge support_lower() const override;
    SupportEdge support_upper() const override;
    double mean() const override;
    std::optional<LatticeInfo> lattice() const override { return lattice_; }

private:
    LossAmountModel() = default;
    void finalize_atoms();

    LossFamily family_ = LossFamily::discrete;
    std::vector<Atom> atoms_;
    double unit_ = 0.0;
    double lambda_ = 0.0;
    double rate_ = 0.0;
    double min_gap_ = 1.0;
    std::optional<LatticeInfo> lattice_;
};

// Discrete default-epoch law p_j = P(tau = j) on {1..N}; the remaining mass
// 1 - F_N is the probability of never defaulting within the horizon.
class DefaultTimeModel {
public:
    explicit DefaultTimeModel(std::vector<double> probabilities);

    int grid_size() const noexcept { return static_cast<int>(p_.size()); }
    const std::vector<double>& probabilities() const noexcept { return p_; }
    // p_j for j in 1..N, 0 elsewhere.
    double probability(int j) const;
    // F_t; F_0 = 0 and F_t = F_N for t > N.
    double cumulative(int t) const;
    double defect() const noexcept { return defect_; }
    bool is_defective(double tol = 1e-12) const noexcept { return defect_ > tol; }
    // P(tau = j | tau > j-1); 0 when no mass survives.
    double hazard(int j) const;

private:
    std::vector<double> p_;
    std::vector<double> cumulative_;
    double defect_ = 0.0;
};

// CGF of a loss indicator mixture: with probability w the variable equals U,
// otherwise 0. Lambda(theta) = log(w E e^{theta U} + 1 - w).
class CompositeCgf final : public CumulantFunction {
public:
    enum class Kind { at_time, increment, explicit_mass };

    // U*Z(t), success mass F_t.
    static CompositeCgf at_time(const LossAmountModel& loss, const DefaultTimeModel& timing, int t);
    // U*(Z(t) - Z(s)), success mass F_t - F_s; s = 0 is the time origin.
    static CompositeCgf increment(const LossAmountModel& loss, const DefaultTimeModel& timing, int s, int t);
    static CompositeCgf with_mass(const LossAmountModel& loss, double success_mass);

    Kind kind() const noexcept { return kind_; }
    int start() const noexcept { return s_; }
    int epoch() const noexcept { return t_; }
    double success_mass() const noexcept { return w_; }
    const LossAmountModel& loss() const noexcept { return loss_; }
    // P(composite in tilted success branch) under the exponential tilt by theta.
    double tilted_success_mass(double theta) const;

    double operator()(double theta) const override;
    Cumulants derivatives(double theta) const override;
    double domain_lower() const override { return loss_.domain_lower(); }
    double domain_upper() const override;
    double probe_ceiling() const override { return loss_.probe_ceiling(); }
    SupportEdge support_lower() const override;
    SupportEdge support_upper() const override;
    double mean() const override { return w_ * loss_.mean(); }
    std::optional<LatticeInfo> lattice() const override { return lattice_; }

private:
    CompositeCgf(LossAmountModel loss, double w, Kind kind, int s, int t);

    LossAmountModel loss_;
    double w_;
    Kind kind_;
    int s_;
    int t_;
    std::optional<LatticeInfo> lattice_;
};

enum class TailClass { everywhere_finite, finite_up_to_threshold, heavy };

std::string to_string(TailClass tail);

struct LightTailReport {
    TailClass classification = TailClass::everywhere_finite;
    // Supremum of the CGF finiteness domain (+inf when finite everywhere).
    double threshold = kInf;
    bool finite_on_probes = true;
    // Lambda*(x)/x at x = mean * (1 + probe).
    std::vector<double> rate_ratios;
    bool ratio_increasing = true;
    // Increasing on the probes with no finite limit (the limit equals the threshold).
    bool ratio_diverging = true;
};

// Probes the light-tail condition Lambda_U < inf everywhere, and the
// equivalent growth Lambda*(x)/x -> inf, on a positive increasing grid.
LightTailReport check_light_tail(const LossAmountModel& model, std::span<const double> probes);

}  // namespace lossdev
