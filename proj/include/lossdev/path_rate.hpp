#pragma once

// Sample-path rate function of the normalized loss process on a finite grid,
//
//   I(x) = inf_{phi in simplex} sum_i phi_i log(phi_i/p_i) + phi_i Lambda_U*(dx_i/phi_i),
//
// its multi-class extension, and the max rule for macro-scenario mixtures.

#include "lossdev/distributions.hpp"

#include <string>
#include <vector>

namespace lossdev {

// Nonnegative nondecreasing trajectory x_1..x_N with implicit x_0 = 0.
class LossPath {
public:
    explicit LossPath(std::vector<double> values);

    int size() const noexcept { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const noexcept { return values_; }
    // x_i - x_{i-1}, i in 1..N.
    double increment(int i) const;
    std::vector<double> increments() const;

    // x_j = E[U] F_j.
    static LossPath mean_path(const LossAmountModel& loss, const DefaultTimeModel& timing);

private:
    std::vector<double> values_;
};

struct SimplexPoint {
    std::vector<double> weights;
    // Mass on the virtual never-default epoch; 0 unless the grid was augmented.
    double never_weight = 0.0;
};

struct PathRateOptions {
    double tol = 1e-8;
    // Append a virtual epoch N+1 of mass 1 - F_N with zero loss so that a
    // defective default-time law can be used. Without it a defective law is
    // rejected.
    bool augment_defective = false;
};

struct PathRateResult {
    double rate = 0.0;
    // Minimizing epoch distribution; equals p when the rate is infinite.
    SimplexPoint argmin;
    bool augmented = false;
};

PathRateResult path_rate(const LossPath& path, const LossAmountModel& loss, const DefaultTimeModel& timing,
                         const PathRateOptions& options = {});

struct ObligorClass {
    double fraction = 0.0;
    LossAmountModel loss;
    DefaultTimeModel timing;
};

// Classes with positive fractions summing to 1, sharing one grid.
class MultiClassSpec {
public:
    explicit MultiClassSpec(std::vector<ObligorClass> classes);

    const std::vector<ObligorClass>& classes() const noexcept { return classes_; }
    int grid_size() const noexcept { return classes_.front().timing.grid_size(); }

private:
    std::vector<ObligorClass> classes_;
};

struct MultiClassResult {
    double rate = 0.0;
    // Per class: epoch distribution and loss split v_i^j (summing to dx_i over j).
    std::vector<SimplexPoint> argmin;
    std::vector<std::vector<double>> split;
    int iterations = 0;
};

// Each class fraction weights its own class terms:
//   inf_{phi^j} inf_{v} sum_j a_j sum_i phi_i^j (log(phi_i^j/p_i^j) + Lambda_j*(v_i^j/(a_j phi_i^j))).
MultiClassResult multiclass_rate(const LossPath& path, const MultiClassSpec& spec, const PathRateOptions& options = {});

struct ScenarioRate {
    std::string label;
    double rate = 0.0;  // lim (1/n) log P(. | Y = y), <= 0
};

struct MixtureDecay {
    double rate = 0.0;
    std::string label;
};

// Unconditional decay rate over finitely many macro scenarios: the maximum,
// first occurrence on ties.
MixtureDecay mixture_decay(const std::vector<ScenarioRate>& rates);

}  // namespace lossdev
