#include "lossdev/path_rate.hpp"

#include "lossdev/errors.hpp"
#include "lossdev/legendre.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lossdev {

namespace {

constexpr double kMassTol = 1e-12;
constexpr int kBisectionSteps = 200;
constexpr int kBracketSteps = 80;

enum class BucketKind { empty, sanov, cramer };

// One epoch of the separable program: minimize h(phi) = phi log(phi/p) + [cramer term].
struct Bucket {
    double p = 0.0;
    double delta = 0.0;
    BucketKind kind = BucketKind::cramer;
    // Lambda*(0) for a zero increment; +inf forces phi = 0.
    double zero_cost = 0.0;
    // Limits of phi as the multiplier goes to -inf / +inf.
    double phi_lo = 0.0;
    double phi_hi = kInf;
    // Smallest admissible tilt (phi <= 1); -probe ceiling when unconstrained.
    double sigma_floor = 0.0;
    double sigma_ceiling = 0.0;
};

struct BucketPoint {
    double phi = 0.0;
    double sigma = 0.0;
};

struct ProgramSolution {
    bool feasible = true;
    double value = kInf;
    std::vector<double> phi;
    std::vector<double> sigma;  // NaN where no tilt applies
};

class SeparableProgram {
public:
    SeparableProgram(const CumulantFunction& cgf, std::vector<Bucket> buckets)
        : cgf_(cgf), buckets_(std::move(buckets)) {
        const SupportEdge lower = cgf_.support_lower();
        const SupportEdge upper = cgf_.support_upper();
        const double ceiling_hi = std::fmin(cgf_.probe_ceiling(), cgf_.domain_upper());
        const double ceiling_lo = std::fmax(-cgf_.probe_ceiling(), cgf_.domain_lower());
        lower_ = lower;
        upper_ = upper;
        for (auto& b : buckets_) {
            if (b.kind == BucketKind::empty) {
                b.phi_lo = b.phi_hi = 0.0;
                continue;
            }
            if (b.kind == BucketKind::sanov) {
                b.phi_lo = 0.0;
                b.phi_hi = kInf;
                continue;
            }
            if (b.delta <= 0.0) {
                b.delta = 0.0;
                b.zero_cost = (lower.value == 0.0 && lower.mass > 0.0) ? -std::log(lower.mass) : kInf;
                b.phi_lo = 0.0;
                b.phi_hi = std::isfinite(b.zero_cost) ? kInf : 0.0;
                continue;
            }
            b.phi_lo = std::isfinite(upper.value) ? b.delta / upper.value : 0.0;
            b.phi_hi = lower.value > 0.0 ? std::fmin(1.0, b.delta / lower.value) : 1.0;
            b.sigma_ceiling = ceiling_hi;
            b.sigma_floor = ceiling_lo;
            if (b.delta > lower.value && b.delta < upper.value) {
                b.sigma_floor = tilt_solve(cgf_, b.delta);
            }
        }
    }

    ProgramSolution solve() const {
        ProgramSolution out;
        const std::size_t n = buckets_.size();
        out.phi.assign(n, 0.0);
        out.sigma.assign(n, std::nan(""));

        double sum_lo = 0.0;
        double sum_hi = 0.0;
        for (const auto& b : buckets_) {
            sum_lo += b.phi_lo;
            sum_hi += b.phi_hi;
        }
        if (sum_lo > 1.0 + kMassTol || sum_hi < 1.0 - kMassTol) {
            out.feasible = false;
            return out;
        }
        if (sum_lo >= 1.0 - kMassTol || sum_hi <= 1.0 + kMassTol) {
            // Every weight pinned at one end of its range.
            const bool at_lo = sum_lo >= 1.0 - kMassTol;
            detail::CompensatedSum total;
            for (std::size_t i = 0; i < n; ++i) {
                const Bucket& b = buckets_[i];
                out.phi[i] = at_lo ? b.phi_lo : b.phi_hi;
                total += pinned_value(b, out.phi[i], at_lo);
            }
            out.value = std::fmax(0.0, total.value());
            out.feasible = std::isfinite(out.value);
            return out;
        }

        // Bracket the multiplier of sum(phi) = 1.
        double mu_lo = 1.0;
        double mu_hi = 1.0;
        double step = 1.0;
        for (int i = 0; i < kBracketSteps && mass_at(mu_lo) > 1.0; ++i) {
            mu_lo -= step;
            step *= 2.0;
        }
        step = 1.0;
        for (int i = 0; i < kBracketSteps && mass_at(mu_hi) < 1.0; ++i) {
            mu_hi += step;
            step *= 2.0;
        }
        for (int i = 0; i < kBisectionSteps; ++i) {
            const double mid = 0.5 * (mu_lo + mu_hi);
            if (mid <= mu_lo || mid >= mu_hi) {
                break;
            }
            const double s = mass_at(mid);
            if (s == 1.0) {
                mu_lo = mu_hi = mid;
                break;
            }
            (s < 1.0 ? mu_lo : mu_hi) = mid;
        }
        const double mu = 0.5 * (mu_lo + mu_hi);

        detail::CompensatedSum mass;
        std::vector<BucketPoint> points(n);
        for (std::size_t i = 0; i < n; ++i) {
            points[i] = respond(buckets_[i], mu);
            mass += points[i].phi;
        }
        const double scale = 1.0 / mass.value();
        detail::CompensatedSum total;
        for (std::size_t i = 0; i < n; ++i) {
            const Bucket& b = buckets_[i];
            BucketPoint pt = points[i];
            pt.phi *= scale;
            out.phi[i] = pt.phi;
            if (b.kind == BucketKind::cramer && b.delta > 0.0) {
                out.sigma[i] = pt.sigma;
            }
            total += bucket_value(b, pt);
        }
        out.value = std::fmax(0.0, total.value());
        out.feasible = std::isfinite(out.value);
        return out;
    }

private:
    static double entropy(double phi, double p) { return phi > 0.0 ? phi * std::log(phi / p) : 0.0; }

    double pinned_value(const Bucket& b, double phi, bool at_lo) const {
        if (b.kind == BucketKind::empty || phi <= 0.0) {
            return b.kind == BucketKind::cramer && b.delta > 0.0 ? perspective(cgf_, b.delta, 0.0) : 0.0;
        }
        if (b.kind == BucketKind::sanov) {
            return entropy(phi, b.p);
        }
        if (b.delta == 0.0) {
            return entropy(phi, b.p) + phi * b.zero_cost;
        }
        // At the lower end delta/phi sits on the supremum of the support.
        const double edge_cost = at_lo ? (upper_.mass > 0.0 ? -std::log(upper_.mass) : kInf)
                                       : legendre_transform(cgf_, b.delta / phi).value;
        return entropy(phi, b.p) + phi * edge_cost;
    }

    double bucket_value(const Bucket& b, const BucketPoint& pt) const {
        switch (b.kind) {
            case BucketKind::empty: return 0.0;
            case BucketKind::sanov: return entropy(pt.phi, b.p);
            case BucketKind::cramer:
                if (b.delta == 0.0) {
                    return pt.phi > 0.0 ? entropy(pt.phi, b.p) + pt.phi * b.zero_cost : 0.0;
                }
                // phi Lambda*(delta/phi) = sigma delta - phi Lambda(sigma) at the tilt.
                return entropy(pt.phi, b.p) + pt.sigma * b.delta - pt.phi * cgf_(pt.sigma);
        }
        return 0.0;
    }

    double mass_at(double mu) const {
        detail::CompensatedSum s;
        for (const auto& b : buckets_) {
            s += respond(b, mu).phi;
        }
        return s.value();
    }

    // Minimizer of h(phi) - mu*phi for one bucket. For a positive increment
    // the stationarity condition log(phi/p) + 1 - Lambda(sigma) = mu with
    // Lambda'(sigma) = delta/phi is solved in sigma, where it is decreasing.
    BucketPoint respond(const Bucket& b, double mu) const {
        switch (b.kind) {
            case BucketKind::empty: return {};
            case BucketKind::sanov: return {b.p * std::exp(mu - 1.0), 0.0};
            case BucketKind::cramer: break;
        }
        if (b.delta == 0.0) {
            if (!std::isfinite(b.zero_cost)) {
                return {};
            }
            return {b.p * std::exp(mu - 1.0 - b.zero_cost), 0.0};
        }
        auto gradient = [&](double sigma, double& phi) {
            const Cumulants c = cgf_.derivatives(sigma);
            phi = std::fmin(1.0, b.delta / c.slope);
            return std::log(phi / b.p) + 1.0 - c.value;
        };
        double lo = b.sigma_floor;
        double hi = b.sigma_ceiling;
        double phi = 0.0;
        // Interior evaluation points only: the ends may be open domain edges.
        const double lo_eval = std::isfinite(cgf_.domain_lower()) && lo == cgf_.domain_lower() ? std::nextafter(lo, hi) : lo;
        if (gradient(lo_eval, phi) <= mu) {
            return {phi, lo_eval};
        }
        const double hi_eval = hi == cgf_.domain_upper() ? std::nextafter(hi, lo) : hi;
        if (gradient(hi_eval, phi) >= mu) {
            return {phi, hi_eval};
        }
        lo = lo_eval;
        hi = hi_eval;
        for (int i = 0; i < kBisectionSteps; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            (gradient(mid, phi) > mu ? lo : hi) = mid;
        }
        const double sigma = 0.5 * (lo + hi);
        gradient(sigma, phi);
        return {phi, sigma};
    }

    const CumulantFunction& cgf_;
    std::vector<Bucket> buckets_;
    SupportEdge lower_;
    SupportEdge upper_;
};

std::vector<Bucket> make_buckets(const std::vector<double>& increments, const DefaultTimeModel& timing,
                                 bool augment) {
    std::vector<Bucket> buckets;
    buckets.reserve(increments.size() + 1);
    for (std::size_t i = 0; i < increments.size(); ++i) {
        Bucket b;
        b.p = timing.probabilities()[i];
        b.delta = increments[i];
        if (b.p <= 0.0) {
            b.kind = BucketKind::empty;
        }
        buckets.push_back(b);
    }
    if (augment) {
        Bucket never;
        never.p = timing.defect();
        never.kind = BucketKind::sanov;
        buckets.push_back(never);
    }
    return buckets;
}

void require_proper(const DefaultTimeModel& timing, const PathRateOptions& options) {
    if (timing.is_defective() && !options.augment_defective) {
        std::ostringstream os;
        os.precision(12);
        os << "default-time law is defective (defect mass 1 - F_N = " << timing.defect()
           << "); the rate function needs total mass 1, enable augment_defective";
        throw PreconditionError(os.str());
    }
}

// Rate of one class for per-epoch increments; empty-bucket increments must vanish.
ProgramSolution class_program(const std::vector<double>& increments, const LossAmountModel& loss,
                              const DefaultTimeModel& timing, const PathRateOptions& options) {
    const bool augment = timing.is_defective() && options.augment_defective;
    for (std::size_t i = 0; i < increments.size(); ++i) {
        if (timing.probabilities()[i] <= 0.0 && increments[i] > 0.0) {
            ProgramSolution out;
            out.feasible = false;
            return out;
        }
    }
    SeparableProgram program(loss, make_buckets(increments, timing, augment));
    return program.solve();
}

SimplexPoint to_simplex(const std::vector<double>& phi, int grid) {
    SimplexPoint pt;
    pt.weights.assign(phi.begin(), phi.begin() + grid);
    if (static_cast<int>(phi.size()) > grid) {
        pt.never_weight = phi[static_cast<std::size_t>(grid)];
    }
    return pt;
}

SimplexPoint prior_point(const DefaultTimeModel& timing, bool augment) {
    SimplexPoint pt;
    pt.weights = timing.probabilities();
    pt.never_weight = augment ? timing.defect() : 0.0;
    return pt;
}

}  // namespace

// ---------------------------------------------------------------------------

LossPath::LossPath(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw ArgumentError("loss path must have at least one epoch");
    }
    double prev = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        if (!std::isfinite(v) || v < 0.0) {
            throw ArgumentError("loss path value x_" + std::to_string(i + 1) + " must be finite and nonnegative");
        }
        if (v < prev) {
            throw ArgumentError("loss path must be nondecreasing: x_" + std::to_string(i + 1) + " < x_" +
                                std::to_string(i));
        }
        prev = v;
    }
}

double LossPath::increment(int i) const {
    if (i < 1 || i > size()) {
        throw ArgumentError("loss path increment index out of range");
    }
    const auto k = static_cast<std::size_t>(i - 1);
    return k == 0 ? values_[0] : values_[k] - values_[k - 1];
}

std::vector<double> LossPath::increments() const {
    std::vector<double> out(values_.size());
    for (int i = 1; i <= size(); ++i) {
        out[static_cast<std::size_t>(i - 1)] = increment(i);
    }
    return out;
}

LossPath LossPath::mean_path(const LossAmountModel& loss, const DefaultTimeModel& timing) {
    std::vector<double> x(static_cast<std::size_t>(timing.grid_size()));
    const double mu = loss.mean();
    for (int j = 1; j <= timing.grid_size(); ++j) {
        x[static_cast<std::size_t>(j - 1)] = mu * timing.cumulative(j);
    }
    return LossPath(std::move(x));
}

PathRateResult path_rate(const LossPath& path, const LossAmountModel& loss, const DefaultTimeModel& timing,
                         const PathRateOptions& options) {
    if (path.size() != timing.grid_size()) {
        throw ArgumentError("loss path has " + std::to_string(path.size()) + " epochs but the grid has " +
                            std::to_string(timing.grid_size()));
    }
    if (!(options.tol > 0.0)) {
        throw ArgumentError("path rate tolerance must be positive");
    }
    require_proper(timing, options);
    const bool augment = timing.is_defective() && options.augment_defective;

    const ProgramSolution sol = class_program(path.increments(), loss, timing, options);
    PathRateResult out;
    out.augmented = augment;
    if (!sol.feasible) {
        out.rate = kInf;
        out.argmin = prior_point(timing, augment);
        return out;
    }
    out.rate = sol.value;
    out.argmin = to_simplex(sol.phi, timing.grid_size());
    return out;
}

// ---------------------------------------------------------------------------

MultiClassSpec::MultiClassSpec(std::vector<ObligorClass> classes) : classes_(std::move(classes)) {
    if (classes_.empty()) {
        throw ArgumentError("multi-class portfolio needs at least one class");
    }
    detail::CompensatedSum total;
    const int grid = classes_.front().timing.grid_size();
    for (std::size_t j = 0; j < classes_.size(); ++j) {
        const auto& c = classes_[j];
        if (!(c.fraction > 0.0)) {
            throw ArgumentError("class " + std::to_string(j) + " fraction must be positive");
        }
        if (c.timing.grid_size() != grid) {
            throw ArgumentError("class " + std::to_string(j) + " grid size differs from class 0");
        }
        total += c.fraction;
    }
    if (std::fabs(total.value() - 1.0) > 1e-10) {
        throw ArgumentError("class fractions must sum to 1");
    }
}

MultiClassResult multiclass_rate(const LossPath& path, const MultiClassSpec& spec, const PathRateOptions& options) {
    if (path.size() != spec.grid_size()) {
        throw ArgumentError("loss path has " + std::to_string(path.size()) + " epochs but the grid has " +
                            std::to_string(spec.grid_size()));
    }
    for (const auto& c : spec.classes()) {
        require_proper(c.timing, options);
    }
    const auto& classes = spec.classes();
    const std::size_t m = classes.size();
    const auto grid = static_cast<std::size_t>(spec.grid_size());
    const std::vector<double> delta = path.increments();

    // Start from the split proportional to each class's mean loss per epoch.
    std::vector<std::vector<double>> split(m, std::vector<double>(grid, 0.0));
    for (std::size_t i = 0; i < grid; ++i) {
        double denom = 0.0;
        for (const auto& c : classes) {
            denom += c.fraction * c.loss.mean() * c.timing.probabilities()[i];
        }
        for (std::size_t j = 0; j < m; ++j) {
            const auto& c = classes[j];
            const double share = denom > 0.0 ? c.fraction * c.loss.mean() * c.timing.probabilities()[i] / denom
                                             : c.fraction;
            split[j][i] = delta[i] * share;
        }
    }

    MultiClassResult out;
    out.argmin.resize(m);
    std::vector<std::vector<double>> phi(m);
    double previous = kInf;
    int infinite_rounds = 0;
    const double stop = std::fmin(options.tol, 1e-10) * 1e-2;
    const int max_iterations = 10000;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        out.iterations = iter;
        // Epoch distributions for the current split.
        detail::CompensatedSum total;
        for (std::size_t j = 0; j < m; ++j) {
            const auto& c = classes[j];
            std::vector<double> scaled(grid);
            for (std::size_t i = 0; i < grid; ++i) {
                scaled[i] = split[j][i] / c.fraction;
            }
            const ProgramSolution sol = class_program(scaled, c.loss, c.timing, options);
            const bool augment = c.timing.is_defective() && options.augment_defective;
            if (sol.feasible) {
                phi[j] = sol.phi;
                out.argmin[j] = to_simplex(sol.phi, spec.grid_size());
                total += c.fraction * sol.value;
            } else {
                const SimplexPoint prior = prior_point(c.timing, augment);
                phi[j] = prior.weights;
                if (augment) {
                    phi[j].push_back(prior.never_weight);
                }
                out.argmin[j] = prior;
                total += kInf;
            }
        }
        const double current = total.value();
        if (std::isfinite(current)) {
            infinite_rounds = 0;
            if (std::isfinite(previous) && previous - current <= stop) {
                out.rate = std::fmin(previous, current);
                out.split = split;
                return out;
            }
        } else if (++infinite_rounds >= 3) {
            out.rate = kInf;
            out.split = split;
            return out;
        }
        previous = current;
        if (m == 1) {
            out.rate = current;
            out.split = split;
            return out;
        }

        // Split step: equalize the tilt lambda across classes in every epoch,
        // v_i^j = a_j phi_i^j Lambda_j'(lambda).
        for (std::size_t i = 0; i < grid; ++i) {
            if (delta[i] <= 0.0) {
                for (std::size_t j = 0; j < m; ++j) {
                    split[j][i] = 0.0;
                }
                continue;
            }
            double lo = -kInf;
            double hi = kInf;
            bool any = false;
            for (std::size_t j = 0; j < m; ++j) {
                if (phi[j][i] > 0.0) {
                    any = true;
                    lo = std::fmax(lo, std::fmax(classes[j].loss.domain_lower(), -classes[j].loss.probe_ceiling()));
                    hi = std::fmin(hi, std::fmin(classes[j].loss.domain_upper(), classes[j].loss.probe_ceiling()));
                }
            }
            if (!any) {
                continue;
            }
            auto supplied = [&](double lambda) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    if (phi[j][i] > 0.0) {
                        s += classes[j].fraction * phi[j][i] * classes[j].loss.derivatives(lambda).slope;
                    }
                }
                return s;
            };
            lo = std::nextafter(lo, hi);
            hi = std::nextafter(hi, lo);
            for (int k = 0; k < kBisectionSteps; ++k) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) {
                    break;
                }
                (supplied(mid) < delta[i] ? lo : hi) = mid;
            }
            const double lambda = 0.5 * (lo + hi);
            double assigned = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                split[j][i] = phi[j][i] > 0.0
                                  ? classes[j].fraction * phi[j][i] * classes[j].loss.derivatives(lambda).slope
                                  : 0.0;
                assigned += split[j][i];
            }
            // Remove the bisection residue so the split sums to dx_i exactly.
            if (assigned > 0.0) {
                for (std::size_t j = 0; j < m; ++j) {
                    split[j][i] *= delta[i] / assigned;
                }
            }
        }
    }
    out.rate = previous;
    out.split = split;
    return out;
}

MixtureDecay mixture_decay(const std::vector<ScenarioRate>& rates) {
    if (rates.empty()) {
        throw ArgumentError("mixture decay needs at least one scenario");
    }
    MixtureDecay best{rates.front().rate, rates.front().label};
    for (const auto& r : rates) {
        if (r.rate > best.rate) {
            best = {r.rate, r.label};
        }
    }
    return best;
}

}  // namespace lossdev
