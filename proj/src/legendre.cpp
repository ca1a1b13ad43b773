#include "lossdev/legendre.hpp"

#include "lossdev/errors.hpp"
#include "numeric.hpp"

#include <cmath>
#include <limits>

namespace lossdev {

namespace {

constexpr int kMaxBracketSteps = 4000;
constexpr int kMaxRefineSteps = 600;

bool on_edge(double x, double edge) {
    if (!std::isfinite(edge)) {
        return false;
    }
    return std::fabs(x - edge) <= 4.0 * std::numeric_limits<double>::epsilon() * detail::relative_scale(edge);
}

struct TiltSearch {
    double theta = 0.0;
    bool bracketed = false;
};

// Solves Lambda'(theta) = q on the monotone slope: bracket by doubling away
// from 0 (halving the remaining distance once a finite domain edge is near),
// then Newton steps safeguarded by bisection.
TiltSearch search_tilt(const CumulantFunction& cgf, double q, double tol) {
    const double accept = tol * detail::relative_scale(q);
    const Cumulants at0 = cgf.derivatives(0.0);
    double f0 = at0.slope - q;
    if (std::fabs(f0) <= accept) {
        return {0.0, true};
    }
    const double direction = f0 < 0.0 ? 1.0 : -1.0;
    const double limit = direction > 0.0 ? std::fmin(cgf.domain_upper(), cgf.probe_ceiling())
                                         : std::fmax(cgf.domain_lower(), -cgf.probe_ceiling());
    const bool open_edge = direction > 0.0 ? limit == cgf.domain_upper() : limit == cgf.domain_lower();

    double step = at0.curvature > 0.0 ? std::fabs(f0) / at0.curvature : 1.0;
    step = std::fmin(step, std::fabs(limit) * 0.5);
    double near = 0.0;  // f(near) has the sign of f0
    double far = direction * step;
    double f_far = 0.0;
    bool bracketed = false;
    for (int i = 0; i < kMaxBracketSteps; ++i) {
        f_far = cgf.derivatives(far).slope - q;
        if (std::fabs(f_far) <= accept) {
            return {far, true};
        }
        if ((f_far > 0.0) == (direction > 0.0)) {
            bracketed = true;
            break;
        }
        near = far;
        double next = 2.0 * far;
        if (std::fabs(next) >= std::fabs(limit)) {
            if (!open_edge) {
                // Probe ceiling reached: one last evaluation on it.
                if (far == limit) {
                    break;
                }
                next = limit;
            } else {
                next = 0.5 * (far + limit);
                if (next == far) {
                    break;
                }
            }
        }
        far = next;
    }
    if (!bracketed) {
        return {far, false};
    }

    double lo = direction > 0.0 ? near : far;
    double hi = direction > 0.0 ? far : near;
    double best = far;
    double best_abs = std::fabs(f_far);
    double theta = 0.5 * (lo + hi);
    for (int i = 0; i < kMaxRefineSteps; ++i) {
        const Cumulants c = cgf.derivatives(theta);
        const double f = c.slope - q;
        if (std::fabs(f) < best_abs) {
            best = theta;
            best_abs = std::fabs(f);
        }
        if (std::fabs(f) <= accept) {
            break;
        }
        if (f < 0.0) {
            lo = theta;
        } else {
            hi = theta;
        }
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::fmax(std::fabs(lo), std::fabs(hi))) {
            break;
        }
        double next = c.curvature > 0.0 ? theta - f / c.curvature : lo - 1.0;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        theta = next;
    }
    return {best, true};
}

}  // namespace

std::string to_string(BoundaryFlag flag) {
    switch (flag) {
        case BoundaryFlag::interior: return "interior";
        case BoundaryFlag::at_domain_boundary: return "at-domain-boundary";
        case BoundaryFlag::infeasible: return "infeasible";
    }
    return "unknown";
}

LegendreResult legendre_transform(const CumulantFunction& cgf, double x, double tol) {
    if (!(tol > 0.0)) {
        throw ArgumentError("legendre tolerance must be positive");
    }
    const SupportEdge lower = cgf.support_lower();
    const SupportEdge upper = cgf.support_upper();
    if (lower.value == upper.value) {
        if (on_edge(x, lower.value)) {
            return {0.0, 0.0, BoundaryFlag::interior};
        }
        return {kInf, std::nullopt, BoundaryFlag::infeasible};
    }
    if (x > upper.value || x < lower.value) {
        if (!on_edge(x, upper.value) && !on_edge(x, lower.value)) {
            return {kInf, std::nullopt, BoundaryFlag::infeasible};
        }
    }
    // Sup approached as theta -> +-inf: the limit is -log P(X = edge).
    for (const SupportEdge& edge : {upper, lower}) {
        if (on_edge(x, edge.value)) {
            const double value = edge.mass > 0.0 ? -std::log(edge.mass) : kInf;
            return {std::fmax(0.0, value), std::nullopt,
                    edge.mass > 0.0 ? BoundaryFlag::at_domain_boundary : BoundaryFlag::infeasible};
        }
    }
    const TiltSearch search = search_tilt(cgf, x, tol);
    const double value = search.theta * x - cgf(search.theta);
    if (!search.bracketed) {
        return {std::fmax(0.0, value), std::nullopt, BoundaryFlag::at_domain_boundary};
    }
    return {std::fmax(0.0, value), search.theta, BoundaryFlag::interior};
}

double tilt_solve(const CumulantFunction& cgf, double q, double tol) {
    if (!(tol > 0.0)) {
        throw ArgumentError("tilt tolerance must be positive");
    }
    const SupportEdge lower = cgf.support_lower();
    const SupportEdge upper = cgf.support_upper();
    if (q >= upper.value || on_edge(q, upper.value)) {
        throw NoTiltError(TiltSide::above_supremum, q, upper.value);
    }
    if (q <= lower.value || on_edge(q, lower.value)) {
        throw NoTiltError(TiltSide::below_infimum, q, lower.value);
    }
    const TiltSearch search = search_tilt(cgf, q, tol);
    if (!search.bracketed) {
        const double edge = cgf.derivatives(search.theta).slope;
        throw NoTiltError(q > cgf.mean() ? TiltSide::above_supremum : TiltSide::below_infimum, q, edge);
    }
    return search.theta;
}

double perspective(const CumulantFunction& cgf, double increment, double weight, double tol) {
    if (weight < 0.0) {
        throw ArgumentError("perspective weight must be nonnegative");
    }
    if (weight > 0.0) {
        return weight * legendre_transform(cgf, increment / weight, tol).value;
    }
    if (increment == 0.0) {
        return 0.0;
    }
    if (increment > 0.0) {
        return increment * cgf.domain_upper();
    }
    return -increment * -cgf.domain_lower();
}

}  // namespace lossdev
