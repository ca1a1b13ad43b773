#pragma once

// Fenchel-Legendre transforms Lambda*(x) = sup_theta (theta*x - Lambda(theta))
// of one-dimensional CGFs, the tilt solving Lambda'(sigma) = q, and the
// perspective phi*Lambda*(delta/phi) used by the path rate function.

#include "lossdev/distributions.hpp"

#include <optional>

namespace lossdev {

inline constexpr double kDefaultTiltTol = 1e-10;

enum class BoundaryFlag { interior, at_domain_boundary, infeasible };

std::string to_string(BoundaryFlag flag);

struct LegendreResult {
    double value = 0.0;            // >= 0, possibly +inf
    std::optional<double> argmax;  // maximizing theta when attained
    BoundaryFlag boundary = BoundaryFlag::interior;
};

// Lambda*(x). Levels outside the support give +inf (infeasible); a level on a
// support edge carrying an atom of mass m gives -log(m) without an argmax.
LegendreResult legendre_transform(const CumulantFunction& cgf, double x, double tol = kDefaultTiltTol);

// sigma with |Lambda'(sigma) - q| <= tol*max(1,|q|). Throws NoTiltError when q
// is on or beyond an edge of the support.
double tilt_solve(const CumulantFunction& cgf, double q, double tol = kDefaultTiltTol);

// Closed perspective weight*Lambda*(increment/weight); at weight 0 this is 0
// for a zero increment and increment*sup(domain) otherwise.
double perspective(const CumulantFunction& cgf, double increment, double weight, double tol = kDefaultTiltTol);

}  // namespace lossdev
