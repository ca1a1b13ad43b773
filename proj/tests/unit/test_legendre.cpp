#include "lossdev/errors.hpp"
#include "lossdev/legendre.hpp"

#include <doctest.h>

#include <cmath>

using namespace lossdev;

namespace {

const LossAmountModel kUnit = LossAmountModel::constant(1.0);

double kl(double q, double p) { return q * std::log(q / p) + (1 - q) * std::log((1 - q) / (1 - p)); }

}  // namespace

TEST_CASE("Bernoulli composite transforms are Kullback-Leibler divergences") {
    const DefaultTimeModel tau({0.4, 0.3});
    const auto c2 = CompositeCgf::at_time(kUnit, tau, 2);
    const auto c1 = CompositeCgf::at_time(kUnit, tau, 1);
    // Reference values computed independently at 30 significant digits.
    CHECK(legendre_transform(c2, 0.8).value == doctest::Approx(0.025732092477985222).epsilon(1e-11));
    CHECK(legendre_transform(c1, 0.8).value == doctest::Approx(0.33479528671433431).epsilon(1e-11));
    for (double q : {0.05, 0.3, 0.55, 0.95}) {
        CHECK(legendre_transform(c2, q).value == doctest::Approx(kl(q, 0.7)).epsilon(1e-10));
    }
    CHECK(tilt_solve(c2, 0.8, 1e-14) == doctest::Approx(0.53899650073268701).epsilon(1e-10));
}

TEST_CASE("poisson-type closed form") {
    const auto u = LossAmountModel::poisson_type(1.0, 1.0);
    for (double x : {1.5, 2.0, 3.0, 5.0}) {
        const double y = x - 1.0;
        CHECK(legendre_transform(u, x).value == doctest::Approx(y * std::log(y) - y + 1.0).epsilon(1e-10));
    }
    const auto v = LossAmountModel::poisson_type(2.0, 0.5);
    const double y = 6.0 / 2.0 - 1.0;
    CHECK(legendre_transform(v, 6.0).value == doctest::Approx(y * std::log(y / 0.5) - y + 0.5).epsilon(1e-10));
}

TEST_CASE("exponential closed form rate*x - 1 - log(rate*x)") {
    const auto u = LossAmountModel::exponential(2.0);
    for (double x : {0.1, 0.5, 1.0, 7.0}) {
        CHECK(legendre_transform(u, x).value == doctest::Approx(2.0 * x - 1.0 - std::log(2.0 * x)).epsilon(1e-10));
    }
    CHECK(std::isinf(legendre_transform(u, 0.0).value));
    CHECK(legendre_transform(u, -1.0).boundary == BoundaryFlag::infeasible);
}

TEST_CASE("zero at the mean") {
    const std::vector<double> samples{0.3, 0.9, 1.4};
    for (const auto& u : {LossAmountModel::discrete({{0.5, 0.3}, {2.0, 0.7}}), LossAmountModel::poisson_type(1.5, 2.0),
                          LossAmountModel::exponential(0.7), LossAmountModel::bounded_empirical(samples)}) {
        const auto r = legendre_transform(u, u.mean());
        CHECK(std::fabs(r.value) <= 1e-10);
        REQUIRE(r.argmax);
        CHECK(std::fabs(*r.argmax) <= 1e-8);
    }
}

TEST_CASE("support edges and outside the support") {
    const auto u = LossAmountModel::discrete({{1.0, 0.25}, {3.0, 0.75}});
    const auto top = legendre_transform(u, 3.0);
    CHECK(top.value == doctest::Approx(-std::log(0.75)));
    CHECK_FALSE(top.argmax);
    CHECK(top.boundary == BoundaryFlag::at_domain_boundary);
    CHECK(legendre_transform(u, 1.0).value == doctest::Approx(-std::log(0.25)));
    CHECK(std::isinf(legendre_transform(u, 3.5).value));
    CHECK(legendre_transform(u, 0.5).boundary == BoundaryFlag::infeasible);

    CHECK_THROWS_AS(tilt_solve(u, 3.0), NoTiltError);
    try {
        tilt_solve(u, 0.5);
        FAIL("expected NoTiltError");
    } catch (const NoTiltError& e) {
        CHECK(e.side() == TiltSide::below_infimum);
        CHECK(e.edge() == 1.0);
    }
}

TEST_CASE("tilt solves the slope equation") {
    const auto u = LossAmountModel::poisson_type(1.0, 2.0);
    for (double q : {1.2, 3.0, 9.0, 40.0}) {
        const double s = tilt_solve(u, q, 1e-12);
        CHECK(std::fabs(u.derivatives(s).slope - q) <= 1e-12 * std::fmax(1.0, q));
    }
}

TEST_CASE("legendre transform is convex in x") {
    const auto u = LossAmountModel::discrete({{0.0, 0.2}, {1.0, 0.5}, {4.0, 0.3}});
    double prev_value = legendre_transform(u, 0.05).value;
    double prev_slope = -kInf;
    for (double x = 0.15; x < 3.95; x += 0.1) {
        const double v = legendre_transform(u, x).value;
        const double slope = (v - prev_value) / 0.1;
        CHECK(slope >= prev_slope - 1e-9);
        prev_slope = slope;
        prev_value = v;
    }
}

TEST_CASE("perspective and its closure at weight zero") {
    const auto d = LossAmountModel::discrete({{1.0, 0.5}, {2.0, 0.5}});
    CHECK(perspective(d, 0.6, 0.4) == doctest::Approx(0.4 * legendre_transform(d, 1.5).value));
    CHECK(perspective(d, 0.0, 0.0) == 0.0);
    CHECK(std::isinf(perspective(d, 0.2, 0.0)));
    const auto e = LossAmountModel::exponential(3.0);
    CHECK(perspective(e, 0.2, 0.0) == doctest::Approx(0.6));
    // The closure is the limit of weight*Lambda*(x/weight) as weight -> 0.
    CHECK(perspective(e, 0.2, 1e-9) == doctest::Approx(0.6).epsilon(1e-6));
}
