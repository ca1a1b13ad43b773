#include "lossdev/distributions.hpp"
#include "lossdev/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace lossdev;

namespace {

std::vector<LossAmountModel> families() {
    const std::vector<double> samples{0.2, 0.5, 0.5, 1.1};
    return {LossAmountModel::discrete({{0.5, 0.3}, {1.0, 0.5}, {2.0, 0.2}}), LossAmountModel::poisson_type(0.5, 1.3),
            LossAmountModel::exponential(2.0), LossAmountModel::bounded_empirical(samples)};
}

}  // namespace

TEST_CASE("discrete cgf matches log-sum-exp") {
    const auto u = LossAmountModel::discrete({{1.0, 0.25}, {3.0, 0.75}});
    for (double th : {-2.0, -0.3, 0.0, 0.7, 4.0}) {
        const double expected = std::log(0.25 * std::exp(th) + 0.75 * std::exp(3.0 * th));
        CHECK(u(th) == doctest::Approx(expected).epsilon(1e-14));
    }
    CHECK(u.mean() == doctest::Approx(2.5));
    CHECK(u.variance() == doctest::Approx(0.75));
}

TEST_CASE("poisson-type cgf is theta*u + lambda*(e^{theta u} - 1)") {
    const auto u = LossAmountModel::poisson_type(2.0, 0.7);
    for (double th : {-1.0, 0.0, 0.4, 2.5}) {
        CHECK(u(th) == doctest::Approx(2.0 * th + 0.7 * std::expm1(2.0 * th)).epsilon(1e-14));
    }
    CHECK(u.mean() == doctest::Approx(3.4));
    REQUIRE(u.lattice());
    CHECK(u.lattice()->span == doctest::Approx(2.0));
    CHECK(u.support_lower().value == doctest::Approx(2.0));
    CHECK(u.support_lower().mass == doctest::Approx(std::exp(-0.7)));
    CHECK(std::isinf(u.support_upper().value));
}

TEST_CASE("exponential cgf is parameterized by rate") {
    const auto u = LossAmountModel::exponential(4.0);
    CHECK(u(1.0) == doctest::Approx(-std::log(0.75)));
    CHECK(u.mean() == doctest::Approx(0.25));
    CHECK(u.domain_upper() == 4.0);
    CHECK(std::isinf(u(4.0)));
    CHECK(std::isinf(u(5.0)));
    CHECK_THROWS_AS(u.derivatives(4.0), DomainError);
    CHECK_FALSE(u.lattice());
}

TEST_CASE("bounded-empirical equals discrete with equal weights") {
    const std::vector<double> samples{1.0, 2.0, 2.0, 4.0};
    const auto e = LossAmountModel::bounded_empirical(samples);
    const auto d = LossAmountModel::discrete({{1.0, 0.25}, {2.0, 0.5}, {4.0, 0.25}});
    for (double th : {-1.0, 0.0, 0.5, 1.5}) {
        CHECK(e(th) == doctest::Approx(d(th)).epsilon(1e-14));
    }
}

TEST_CASE("derivatives agree with finite differences for every family") {
    for (const auto& u : families()) {
        CAPTURE(to_string(u.family()));
        for (double th : {-0.8, 0.0, 0.6}) {
            const double h = 1e-5;
            const Cumulants c = u.derivatives(th);
            CHECK(c.value == doctest::Approx(u(th)).epsilon(1e-12));
            CHECK(c.slope == doctest::Approx((u(th + h) - u(th - h)) / (2 * h)).epsilon(1e-6));
            const double fd2 = (u.derivatives(th + h).slope - u.derivatives(th - h).slope) / (2 * h);
            CHECK(c.curvature == doctest::Approx(fd2).epsilon(1e-5));
            CHECK(c.curvature >= 0.0);
        }
        CHECK(u(0.0) == doctest::Approx(0.0).scale(1.0));
        CHECK(u.derivatives(0.0).slope == doctest::Approx(u.mean()));
    }
}

TEST_CASE("invalid loss models are rejected") {
    CHECK_THROWS_AS(LossAmountModel::discrete({}), ArgumentError);
    CHECK_THROWS_AS(LossAmountModel::discrete({{1.0, 0.5}}), ArgumentError);
    CHECK_THROWS_AS(LossAmountModel::discrete({{-1.0, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(LossAmountModel::poisson_type(0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(LossAmountModel::poisson_type(1.0, -1.0), ArgumentError);
    CHECK_THROWS_AS(LossAmountModel::exponential(0.0), ArgumentError);
}

TEST_CASE("lattice detection") {
    const std::vector<double> a{0.5, 1.5, 3.0};
    const auto la = detect_lattice(a);
    REQUIRE(la);
    CHECK(la->span == doctest::Approx(0.5));
    CHECK(la->offset == doctest::Approx(0.5));
    CHECK(la->contains(2.5));
    CHECK_FALSE(la->contains(2.25));

    const std::vector<double> one{2.0, 2.0};
    CHECK_FALSE(detect_lattice(one));

    // Any two points form a lattice; three with an irrational ratio do not.
    const std::vector<double> irrational{0.0, 1.0, std::sqrt(2.0)};
    CHECK_FALSE(detect_lattice(irrational));
}

TEST_CASE("default-time model") {
    const DefaultTimeModel tau({0.4, 0.3});
    CHECK(tau.grid_size() == 2);
    CHECK(tau.cumulative(0) == 0.0);
    CHECK(tau.cumulative(1) == doctest::Approx(0.4));
    CHECK(tau.cumulative(2) == doctest::Approx(0.7));
    CHECK(tau.cumulative(9) == doctest::Approx(0.7));
    CHECK(tau.defect() == doctest::Approx(0.3));
    CHECK(tau.is_defective());
    CHECK(tau.hazard(2) == doctest::Approx(0.5));
    CHECK(tau.probability(3) == 0.0);

    CHECK_FALSE(DefaultTimeModel({0.5, 0.5}).is_defective());
    CHECK_THROWS_AS(DefaultTimeModel({0.7, 0.4}), ArgumentError);
    CHECK_THROWS_AS(DefaultTimeModel({-0.1, 0.4}), ArgumentError);
    CHECK_THROWS_AS(DefaultTimeModel({}), ArgumentError);
}

TEST_CASE("composite cgf log(w M + 1 - w)") {
    const auto u = LossAmountModel::discrete({{1.0, 0.5}, {2.0, 0.5}});
    const DefaultTimeModel tau({0.2, 0.3, 0.5});
    const auto c = CompositeCgf::at_time(u, tau, 2);
    CHECK(c.success_mass() == doctest::Approx(0.5));
    for (double th : {-1.0, 0.3, 2.0}) {
        CHECK(c(th) == doctest::Approx(std::log(0.5 * std::exp(u(th)) + 0.5)).epsilon(1e-14));
    }
    const auto inc = CompositeCgf::increment(u, tau, 1, 3);
    CHECK(inc.success_mass() == doctest::Approx(0.8));
    CHECK(inc.mean() == doctest::Approx(0.8 * 1.5));

    const auto full = CompositeCgf::at_time(u, tau, 3);
    for (double th : {-1.0, 0.3, 2.0}) {
        CHECK(full(th) == doctest::Approx(u(th)).epsilon(1e-13));
    }

    CHECK_THROWS_AS(CompositeCgf::at_time(u, tau, 4), ArgumentError);
    CHECK_THROWS_AS(CompositeCgf::increment(u, tau, 2, 2), ArgumentError);

    // {0} joins the support, so the lattice of UZ includes 0.
    REQUIRE(c.lattice());
    CHECK(c.lattice()->span == doctest::Approx(1.0));
    CHECK(c.support_lower().value == 0.0);
    CHECK(c.support_lower().mass == doctest::Approx(0.5));
    CHECK(c.support_upper().value == doctest::Approx(2.0));
    CHECK(c.support_upper().mass == doctest::Approx(0.25));
}

TEST_CASE("composite derivatives follow the logistic weights") {
    const auto u = LossAmountModel::exponential(3.0);
    const auto c = CompositeCgf::with_mass(u, 0.3);
    for (double th : {-2.0, 0.5, 2.5}) {
        const double h = 1e-5;
        const Cumulants d = c.derivatives(th);
        CHECK(d.slope == doctest::Approx((c(th + h) - c(th - h)) / (2 * h)).epsilon(1e-6));
        CHECK(d.curvature == doctest::Approx((c.derivatives(th + h).slope - c.derivatives(th - h).slope) / (2 * h))
                                 .epsilon(1e-5));
    }
    const double th = 1.0;
    const double m = std::exp(u(th));
    CHECK(c.tilted_success_mass(th) == doctest::Approx(0.3 * m / (0.3 * m + 0.7)));
}

TEST_CASE("light-tail classification") {
    const std::vector<double> probes{0.5, 1.0, 2.0, 4.0};
    const auto p = check_light_tail(LossAmountModel::poisson_type(1.0, 1.0), probes);
    CHECK(p.classification == TailClass::everywhere_finite);
    CHECK(p.ratio_increasing);
    CHECK(p.ratio_diverging);

    const auto e = check_light_tail(LossAmountModel::exponential(2.0), probes);
    CHECK(e.classification == TailClass::finite_up_to_threshold);
    CHECK(e.threshold == 2.0);
    CHECK(e.ratio_increasing);
    CHECK_FALSE(e.ratio_diverging);
    for (double r : e.rate_ratios) {
        CHECK(r < 2.0);
    }
}
