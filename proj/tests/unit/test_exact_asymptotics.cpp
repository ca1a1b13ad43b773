#include "lossdev/errors.hpp"
#include "lossdev/exact_asymptotics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace lossdev;

namespace {

const LossAmountModel kUnit = LossAmountModel::constant(1.0);
const std::vector<int> kNs{100, 200, 400, 800};

}  // namespace

TEST_CASE("Bernoulli barrier fixture") {
    const DefaultTimeModel tau({0.4, 0.3});
    const auto est = barrier_asymptotics(kUnit, tau, Barrier::constant(0.8, 2), kNs);
    CHECK(est.t_star == 2);
    CHECK(est.s_star == 0);
    CHECK(est.decay == doctest::Approx(0.025732092477985222).epsilon(1e-11));
    CHECK(est.tilt == doctest::Approx(std::log(12.0 / 7.0)).epsilon(1e-10));
    CHECK(est.prefactor == doctest::Approx(2.3936536824085961).epsilon(1e-9));
    REQUIRE(est.lattice);
    CHECK(est.lattice->span == doctest::Approx(1.0));
    REQUIRE(est.estimates.size() == 4);
    CHECK(est.estimates[0].probability ==
          doctest::Approx(2.3936536824085961 * std::exp(-100 * 0.025732092477985222) / 10.0).epsilon(1e-9));
    CHECK(est.diagnostics.uniqueness_gap == doctest::Approx(0.33479528671433431 - 0.025732092477985222));
    CHECK(est.diagnostics.all_passed());
    // 0.8 is not an atom of U*Z(2); only the level warning is expected.
    REQUIRE(est.diagnostics.warnings.size() == 1);
    CHECK(est.diagnostics.warnings[0].find("not a lattice point") != std::string::npos);
    for (const auto& e : est.estimates) {
        CHECK_FALSE(e.lattice_mismatch);
    }
    CHECK(hypothesis_report(est).find("overall: PASS") != std::string::npos);
}

TEST_CASE("Bernoulli increment fixture") {
    const DefaultTimeModel tau({0.4, 0.3});
    const IncrementBarrier ib({{1, 2, 0.5}});
    const auto est = increment_asymptotics(kUnit, tau, ib, kNs);
    CHECK(est.s_star == 1);
    CHECK(est.t_star == 2);
    CHECK(est.decay == doctest::Approx(0.087176693572388876).epsilon(1e-11));
    CHECK(est.tilt == doctest::Approx(0.84729786038720361).epsilon(1e-10));
    CHECK(est.prefactor == doctest::Approx(1.3962979814050144).epsilon(1e-9));
}

TEST_CASE("non-lattice constant") {
    const auto u = LossAmountModel::exponential(1.0);
    const auto br = bahadur_rao_constant(u, 2.0, std::nullopt);
    CHECK(br.tilt == doctest::Approx(0.5));
    CHECK(br.curvature == doctest::Approx(4.0));
    CHECK(br.constant == doctest::Approx(1.0 / (0.5 * std::sqrt(2.0 * std::numbers::pi * 4.0))));
    CHECK_THROWS_AS(bahadur_rao_constant(u, 0.5, std::nullopt), ArgumentError);
}

TEST_CASE("lattice constant reduces to the non-lattice one as the span shrinks") {
    const auto u = LossAmountModel::exponential(1.0);
    const auto fine = bahadur_rao_constant(u, 2.0, LatticeInfo{1e-7, 0.0});
    const auto cont = bahadur_rao_constant(u, 2.0, std::nullopt);
    CHECK(fine.constant == doctest::Approx(cont.constant).epsilon(1e-6));
}

TEST_CASE("level at or below the mean path is not rare") {
    const DefaultTimeModel tau({0.4, 0.3});
    try {
        barrier_asymptotics(kUnit, tau, Barrier({0.3, 0.8}), kNs);
        FAIL("expected NotRareEventError");
    } catch (const NotRareEventError& e) {
        CHECK(e.epoch() == 1);
        CHECK(std::string(e.what()).find("t=1") != std::string::npos);
    }
    CHECK_THROWS_AS(barrier_asymptotics(kUnit, tau, Barrier({0.4, 0.8}), kNs), NotRareEventError);
}

TEST_CASE("tied epochs are rejected") {
    const DefaultTimeModel tau({0.5, 0.0});
    try {
        barrier_asymptotics(kUnit, tau, Barrier::constant(0.8, 2), kNs);
        FAIL("expected NonUniqueOptimumError");
    } catch (const NonUniqueOptimumError& e) {
        REQUIRE(e.tied().size() == 2);
        CHECK(e.tied()[0].t == 1);
        CHECK(e.tied()[1].t == 2);
    }
}

TEST_CASE("unreachable levels everywhere") {
    const DefaultTimeModel tau({0.4, 0.3});
    CHECK_THROWS_AS(barrier_asymptotics(kUnit, tau, Barrier::constant(1.5, 2), kNs), PreconditionError);
}

TEST_CASE("check horizon validation") {
    const DefaultTimeModel tau({0.4, 0.3});
    AsymptoticOptions opt;
    opt.t_check = 5;
    CHECK_THROWS_AS(barrier_asymptotics(kUnit, tau, Barrier::constant(0.8, 2), kNs, opt), ArgumentError);
    opt.t_check = 1;
    CHECK_THROWS_AS(barrier_asymptotics(kUnit, tau, Barrier::constant(0.8, 2), kNs, opt), ArgumentError);
    const std::vector<int> bad{0};
    CHECK_THROWS_AS(barrier_asymptotics(kUnit, tau, Barrier::constant(0.8, 2), bad), ArgumentError);
}

TEST_CASE("tail growth declarations") {
    const auto u = LossAmountModel::poisson_type(1.0, 1.0);
    const DefaultTimeModel tau({0.5, 0.5});
    AsymptoticOptions opt;
    opt.t_check = 30;
    const auto good = barrier_asymptotics(u, tau, Barrier({2.6, 2.8}, GrowthDeclaration{2.0, GrowthKind::log}), kNs, opt);
    REQUIRE(good.diagnostics.tails.size() == 1);
    const auto& tc = good.diagnostics.tails.front();
    CHECK(tc.declared);
    CHECK(tc.passed);
    REQUIRE(tc.slope);
    CHECK(*tc.slope > 0.0);
    CHECK(good.diagnostics.rates.size() == 30);

    opt.t_check = 10;
    const auto slow =
        barrier_asymptotics(u, tau, Barrier({2.6, 2.8}, GrowthDeclaration{25.0, GrowthKind::loglog}), kNs, opt);
    CHECK_FALSE(slow.diagnostics.tail_passed);
    CHECK_FALSE(slow.diagnostics.all_passed());
    CHECK(hypothesis_report(slow).find("overall: FAIL") != std::string::npos);
}

TEST_CASE("off-lattice level is flagged") {
    const DefaultTimeModel tau({0.4, 0.3});
    const auto est = barrier_asymptotics(kUnit, tau, Barrier({0.9, 0.85}), kNs);
    CHECK(est.t_star == 2);
    CHECK_FALSE(est.diagnostics.warnings.empty());
}

TEST_CASE("per-n lattice mismatch is reported") {
    const DefaultTimeModel tau({0.4, 0.3});
    const std::vector<int> ns{100, 101};
    const auto est = barrier_asymptotics(LossAmountModel::constant(0.5), tau, Barrier::constant(0.4, 2), ns);
    CHECK_FALSE(est.estimates[0].lattice_mismatch);
    CHECK(est.estimates[1].lattice_mismatch);
}
