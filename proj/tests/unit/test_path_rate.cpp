#include "lossdev/errors.hpp"
#include "lossdev/legendre.hpp"
#include "lossdev/path_rate.hpp"
#include "support/simplex_grid.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lossdev;

TEST_CASE("mean path has rate zero") {
    const DefaultTimeModel tau({0.1, 0.2, 0.3, 0.4});
    const std::vector<double> samples{0.2, 0.7, 1.0};
    for (const auto& u : {LossAmountModel::discrete({{0.5, 0.5}, {1.5, 0.5}}), LossAmountModel::poisson_type(1.0, 0.5),
                          LossAmountModel::exponential(1.5), LossAmountModel::bounded_empirical(samples)}) {
        const auto r = path_rate(LossPath::mean_path(u, tau), u, tau);
        CHECK(std::fabs(r.rate) <= 1e-8);
        for (int i = 0; i < 4; ++i) {
            CHECK(r.argmin.weights[static_cast<std::size_t>(i)] == doctest::Approx(tau.probability(i + 1)).epsilon(1e-6));
        }
    }
}

TEST_CASE("single epoch reduces to the Cramer rate") {
    const DefaultTimeModel tau({1.0});
    const auto u = LossAmountModel::poisson_type(1.0, 2.0);
    for (double x : {1.1, 2.0, 3.0, 6.5}) {
        CHECK(path_rate(LossPath({x}), u, tau).rate == doctest::Approx(legendre_transform(u, x).value).epsilon(1e-9));
    }
}

TEST_CASE("constant loss amount reduces to Sanov") {
    const auto u = LossAmountModel::constant(1.0);
    const DefaultTimeModel tau({0.5, 0.5});
    const double expected = 0.3 * std::log(0.3 / 0.5) + 0.7 * std::log(0.7 / 0.5);
    CHECK(path_rate(LossPath({0.3, 1.0}), u, tau).rate == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("defective default law needs augmentation") {
    const auto u = LossAmountModel::constant(1.0);
    const DefaultTimeModel tau({0.4, 0.3});
    CHECK_THROWS_AS(path_rate(LossPath({0.4, 0.8}), u, tau), PreconditionError);
    PathRateOptions opt;
    opt.augment_defective = true;
    const auto r = path_rate(LossPath({0.4, 0.8}), u, tau, opt);
    const double expected = 0.4 * std::log(0.4 / 0.3) + 0.2 * std::log(0.2 / 0.3);
    CHECK(r.augmented);
    CHECK(r.rate == doctest::Approx(expected).epsilon(1e-8));
    CHECK(r.argmin.never_weight == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("infeasible path has infinite rate and the prior as argmin") {
    const auto u = LossAmountModel::discrete({{1.0, 0.5}, {2.0, 0.5}});
    const DefaultTimeModel tau({0.5, 0.5});
    const auto r = path_rate(LossPath({2.5, 2.5}), u, tau);
    CHECK(std::isinf(r.rate));
    CHECK(r.argmin.weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("loss path validation") {
    CHECK_THROWS_AS(LossPath({0.5, 0.4}), ArgumentError);
    CHECK_THROWS_AS(LossPath({-0.1}), ArgumentError);
    CHECK_THROWS_AS(path_rate(LossPath({0.5}), LossAmountModel::constant(1.0), DefaultTimeModel({0.5, 0.5})),
                    ArgumentError);
}

TEST_CASE("path rate dominates every single-epoch rate") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    const auto u = LossAmountModel::discrete({{0.5, 0.4}, {1.0, 0.4}, {2.0, 0.2}});
    for (int rep = 0; rep < 15; ++rep) {
        std::vector<double> p{unif(rng), unif(rng), unif(rng)};
        const double s = p[0] + p[1] + p[2];
        for (double& v : p) {
            v /= s;
        }
        const DefaultTimeModel tau(p);
        std::vector<double> x{0.9 * unif(rng)};
        x.push_back(x.back() + 0.5 * unif(rng));
        x.push_back(x.back() + 0.4 * unif(rng));
        const double rate = path_rate(LossPath(x), u, tau).rate;
        for (int t = 1; t <= 3; ++t) {
            const auto c = CompositeCgf::at_time(u, tau, t);
            CHECK(rate >= legendre_transform(c, x[static_cast<std::size_t>(t - 1)]).value - 1e-8);
        }
    }
}

TEST_CASE("optimizer agrees with the simplex grid") {
    const auto u = LossAmountModel::discrete({{1.0, 0.6}, {3.0, 0.4}});
    const DefaultTimeModel tau({0.3, 0.7});
    const LossPath x({0.9, 1.6});
    const double grid = testing::grid_path_rate(x, u, tau, 200);
    const double solved = path_rate(x, u, tau).rate;
    CHECK(solved <= grid + 1e-10);
    CHECK(std::fabs(solved - grid) <= 1e-4);
}

TEST_CASE("multiclass with one class equals the single-class rate") {
    const auto u = LossAmountModel::discrete({{1.0, 0.5}, {2.0, 0.5}});
    const DefaultTimeModel tau({0.3, 0.3, 0.4});
    const LossPath x({0.8, 1.2, 1.9});
    const double single = path_rate(x, u, tau).rate;
    const MultiClassSpec one({{1.0, u, tau}});
    CHECK(multiclass_rate(x, one).rate == doctest::Approx(single).epsilon(1e-8));
    const MultiClassSpec two({{0.5, u, tau}, {0.5, u, tau}});
    const auto r = multiclass_rate(x, two);
    CHECK(std::fabs(r.rate - single) <= 1e-6);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r.split[0][i] + r.split[1][i] == doctest::Approx(x.increment(static_cast<int>(i) + 1)));
    }
}

TEST_CASE("multiclass favors the riskier class") {
    const DefaultTimeModel tau({0.5, 0.5});
    const MultiClassSpec spec({{0.5, LossAmountModel::exponential(1.0), tau},
                               {0.5, LossAmountModel::exponential(4.0), tau}});
    const LossPath x({1.0, 1.5});
    const auto r = multiclass_rate(x, spec);
    CHECK(std::isfinite(r.rate));
    CHECK(r.rate > 0.0);
    CHECK(r.split[0][0] > r.split[1][0]);
}

TEST_CASE("multiclass spec validation") {
    const auto u = LossAmountModel::constant(1.0);
    CHECK_THROWS_AS(MultiClassSpec({{0.5, u, DefaultTimeModel({1.0})}}), ArgumentError);
    CHECK_THROWS_AS(MultiClassSpec({{0.5, u, DefaultTimeModel({1.0})}, {0.5, u, DefaultTimeModel({0.5, 0.5})}}),
                    ArgumentError);
    CHECK_THROWS_AS(MultiClassSpec({}), ArgumentError);
}

TEST_CASE("mixture decay takes the largest exponent") {
    const auto m = mixture_decay({{"calm", -0.4}, {"stress", -0.05}, {"crisis", -0.05}});
    CHECK(m.rate == -0.05);
    CHECK(m.label == "stress");
    CHECK_THROWS_AS(mixture_decay({}), ArgumentError);
}
