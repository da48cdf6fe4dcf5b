#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gearsync/metrics.hpp"

using namespace gearsync;

namespace {

std::vector<double> samples(double horizon, double dt, double (*f)(double)) {
    const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) e[k] = f(static_cast<double>(k) * dt);
    return e;
}

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.5);
    std::vector<double> e(n);
    for (auto& v : e) v = g(rng);
    return e;
}

}  // namespace

TEST(Metrics, ConstantErrorClosedForms) {
    const auto e = samples(5.0, 0.001, [](double) { return 2.0; });
    EXPECT_NEAR(iae(e, 0.001), 10.0, 0.01);
    EXPECT_NEAR(itae(e, 0.001), 25.0, 0.05);
}

TEST(Metrics, SignDoesNotMatter) {
    const auto e = samples(5.0, 0.001, [](double) { return -2.0; });
    EXPECT_NEAR(iae(e, 0.001), 10.0, 0.01);
}

TEST(Metrics, RampIntegral) {
    const auto e = samples(1.0, 1e-4, [](double t) { return t; });
    EXPECT_NEAR(iae(e, 1e-4), 0.5, 1e-4);
}

TEST(Metrics, StepThenZero) {
    const auto e = samples(3.0, 1e-3, [](double t) { return t < 1.0 ? 1.0 : 0.0; });
    EXPECT_NEAR(itae(e, 1e-3), 0.5, 1e-3);
    EXPECT_NEAR(iae(e, 1e-3), 1.0, 1e-3);
}

TEST(Metrics, ZeroErrorGivesZero) {
    const std::vector<double> e(1000, 0.0);
    EXPECT_EQ(iae(e, 0.01), 0.0);
    EXPECT_EQ(itae(e, 0.01), 0.0);
}

TEST(Metrics, FirstSampleCarriesNoTimeWeight) {
    const std::vector<double> e{3.0};
    EXPECT_EQ(itae(e, 0.1), 0.0);
    EXPECT_NEAR(iae(e, 0.1), 0.3, 1e-15);
}

TEST(Metrics, EmptySequenceAndBadStep) {
    const std::vector<double> empty;
    try {
        iae(empty, 0.01);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::empty_sequence);
    }
    EXPECT_THROW(itae(empty, 0.01), Error);
    const std::vector<double> one{1.0};
    EXPECT_THROW(iae(one, 0.0), Error);
    EXPECT_THROW(itae(one, -1.0), Error);
}

TEST(Metrics, HomogeneityIsExactForPowersOfTwo) {
    std::mt19937_64 rng(5);
    for (int n = 0; n < 100; ++n) {
        const auto e = random_series(rng, 500);
        for (double lambda : {0.25, 2.0, 8.0, -4.0}) {
            std::vector<double> scaled(e);
            for (auto& v : scaled) v *= lambda;
            EXPECT_EQ(iae(scaled, 0.01), std::abs(lambda) * iae(e, 0.01));
            EXPECT_EQ(itae(scaled, 0.01), std::abs(lambda) * itae(e, 0.01));
        }
    }
}

TEST(Metrics, TimeWeightingIdentity) {
    // ITAE(e) equals IAE of the series t_k * e_k.
    std::mt19937_64 rng(6);
    for (int n = 0; n < 100; ++n) {
        const double dt = 0.01;
        const auto e = random_series(rng, 300);
        std::vector<double> weighted(e.size());
        for (std::size_t k = 0; k < e.size(); ++k) weighted[k] = static_cast<double>(k) * dt * e[k];
        EXPECT_EQ(itae(e, dt), iae(weighted, dt));
    }
}

TEST(Metrics, MonotoneInPointwiseMagnitude) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> grow(1.0, 2.0);
    for (int n = 0; n < 100; ++n) {
        const auto e = random_series(rng, 200);
        std::vector<double> bigger(e);
        for (auto& v : bigger) v *= grow(rng);
        EXPECT_GE(iae(bigger, 0.01), iae(e, 0.01));
        EXPECT_GE(itae(bigger, 0.01), itae(e, 0.01));
    }
}

TEST(Metrics, ReportCarriesHorizon) {
    const std::vector<double> e(10000, 1.0);
    const auto r = index_report(e, 0.01);
    EXPECT_NEAR(r.horizon, 100.0, 1e-12);
    EXPECT_EQ(r.dt, 0.01);
    EXPECT_EQ(r.iae, iae(e, 0.01));
}

TEST(Cost, WeightedSum) {
    const IndexReport r{1.2401, 5.6015, 100.0, 0.01};
    EXPECT_NEAR(cost(r), 6.8416, 1e-12);
    EXPECT_NEAR(cost(r, {2.0, 0.0}), 2.4802, 1e-12);
    EXPECT_EQ(cost({0.0, 0.0, 1.0, 0.01}), 0.0);
}

TEST(Cost, NonFiniteBecomesInfinity) {
    const IndexReport r{std::numeric_limits<double>::quiet_NaN(), 1.0, 1.0, 0.01};
    EXPECT_EQ(cost(r), kUnstableCost);
    EXPECT_TRUE(std::isinf(kUnstableCost));
}

TEST(Cost, WeightValidation) {
    EXPECT_NO_THROW((CostWeights{1.0, 0.0}.validate()));
    EXPECT_THROW((CostWeights{0.0, 0.0}.validate()), Error);
    EXPECT_THROW((CostWeights{-1.0, 1.0}.validate()), Error);
}
