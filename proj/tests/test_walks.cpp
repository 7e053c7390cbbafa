#include <doctest.h>

#include <cmath>

#include "latmix/errors.hpp"
#include "latmix/walks.hpp"

using namespace latmix;

TEST_SUITE_BEGIN("walks");

TEST_CASE("step distribution validation") {
    CHECK_NOTHROW(StepDistribution::lazy_1d().validate());
    StepDistribution bad{{{LatticeVector{1}, 0.6}, {LatticeVector{-1}, 0.6}}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    StepDistribution neg{{{LatticeVector{1}, 1.5}, {LatticeVector{-1}, -0.5}}};
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("step moments") {
    auto lazy = StepDistribution::lazy_1d();
    CHECK(lazy.mean()[0] == doctest::Approx(0.0));
    CHECK(lazy.covariance()[0] == doctest::Approx(0.5));
    auto simple = StepDistribution::simple_1d();
    CHECK(simple.covariance()[0] == doctest::Approx(1.0));
    auto drifted = StepDistribution::drifted_lazy_1d();
    CHECK(drifted.mean()[0] == doctest::Approx(1.0));
    CHECK(drifted.covariance()[0] == doctest::Approx(0.5));
}

TEST_CASE("exact pmf hand cases") {
    auto simple = StepDistribution::simple_1d();
    auto p2 = exact_pmf(simple, 2);
    // 4 equally likely paths, 2 return to the origin
    CHECK(p2.size() == 3);
    CHECK(p2[LatticeVector{-2}] == doctest::Approx(0.25));
    CHECK(p2[LatticeVector{0}] == doctest::Approx(0.5));
    CHECK(p2[LatticeVector{2}] == doctest::Approx(0.25));

    auto lazy1 = exact_pmf(StepDistribution::lazy_1d(), 1);
    CHECK(lazy1[LatticeVector{0}] == doctest::Approx(0.5));
    CHECK(lazy1[LatticeVector{1}] == doctest::Approx(0.25));

    auto p0 = exact_pmf(simple, 0);
    CHECK(p0.size() == 1);
    CHECK(p0[LatticeVector{0}] == doctest::Approx(1.0));
}

TEST_CASE("exact pmf mass and support growth") {
    auto lazy = StepDistribution::lazy_1d();
    auto p = exact_pmf(lazy, 64);
    long double mass = 0;
    for (auto& [z, m] : p) mass += m;
    CHECK(std::fabs(static_cast<double>(mass) - 1.0) < 1e-12);
    // support is the 64-fold Minkowski sum of {-1,0,1}
    CHECK(p.size() == 129);
    CHECK(p.begin()->first == LatticeVector{-64});
    CHECK(p.rbegin()->first == LatticeVector{64});

    CHECK_THROWS_AS(exact_pmf(lazy, 129), std::invalid_argument);
}

TEST_CASE("2d nearest neighbour return probability") {
    // 16 two-step paths, 4 return to the origin
    auto p = exact_pmf(StepDistribution::nearest_neighbour_2d(), 2);
    CHECK(p[LatticeVector{0, 0}] == doctest::Approx(0.25));
}

TEST_CASE("walk system determinism and exact step law") {
    WalkSystem w(StepDistribution::lazy_1d());
    RngStream r1 = RngStream::fork(5, 0);
    RngStream r2 = RngStream::fork(5, 0);
    auto y1 = w.sample_invariant(r1);
    auto y2 = w.sample_invariant(r2);
    for (int i = 0; i < 50; ++i) {
        auto s1 = w.step(y1);
        auto s2 = w.step(y2);
        CHECK(s1.displacement == s2.displacement);
        y1 = s1.next;
        y2 = s2.next;
    }
}

TEST_CASE("one-step empirical law matches the distribution") {
    WalkSystem w(StepDistribution::lazy_1d());
    RngStream rng = RngStream::fork(11, 0);
    const int n = 1000000;
    std::int64_t counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
        auto y = w.sample_invariant(rng);
        auto s = w.step(y);
        counts[s.displacement[0] + 1]++;
    }
    // 4 sigma bands around 1/4, 1/2, 1/4
    double se25 = std::sqrt(0.25 * 0.75 / n), se50 = std::sqrt(0.25 / n);
    CHECK(std::fabs(counts[0] / double(n) - 0.25) < 4 * se25);
    CHECK(std::fabs(counts[1] / double(n) - 0.50) < 4 * se50);
    CHECK(std::fabs(counts[2] / double(n) - 0.25) < 4 * se25);
}

TEST_CASE("base metric separates different streams") {
    WalkSystem w(StepDistribution::simple_1d());
    WalkSystem::Base a{123, 0}, b{123, 0}, c{456, 0};
    CHECK(w.base_metric(a, b) == doctest::Approx(0.0));
    CHECK(w.base_metric(a, c) > 0);
}

TEST_SUITE_END();
