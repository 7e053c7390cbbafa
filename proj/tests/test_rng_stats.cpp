#include <doctest.h>

#include <cmath>
#include <vector>

#include "latmix/rng.hpp"
#include "latmix/stats.hpp"

using namespace latmix;

TEST_SUITE_BEGIN("rng_stats");

TEST_CASE("forked streams are reproducible and distinct") {
    RngStream a = RngStream::fork(42, 7);
    RngStream b = RngStream::fork(42, 7);
    RngStream c = RngStream::fork(42, 8);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    bool differ = false;
    RngStream a2 = RngStream::fork(42, 7);
    for (int i = 0; i < 100; ++i) differ = differ || (a2.next_u64() != c.next_u64());
    CHECK(differ);
}

TEST_CASE("uniform01 stays in [0,1) and has the right mean") {
    RngStream r = RngStream::fork(1, 0);
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform01();
        REQUIRE(u >= 0);
        REQUIRE(u < 1);
        sum += u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 4 * 0.2887 / std::sqrt(n));
}

TEST_CASE("normal moments") {
    RngStream r = RngStream::fork(2, 0);
    const int n = 200000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        s1 += x;
        s2 += x * x;
    }
    CHECK(std::fabs(s1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("batch ranges partition") {
    auto r = batch_ranges(101, 32);
    CHECK(r.size() == 32);
    std::int64_t total = 0;
    for (auto& b : r) total += b.size();
    CHECK(total == 101);
    CHECK(r.front().begin == 0);
    CHECK(r.back().end == 101);
}

TEST_CASE("ks distance basics") {
    std::vector<double> a{1, 2, 3}, b{1, 2, 3};
    CHECK(ks_distance(a, b) == doctest::Approx(0.0));
    std::vector<double> c{0, 0.1}, d{5, 6};
    CHECK(ks_distance(c, d) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ks_distance({}, a), std::invalid_argument);
}

TEST_CASE("ks distance of shifted uniforms approaches 1/2") {
    RngStream r = RngStream::fork(3, 0);
    const int n = 100000;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
        a[static_cast<std::size_t>(i)] = r.uniform01();
        b[static_cast<std::size_t>(i)] = r.uniform01() + 0.5;
    }
    // closed-form cdf gap between U(0,1) and U(0.5,1.5) is 0.5
    CHECK(std::fabs(ks_distance(a, b) - 0.5) < 0.01);
}

TEST_CASE("chi-square p-value sanity") {
    // For dof = 1, P(chi2 > 3.841) ~ 0.05
    CHECK(chi_square_pvalue(3.841, 1) == doctest::Approx(0.05).epsilon(0.01));
    // large stat -> tiny p
    CHECK(chi_square_pvalue(200, 10) < 1e-20);
    CHECK(chi_square_pvalue(0, 5) == doctest::Approx(1.0));
}

TEST_CASE("incomplete gamma endpoints") {
    CHECK(gamma_p(2.0, 0.0) == doctest::Approx(0.0));
    CHECK(gamma_q(2.0, 0.0) == doctest::Approx(1.0));
    // P(1, x) = 1 - exp(-x)
    CHECK(gamma_p(1.0, 1.3) == doctest::Approx(1 - std::exp(-1.3)).epsilon(1e-12));
}

TEST_CASE("gaussian density closed form and symmetry") {
    SmallMatrix id2;
    id2.d = 2;
    id2.at(0, 0) = id2.at(1, 1) = 1;
    double z0[2] = {0, 0};
    CHECK(gaussian_density(z0, 2, id2) == doctest::Approx(0.15915494309189535).epsilon(1e-12));
    double zp[2] = {0.7, -1.3}, zm[2] = {-0.7, 1.3};
    CHECK(gaussian_density(zp, 2, id2) == doctest::Approx(gaussian_density(zm, 2, id2)));
    SmallMatrix sing;
    sing.d = 2;  // zero matrix
    CHECK_THROWS_AS(gaussian_density(z0, 2, sing), std::domain_error);
}

TEST_CASE("gaussian density integrates to one") {
    // quadrature oracle over [-6,6]^2 for the identity covariance
    SmallMatrix id2;
    id2.d = 2;
    id2.at(0, 0) = id2.at(1, 1) = 1;
    const int m = 240;
    const double h = 12.0 / m;
    double total = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            double z[2] = {-6 + (i + 0.5) * h, -6 + (j + 0.5) * h};
            total += gaussian_density(z, 2, id2) * h * h;
        }
    }
    CHECK(std::fabs(total - 1.0) < 1e-4);
}

TEST_CASE("combine batch means matches direct mean") {
    std::vector<double> sums{10, 20, 30};
    std::vector<std::int64_t> counts{5, 10, 15};
    MeanSe r = combine_batch_means(sums, counts);
    CHECK(r.mean == doctest::Approx(2.0));
    CHECK(r.se == doctest::Approx(0.0));
}

TEST_SUITE_END();
