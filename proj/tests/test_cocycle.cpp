#include <doctest.h>

#include <cmath>

#include "latmix/averages.hpp"
#include "latmix/cocycle.hpp"
#include "latmix/observables.hpp"
#include "latmix/walks.hpp"

using namespace latmix;

namespace {

// Deterministic drift system: tau == e1 regardless of the base point.
struct DriftSystem {
    struct Base {
        int dummy = 0;
    };
    LatticeSplit split() const { return {0, 2}; }
    Step<Base> step(const Base& y) const { return {y, LatticeVector{1, 0}}; }
    Base sample_invariant(RngStream&) const { return Base{}; }
    double base_metric(const Base&, const Base&) const { return 0; }
};

const double kGolden = 0.61803398874989484820;

}  // namespace

TEST_SUITE_BEGIN("cocycle");

TEST_CASE("extend_step adds displacements exactly") {
    WalkSystem w(StepDistribution::simple_1d());
    RngStream rng = RngStream::fork(7, 0);
    auto y = w.sample_invariant(rng);
    ExtendedState<WalkSystem::Base> x{y, LatticeVector{3}};
    auto s = w.step(y);
    auto x2 = extend_step(w, x);
    CHECK(x2.cell == LatticeVector{3} + s.displacement);

    DriftSystem drift;
    ExtendedState<DriftSystem::Base> d{DriftSystem::Base{}, LatticeVector::zero(2)};
    for (int i = 0; i < 5; ++i) d = extend_step(drift, d);
    CHECK(d.cell == LatticeVector{5, 0});
}

TEST_CASE("birkhoff displacement basics") {
    DriftSystem drift;
    CHECK(birkhoff_displacement(drift, DriftSystem::Base{}, 0) == LatticeVector::zero(2));
    CHECK(birkhoff_displacement(drift, DriftSystem::Base{}, 5) == LatticeVector{5, 0});
    CHECK_THROWS_AS(birkhoff_displacement(drift, DriftSystem::Base{}, -1), std::invalid_argument);
}

TEST_CASE("cocycle identity holds exactly") {
    WalkSystem w(StepDistribution::lazy_1d());
    RngStream rng = RngStream::fork(9, 0);
    for (int rep = 0; rep < 50; ++rep) {
        auto y = w.sample_invariant(rng);
        std::int64_t m = static_cast<std::int64_t>(rng.below(30));
        std::int64_t n = static_cast<std::int64_t>(rng.below(30));
        LatticeVector lhs = birkhoff_displacement(w, y, m + n);
        // f^n y
        auto yn = y;
        for (std::int64_t k = 0; k < n; ++k) yn = w.step(yn).next;
        LatticeVector rhs = birkhoff_displacement(w, y, n) + birkhoff_displacement(w, yn, m);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("birkhoff distribution at n=2 matches the exact pmf") {
    WalkSystem w(StepDistribution::simple_1d());
    auto pmf = exact_pmf(StepDistribution::simple_1d(), 2);
    RngStream rng = RngStream::fork(13, 0);
    const int n = 100000;
    std::map<LatticeVector, std::int64_t> counts;
    for (int i = 0; i < n; ++i) counts[birkhoff_displacement(w, w.sample_invariant(rng), 2)]++;
    for (auto& [z, p] : pmf) {
        double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::fabs(counts[z] / double(n) - p) < 4 * se);
    }
}

TEST_CASE("extended step rejects leaving the half-infinite lattice") {
    // d1 = 1 system stepping in the negative direction from cell 0
    struct HalfDrift {
        struct Base {
            int dummy = 0;
        };
        LatticeSplit split() const { return {1, 0}; }
        Step<Base> step(const Base& y) const { return {y, LatticeVector{-1}}; }
        Base sample_invariant(RngStream&) const { return Base{}; }
        double base_metric(const Base&, const Base&) const { return 0; }
    };
    HalfDrift h;
    ExtendedState<HalfDrift::Base> x{{}, LatticeVector{0}};
    CHECK_THROWS_AS(extend_step(h, x), std::domain_error);
}

TEST_CASE("cube average of a constant is exact") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> phi;
    phi.eval = [](const WalkSystem::Base&, const LatticeVector&) { return 3.25; };
    phi.bound = 3.25;
    CubeSpec v(LatticeVector{-5}, LatticeVector{5}, w.split());
    MeanSe r = cube_average(phi, v, w, 1000, {17, 1});
    CHECK(r.mean == doctest::Approx(3.25));
    CHECK(r.se == doctest::Approx(0.0));
    CHECK_THROWS_AS(cube_average(phi, v, w, 1, EnsembleOptions{17, 1}), std::invalid_argument);
}

TEST_CASE("cube average of the golden cosine obeys the geometric-sum bound") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> phi;
    phi.eval = [](const WalkSystem::Base&, const LatticeVector& z) {
        return std::cos(2 * M_PI * kGolden * static_cast<double>(z[0]));
    };
    phi.bound = 1;
    CubeSpec v(LatticeVector{0}, LatticeVector{999}, w.split());
    MeanSe r = cube_average(phi, v, w, 200000, {23, 2});
    // |mean over V| <= 1/(1000 sin(pi alpha)) by the closed-form geometric sum
    double bound = 1.0 / (1000.0 * std::sin(M_PI * kGolden));
    CHECK(std::fabs(r.mean) <= bound + 4 * r.se);
}

TEST_CASE("cube average of a base observable recovers the nu mean") {
    WalkSystem w(StepDistribution::lazy_1d());
    // psi(y) = first symbol (0,1,2); nu(psi) computed by a direct nu-sample
    GlobalObservable<WalkSystem> phi;
    phi.eval = [&w](const WalkSystem::Base& y, const LatticeVector&) {
        return static_cast<double>(w.symbol(y));
    };
    phi.bound = 2;
    CubeSpec v(LatticeVector{-20}, LatticeVector{20}, w.split());
    MeanSe r = cube_average(phi, v, w, 200000, {29, 2});
    RngStream rng = RngStream::fork(31, 0);
    double direct = 0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) direct += static_cast<double>(w.symbol(w.sample_invariant(rng)));
    direct /= m;
    CHECK(std::fabs(r.mean - direct) < 4 * (r.se + 2.0 / std::sqrt(m)));
}

TEST_CASE("cube averages are linear under a shared stream") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> f, g, sum;
    f.eval = [](const WalkSystem::Base&, const LatticeVector& z) {
        return std::sin(0.1 * static_cast<double>(z[0]));
    };
    g.eval = [](const WalkSystem::Base&, const LatticeVector& z) {
        return 0.25 * static_cast<double>(z[0] % 3);
    };
    sum.eval = [&](const WalkSystem::Base& y, const LatticeVector& z) {
        return f.eval(y, z) + g.eval(y, z);
    };
    CubeSpec v(LatticeVector{-7}, LatticeVector{9}, w.split());
    EnsembleOptions opt{101, 1};
    MeanSe rf = cube_average(f, v, w, 20000, opt);
    MeanSe rg = cube_average(g, v, w, 20000, opt);
    MeanSe rs = cube_average(sum, v, w, 20000, opt);
    CHECK(rs.mean == doctest::Approx(rf.mean + rg.mean).epsilon(1e-12));
}

TEST_CASE("membership: constant passes both schemes") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> phi;
    phi.eval = [](const WalkSystem::Base&, const LatticeVector&) { return 2.0; };
    phi.average = 2.0;
    std::vector<BoxShape> shapes{{{-1}, {1}}};
    std::vector<LatticeVector> centers{LatticeVector{0}, LatticeVector{1000}};
    auto rep = check_global_membership(phi, GlobalClass::G_U, {16, 64}, shapes, centers, w, 2000,
                                       1e-9, {37, 1});
    CHECK(rep.pass);
    CHECK(rep.worst_at_largest == doctest::Approx(0.0));
}

TEST_CASE("membership: golden cosine passes G_U with the geometric bound") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> phi;
    phi.eval = [](const WalkSystem::Base&, const LatticeVector& z) {
        return std::cos(2 * M_PI * kGolden * static_cast<double>(z[0]));
    };
    phi.average = 0.0;
    std::vector<LatticeVector> centers{LatticeVector{0}, LatticeVector{313}, LatticeVector{-777}};
    const std::int64_t size = 2000;
    auto rep = check_global_membership(phi, GlobalClass::G_U, {200, size}, {}, centers, w, 400000,
                                       1.0, {41, 2});
    double bound = 1.0 / (static_cast<double>(size) * std::sin(M_PI * kGolden));
    double max_se = 0;
    for (auto& row : rep.rows)
        if (row.size == size) max_se = std::max(max_se, row.se);
    CHECK(rep.worst_at_largest <= bound + 4 * max_se);
}

TEST_CASE("membership: saturating ramp fails G_U") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> phi;
    phi.eval = [](const WalkSystem::Base&, const LatticeVector& z) {
        double x = static_cast<double>(z[0]);
        return x / (1.0 + std::fabs(x));
    };
    phi.average = 0.0;
    // two disjoint far-apart boxes give center-dependent averages
    std::vector<LatticeVector> centers{LatticeVector{100000}, LatticeVector{-100000}};
    auto rep = check_global_membership(phi, GlobalClass::G_U, {64, 256}, {}, centers, w, 20000,
                                       0.25, {43, 1});
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_at_largest > 0.9);
}

TEST_CASE("membership requires a declared average") {
    WalkSystem w(StepDistribution::lazy_1d());
    GlobalObservable<WalkSystem> phi;
    phi.eval = [](const WalkSystem::Base&, const LatticeVector&) { return 0.0; };
    CHECK_THROWS_AS(check_global_membership(phi, GlobalClass::G_O, {8}, {{{-1}, {1}}}, {}, w, 100,
                                            0.1, EnsembleOptions{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("decompose_local: nonnegative normalized weight stays a single term") {
    WalkSystem w(StepDistribution::lazy_1d());
    auto phi = cell_indicator<WalkSystem>(LatticeVector{0});
    auto pieces = decompose_local(w, phi);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0].coefficient == doctest::Approx(1.0));
    CHECK(pieces[0].cell == LatticeVector{0});
}

TEST_CASE("decompose_local: zero observable gives the empty list") {
    WalkSystem w(StepDistribution::lazy_1d());
    LocalObservable<WalkSystem> phi;
    phi.nonnegative = false;
    CellWeight<WalkSystem> cw;
    cw.w = [](const WalkSystem::Base&) { return 0.0; };
    cw.sup_bound = 0.0;
    phi.cells.emplace_back(LatticeVector{0}, cw);
    CHECK(decompose_local(w, phi).empty());
}

TEST_CASE("decompose_local: signed weight recombines pointwise") {
    WalkSystem w(StepDistribution::lazy_1d());
    // signed weight depending on the leading symbol
    auto weight = [&w](const WalkSystem::Base& y) {
        return std::cos(2.1 * static_cast<double>(w.symbol(y))) * 0.8;
    };
    LocalObservable<WalkSystem> phi;
    phi.nonnegative = false;
    CellWeight<WalkSystem> cw;
    cw.w = weight;
    cw.sup_bound = 0.8;
    cw.lipschitz = 4.0;
    // nu-mean declared in closed form over symbol probabilities 1/4,1/2,1/4
    cw.nu_mean = 0.25 * std::cos(0.0) * 0.8 + 0.5 * std::cos(2.1) * 0.8 + 0.25 * std::cos(4.2) * 0.8;
    phi.cells.emplace_back(LatticeVector{2}, cw);
    auto pieces = decompose_local(w, phi, 10.0);
    REQUIRE(pieces.size() == 2);
    CHECK(pieces[0].coefficient > 0);
    CHECK(pieces[1].coefficient < 0);
    // pointwise recombination on a sample of base points; each piece must be
    // nonnegative and the combination must reproduce the weight exactly
    RngStream rng = RngStream::fork(47, 0);
    for (int i = 0; i < 1000; ++i) {
        auto y = w.sample_invariant(rng);
        double recombined = 0;
        for (auto& p : pieces) {
            double val = p.weight.w(y);
            CHECK(val >= 0);
            recombined += p.coefficient * val;
        }
        CHECK(recombined == doctest::Approx(weight(y)).epsilon(8e-15));
    }
    // mass of each piece is 1: piece 1 is the indicator; piece 2 by its
    // closed-form normalization
    CHECK(pieces[0].weight.nu_mean.value_or(0) == doctest::Approx(1.0));
}

TEST_SUITE_END();
