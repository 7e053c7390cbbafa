#include <doctest.h>

#include <sstream>

#include "latmix/lattice.hpp"

using namespace latmix;

TEST_SUITE_BEGIN("lattice");

TEST_CASE("vector arithmetic is exact and dimension checked") {
    LatticeVector a{3, -2};
    LatticeVector b{1, 5};
    CHECK((a + b) == LatticeVector{4, 3});
    CHECK((a - b) == LatticeVector{2, -7});
    CHECK((3 * b) == LatticeVector{3, 15});
    CHECK(a.norm_inf() == 3);
    CHECK(LatticeVector{3, 4}.norm2() == doctest::Approx(5.0));
    CHECK_THROWS_AS(a += LatticeVector{1}, std::invalid_argument);
}

TEST_CASE("unit and zero vectors") {
    CHECK(LatticeVector::zero(3).is_zero());
    CHECK(LatticeVector::unit(2, 1) == LatticeVector{0, 1});
    CHECK_THROWS_AS(LatticeVector::unit(2, 5), std::invalid_argument);
}

TEST_CASE("ordering is lexicographic") {
    CHECK(LatticeVector{0, 1} < LatticeVector{1, 0});
    CHECK(LatticeVector{1, 0} < LatticeVector{1, 1});
    CHECK_FALSE(LatticeVector{1, 1} < LatticeVector{1, 1});
}

TEST_CASE("printing") {
    std::ostringstream os;
    os << LatticeVector{-3, 7};
    CHECK(os.str() == "(-3,7)");
}

TEST_CASE("cube validation and counting") {
    LatticeSplit split{1, 1};
    CubeSpec v(LatticeVector{0, -2}, LatticeVector{3, 2}, split);
    CHECK(v.cell_count() == 4 * 5);
    CHECK(v.contains(LatticeVector{0, 0}));
    CHECK_FALSE(v.contains(LatticeVector{4, 0}));
    CHECK_THROWS_AS(CubeSpec(LatticeVector{2, 0}, LatticeVector{1, 0}, split),
                    std::invalid_argument);
    // negative lower bound on the half-infinite axis
    CHECK_THROWS_AS(CubeSpec(LatticeVector{-1, 0}, LatticeVector{1, 0}, split),
                    std::invalid_argument);
    // clipping of centered cubes
    CubeSpec c = CubeSpec::centered(LatticeVector{1, 0}, 3, split);
    CHECK(c.lo() == LatticeVector{0, -3});
    CHECK(c.hi() == LatticeVector{4, 3});
}

TEST_CASE("sublattice declarations") {
    SublatticeDecl ap = SublatticeDecl::aperiodic_dim(2);
    CHECK(ap.aperiodic());
    CHECK(ap.allows(LatticeVector{5, -3}, 7));

    SublatticeDecl parity{{2}, {1}};  // z == n mod 2
    CHECK(parity.index() == 2);
    CHECK(parity.allows(LatticeVector{3}, 5));
    CHECK_FALSE(parity.allows(LatticeVector{2}, 5));
    CHECK(parity.allows(LatticeVector{-4}, 10));
}

TEST_SUITE_END();
