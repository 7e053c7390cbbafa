#ifndef LATMIX_LATTICE_HPP
#define LATMIX_LATTICE_HPP

#include <array>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace latmix {

// Dimension split of the cell lattice Z_+^{d1} x Z^{d2}: the first d1 axes
// are half-infinite (coordinates must stay >= 0), the remaining d2 are signed.
struct LatticeSplit {
    int d1 = 0;
    int d2 = 0;
    int dim() const { return d1 + d2; }
    bool operator==(const LatticeSplit&) const = default;
};

// Integer cell index. Fixed capacity; every shipped system uses dim <= 2 but
// tests go up to 4. All arithmetic is exact 64-bit integer arithmetic.
class LatticeVector {
public:
    static constexpr int kMaxDim = 4;

    LatticeVector() = default;
    LatticeVector(std::initializer_list<std::int64_t> coords);
    static LatticeVector zero(int dim);

    int dim() const { return dim_; }
    std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    std::int64_t& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

    LatticeVector& operator+=(const LatticeVector& o);
    LatticeVector& operator-=(const LatticeVector& o);
    friend LatticeVector operator+(LatticeVector a, const LatticeVector& b) { return a += b; }
    friend LatticeVector operator-(LatticeVector a, const LatticeVector& b) { return a -= b; }
    friend LatticeVector operator*(std::int64_t k, LatticeVector v);
    bool operator==(const LatticeVector& o) const;
    bool operator!=(const LatticeVector& o) const { return !(*this == o); }
    // Lexicographic; used for deterministic report ordering.
    bool operator<(const LatticeVector& o) const;

    std::int64_t norm_inf() const;
    double norm2() const;
    bool is_zero() const;

    // Unit vector e_axis in the given dimension.
    static LatticeVector unit(int dim, int axis);

    std::string str() const;

private:
    std::array<std::int64_t, kMaxDim> c_{};
    int dim_ = 0;
};

std::ostream& operator<<(std::ostream& os, const LatticeVector& v);

struct LatticeVectorHash {
    std::size_t operator()(const LatticeVector& v) const;
};

// Per-axis sublattice declaration: at time n the displacement lives on
// z_j == n * shift_j (mod modulus_j). modulus 1 = aperiodic axis. Estimators
// adjust reference densities by the sublattice index and validate the
// declaration empirically.
struct SublatticeDecl {
    std::vector<std::int64_t> moduli;
    std::vector<std::int64_t> shifts;
    std::int64_t index() const {
        std::int64_t m = 1;
        for (std::int64_t p : moduli) m *= p;
        return m;
    }
    bool aperiodic() const { return index() == 1; }
    bool allows(const LatticeVector& z, std::int64_t n) const {
        for (int i = 0; i < z.dim(); ++i) {
            std::int64_t p = moduli[static_cast<std::size_t>(i)];
            if (p == 1) continue;
            std::int64_t want = ((n * shifts[static_cast<std::size_t>(i)]) % p + p) % p;
            std::int64_t got = (z[i] % p + p) % p;
            if (want != got) return false;
        }
        return true;
    }
    static SublatticeDecl aperiodic_dim(int d) {
        return {std::vector<std::int64_t>(static_cast<std::size_t>(d), 1),
                std::vector<std::int64_t>(static_cast<std::size_t>(d), 0)};
    }
};

// Axis-aligned box of cells, [lo_j, hi_j] inclusive per axis.
class CubeSpec {
public:
    CubeSpec() = default;
    // Throws std::invalid_argument on lo > hi or on a negative lo along one
    // of the first `split.d1` axes.
    CubeSpec(const LatticeVector& lo, const LatticeVector& hi, const LatticeSplit& split);

    int dim() const { return lo_.dim(); }
    const LatticeVector& lo() const { return lo_; }
    const LatticeVector& hi() const { return hi_; }
    std::int64_t side(int axis) const { return hi_[axis] - lo_[axis] + 1; }
    std::int64_t cell_count() const;
    bool contains(const LatticeVector& z) const;

    // Cube of side 2R+1 centred at `center`, clipped to the half-infinite axes.
    static CubeSpec centered(const LatticeVector& center, std::int64_t radius,
                             const LatticeSplit& split);

private:
    LatticeVector lo_, hi_;
};

}  // namespace latmix

#endif
