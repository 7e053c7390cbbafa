#include "latmix/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace latmix {

LatticeVector::LatticeVector(std::initializer_list<std::int64_t> coords) {
    if (coords.size() > kMaxDim) throw std::invalid_argument("LatticeVector: dim > 4");
    for (std::int64_t c : coords) c_[static_cast<std::size_t>(dim_++)] = c;
}

LatticeVector LatticeVector::zero(int dim) {
    if (dim < 0 || dim > kMaxDim) throw std::invalid_argument("LatticeVector: bad dim");
    LatticeVector v;
    v.dim_ = dim;
    return v;
}

LatticeVector& LatticeVector::operator+=(const LatticeVector& o) {
    if (dim_ != o.dim_) throw std::invalid_argument("LatticeVector: dim mismatch");
    for (int i = 0; i < dim_; ++i) c_[static_cast<std::size_t>(i)] += o.c_[static_cast<std::size_t>(i)];
    return *this;
}

LatticeVector& LatticeVector::operator-=(const LatticeVector& o) {
    if (dim_ != o.dim_) throw std::invalid_argument("LatticeVector: dim mismatch");
    for (int i = 0; i < dim_; ++i) c_[static_cast<std::size_t>(i)] -= o.c_[static_cast<std::size_t>(i)];
    return *this;
}

LatticeVector operator*(std::int64_t k, LatticeVector v) {
    for (int i = 0; i < v.dim(); ++i) v[i] *= k;
    return v;
}

bool LatticeVector::operator==(const LatticeVector& o) const {
    if (dim_ != o.dim_) return false;
    for (int i = 0; i < dim_; ++i)
        if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)]) return false;
    return true;
}

bool LatticeVector::operator<(const LatticeVector& o) const {
    if (dim_ != o.dim_) return dim_ < o.dim_;
    for (int i = 0; i < dim_; ++i) {
        if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)])
            return c_[static_cast<std::size_t>(i)] < o.c_[static_cast<std::size_t>(i)];
    }
    return false;
}

std::int64_t LatticeVector::norm_inf() const {
    std::int64_t m = 0;
    for (int i = 0; i < dim_; ++i) m = std::max(m, std::llabs(c_[static_cast<std::size_t>(i)]));
    return m;
}

double LatticeVector::norm2() const {
    double s = 0;
    for (int i = 0; i < dim_; ++i) {
        double x = static_cast<double>(c_[static_cast<std::size_t>(i)]);
        s += x * x;
    }
    return std::sqrt(s);
}

bool LatticeVector::is_zero() const {
    for (int i = 0; i < dim_; ++i)
        if (c_[static_cast<std::size_t>(i)] != 0) return false;
    return true;
}

LatticeVector LatticeVector::unit(int dim, int axis) {
    LatticeVector v = zero(dim);
    if (axis < 0 || axis >= dim) throw std::invalid_argument("LatticeVector::unit: bad axis");
    v[axis] = 1;
    return v;
}

std::string LatticeVector::str() const {
    std::ostringstream os;
    os << *this;
    return os.str();
}

std::ostream& operator<<(std::ostream& os, const LatticeVector& v) {
    os << '(';
    for (int i = 0; i < v.dim(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os << ')';
}

std::size_t LatticeVectorHash::operator()(const LatticeVector& v) const {
    // FNV-1a over the coordinates.
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < v.dim(); ++i) {
        std::uint64_t x = static_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) {
            h ^= (x >> (8 * b)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return static_cast<std::size_t>(h);
}

CubeSpec::CubeSpec(const LatticeVector& lo, const LatticeVector& hi, const LatticeSplit& split)
    : lo_(lo), hi_(hi) {
    if (lo.dim() != hi.dim() || lo.dim() != split.dim())
        throw std::invalid_argument("CubeSpec: dimension mismatch");
    for (int i = 0; i < lo.dim(); ++i) {
        if (lo[i] > hi[i]) throw std::invalid_argument("CubeSpec: lo > hi on axis " + std::to_string(i));
        if (i < split.d1 && lo[i] < 0)
            throw std::invalid_argument("CubeSpec: negative lo on half-infinite axis " + std::to_string(i));
    }
}

std::int64_t CubeSpec::cell_count() const {
    std::int64_t n = 1;
    for (int i = 0; i < dim(); ++i) n *= side(i);
    return n;
}

bool CubeSpec::contains(const LatticeVector& z) const {
    if (z.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
        if (z[i] < lo_[i] || z[i] > hi_[i]) return false;
    return true;
}

CubeSpec CubeSpec::centered(const LatticeVector& center, std::int64_t radius, const LatticeSplit& split) {
    LatticeVector lo = center, hi = center;
    for (int i = 0; i < center.dim(); ++i) {
        lo[i] -= radius;
        hi[i] += radius;
        if (i < split.d1 && lo[i] < 0) lo[i] = 0;
    }
    return CubeSpec(lo, hi, split);
}

}  // namespace latmix
