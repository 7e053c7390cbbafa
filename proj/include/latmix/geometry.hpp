#ifndef LATMIX_GEOMETRY_HPP
#define LATMIX_GEOMETRY_HPP

#include <cmath>
#include <cstdint>
#include <optional>

namespace latmix {

struct Vec2 {
    double x = 0, y = 0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double k, const Vec2& v) { return v * k; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

// Disk scatterer in fundamental-cell coordinates. The center may lie on the
// cell boundary; overhang into neighbouring cells is allowed as long as the
// radius stays below one (the 3x3 lookup neighbourhood then covers it).
struct Disk {
    Vec2 center;
    double radius = 0;
};

// Specular reflection v' = v - 2 <v,n> n about the inward unit normal.
// Throws std::domain_error when v is not incoming (<v,n> >= 0).
Vec2 reflect(const Vec2& v, const Vec2& n);

// First positive intersection parameter of the ray q + t v with the circle
// |p - c| = r. The discriminant is evaluated in extended precision. Roots
// below t_min are ignored (guards against re-hitting the launch disk).
std::optional<double> ray_circle_first_hit(const Vec2& q, const Vec2& v, const Vec2& c, double r,
                                           double t_min = 1e-12);

// Signed distance to the circle boundary: positive outside.
inline double circle_signed_distance(const Vec2& q, const Vec2& c, double r) {
    return (q - c).norm() - r;
}

// Amanatides-Woo style integer-grid walk along a ray. Yields unit cells in
// strictly increasing entry-parameter order.
class CellWalk {
public:
    CellWalk(const Vec2& q, const Vec2& v);

    std::int64_t cx() const { return cx_; }
    std::int64_t cy() const { return cy_; }
    // Ray parameter at which the walk leaves the current cell.
    double exit_t() const { return std::min(tmax_x_, tmax_y_); }
    void advance();

private:
    std::int64_t cx_, cy_;
    int step_x_, step_y_;
    double tmax_x_, tmax_y_, tdelta_x_, tdelta_y_;
};

}  // namespace latmix

#endif
