#include "latmix/geometry.hpp"

#include <limits>
#include <stdexcept>

namespace latmix {

Vec2 reflect(const Vec2& v, const Vec2& n) {
    double vn = dot(v, n);
    if (vn >= 0) throw std::domain_error("reflect: velocity not incoming");
    return v - 2.0 * vn * n;
}

std::optional<double> ray_circle_first_hit(const Vec2& q, const Vec2& v, const Vec2& c, double r,
                                           double t_min) {
    // |q + t v - c|^2 = r^2 with |v| = 1:  t^2 + 2 b t + c0 = 0.
    const Vec2 d = q - c;
    const long double b = static_cast<long double>(d.x) * v.x + static_cast<long double>(d.y) * v.y;
    const long double c0 = static_cast<long double>(d.x) * d.x +
                           static_cast<long double>(d.y) * d.y -
                           static_cast<long double>(r) * r;
    const long double disc = b * b - c0;
    if (disc < 0) return std::nullopt;
    const long double sq = sqrtl(disc);
    // Stable smaller root first.
    long double t1 = (b >= 0) ? (-b - sq) : (c0 / (-b + sq));
    long double t2 = (b >= 0) ? (c0 / (-b - sq)) : (-b + sq);
    if (t1 > t2) std::swap(t1, t2);
    if (t1 >= t_min) return static_cast<double>(t1);
    if (t2 >= t_min) return static_cast<double>(t2);
    return std::nullopt;
}

CellWalk::CellWalk(const Vec2& q, const Vec2& v) {
    cx_ = static_cast<std::int64_t>(std::floor(q.x));
    cy_ = static_cast<std::int64_t>(std::floor(q.y));
    const double inf = std::numeric_limits<double>::infinity();
    step_x_ = v.x > 0 ? 1 : (v.x < 0 ? -1 : 0);
    step_y_ = v.y > 0 ? 1 : (v.y < 0 ? -1 : 0);
    if (step_x_ != 0) {
        double edge = static_cast<double>(cx_ + (step_x_ > 0 ? 1 : 0));
        tmax_x_ = (edge - q.x) / v.x;
        tdelta_x_ = static_cast<double>(step_x_) / v.x;
    } else {
        tmax_x_ = inf;
        tdelta_x_ = inf;
    }
    if (step_y_ != 0) {
        double edge = static_cast<double>(cy_ + (step_y_ > 0 ? 1 : 0));
        tmax_y_ = (edge - q.y) / v.y;
        tdelta_y_ = static_cast<double>(step_y_) / v.y;
    } else {
        tmax_y_ = inf;
        tdelta_y_ = inf;
    }
}

void CellWalk::advance() {
    if (tmax_x_ < tmax_y_) {
        cx_ += step_x_;
        tmax_x_ += tdelta_x_;
    } else {
        cy_ += step_y_;
        tmax_y_ += tdelta_y_;
    }
}

}  // namespace latmix
