#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "latmix/billiards.hpp"
#include "latmix/errors.hpp"

namespace latmix {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGrazingTol = 1e-8;
constexpr double kImpactTol = 1e-12;
const double kInf = std::numeric_limits<double>::infinity();

struct DiskRef {
    Disk disk;
    LatticeVector cell;
    int id = -1;
    bool valid() const { return id >= 0; }
    bool same(const DiskRef& o) const { return id == o.id && cell == o.cell; }
};

CollisionEvent make_event(const DiskRef& hit, const Vec2& q_imp, const Vec2& v_pre, double time,
                          int wall_bounces) {
    CollisionEvent ev;
    ev.time = time;
    ev.q = q_imp;
    ev.v_pre = v_pre;
    Vec2 u = q_imp - hit.disk.center;
    u = u * (1.0 / u.norm());
    ev.v_post = dot(v_pre, u) < 0 ? reflect(v_pre, u) : v_pre;  // tangential graze
    double theta = std::atan2(u.y, u.x);
    if (theta < 0) theta += 2 * kPi;
    ev.cell = hit.cell;
    ev.disk_id = hit.id;
    ev.r = theta * hit.disk.radius;
    ev.phi = std::atan2(cross(u, ev.v_post), dot(u, ev.v_post));
    if (ev.phi > kPi / 2) ev.phi = kPi / 2;
    if (ev.phi < -kPi / 2) ev.phi = -kPi / 2;
    ev.grazing = std::fabs(ev.phi) > kPi / 2 - kGrazingTol;
    ev.wall_bounces = wall_bounces;
    return ev;
}

double path_budget_of(const ScattererConfig& config, const FlightLimits& limits) {
    if (limits.path_budget > 0) return limits.path_budget;
    return 4.0 * config.horizon().bound;
}

// Minimal signed distance to the disks of the 3x3 translate neighbourhood of
// q, optionally skipping one disk. The true nearest disk is either found here
// or at distance >= 1 - max_radius.
double nearest_disk_sd(const ScattererConfig& config, const Vec2& q, DiskRef* closest = nullptr,
                       const DiskRef* skip = nullptr) {
    std::int64_t i = static_cast<std::int64_t>(std::floor(q.x));
    std::int64_t j = static_cast<std::int64_t>(std::floor(q.y));
    double best = kInf;
    config.for_disks_near(i, j, [&](int id, const Disk& g, const LatticeVector& cell) {
        if (skip && skip->id == id && skip->cell == cell) return;
        double sd = circle_signed_distance(q, g.center, g.radius);
        if (sd < best) {
            best = sd;
            if (closest) *closest = DiskRef{g, cell, id};
        }
    });
    return best;
}

double wall_sd(const ScattererConfig& config, const Vec2& q) {
    double sd = kInf;
    if (config.has_wall_x0()) sd = std::min(sd, q.x);
    if (config.has_walls_y()) sd = std::min(sd, std::min(q.y, 1.0 - q.y));
    return sd;
}

}  // namespace

struct FlightOutcome {
    bool collided = false;
    CollisionEvent ev;
    Vec2 q, v;  // state at the time cap when no collision happened
    double time = 0;
};

FlightOutcome flight_free(const ScattererConfig& config, Vec2 q, Vec2 v,
                          const FlightLimits& limits,
                          std::optional<std::pair<LatticeVector, int>> exclude, double time_cap);
FlightOutcome flight_field(const ScattererConfig& config, Vec2 q0, Vec2 v0, const FieldSpec& field,
                           const FlightLimits& limits, double time_cap);

// ------------------------------------------------------------- free flight --

FlightOutcome flight_free(const ScattererConfig& config, Vec2 q, Vec2 v,
                          const FlightLimits& limits,
                          std::optional<std::pair<LatticeVector, int>> exclude, double time_cap) {
    const double speed = v.norm();
    if (speed <= 0) throw std::domain_error("flight_free: zero velocity");
    const double budget = path_budget_of(config, limits);
    double path_used = 0, time_used = 0;
    int wall_bounces = 0;

    for (;;) {
        const Vec2 u{v.x / speed, v.y / speed};
        // first wall crossing along this straight segment (path parameter)
        double s_wall = kInf;
        int which_wall = -1;
        if (config.has_wall_x0() && u.x < 0) {
            s_wall = -q.x / u.x;
            which_wall = 0;
        }
        if (config.has_walls_y()) {
            if (u.y < 0 && -q.y / u.y < s_wall) {
                s_wall = -q.y / u.y;
                which_wall = 1;
            } else if (u.y > 0 && (1.0 - q.y) / u.y < s_wall) {
                s_wall = (1.0 - q.y) / u.y;
                which_wall = 2;
            }
        }
        const double budget_rem = budget - path_used;
        const double s_cap = std::isinf(time_cap) ? kInf : (time_cap - time_used) * speed;
        const double s_stop = std::min({s_wall, s_cap, budget_rem});

        // disk scan in cell-entry order
        CellWalk walk(q, u);
        double entry = 0;
        DiskRef best;
        double s_best = kInf;
        while (entry <= s_stop + 1e-12) {
            const double exit = walk.exit_t();
            config.for_disks_near(walk.cx(), walk.cy(),
                                  [&](int id, const Disk& g, const LatticeVector& cell) {
                                      if (exclude && wall_bounces == 0 && exclude->first == cell &&
                                          exclude->second == id)
                                          return;
                                      auto t = ray_circle_first_hit(q, u, g.center, g.radius,
                                                                    kImpactTol);
                                      if (t && *t < s_best) {
                                          s_best = *t;
                                          best = DiskRef{g, cell, id};
                                      }
                                  });
            if (best.valid() && s_best <= exit) break;
            entry = exit;
            walk.advance();
        }

        if (best.valid() && s_best <= s_stop) {
            FlightOutcome out;
            out.collided = true;
            out.ev = make_event(best, q + u * s_best, v, time_used + s_best / speed, wall_bounces);
            return out;
        }
        if (s_cap <= std::min(s_wall, budget_rem)) {
            FlightOutcome out;
            out.q = q + u * s_cap;
            out.v = v;
            out.time = time_cap;
            return out;
        }
        if (which_wall >= 0 && s_wall <= budget_rem) {
            q = q + u * s_wall;
            if (which_wall == 0) {
                q.x = 0;
                v.x = -v.x;
            } else if (which_wall == 1) {
                q.y = 0;
                v.y = -v.y;
            } else {
                q.y = 1;
                v.y = -v.y;
            }
            path_used += s_wall;
            time_used += s_wall / speed;
            if (++wall_bounces > 2000000)
                throw HorizonError("flight_free: wall bounce budget exhausted");
            continue;
        }
        throw HorizonError("flight_free: free path exceeded budget " + std::to_string(budget) +
                           " (declared bound " + std::to_string(config.horizon().bound) + ")");
    }
}

// ------------------------------------------------------------ field flight --

namespace {

struct PointState {
    Vec2 q, v;
};

PointState parabola_at(const PointState& s, const Vec2& a, double dt) {
    return {s.q + s.v * dt + a * (0.5 * dt * dt), s.v + a * dt};
}

PointState rk4_step(const FieldSpec& field, const PointState& s, double dt) {
    auto acc = [&](const PointState& p) { return field.acceleration(p.q, p.v); };
    Vec2 k1q = s.v, k1v = acc(s);
    PointState s2{s.q + k1q * (dt / 2), s.v + k1v * (dt / 2)};
    Vec2 k2q = s2.v, k2v = acc(s2);
    PointState s3{s.q + k2q * (dt / 2), s.v + k2v * (dt / 2)};
    Vec2 k3q = s3.v, k3v = acc(s3);
    PointState s4{s.q + k3q * dt, s.v + k3v * dt};
    Vec2 k4q = s4.v, k4v = acc(s4);
    return {s.q + (k1q + 2.0 * k2q + 2.0 * k3q + k4q) * (dt / 6.0),
            s.v + (k1v + 2.0 * k2v + 2.0 * k3v + k4v) * (dt / 6.0)};
}

// RK4 with step doubling; halves dt until the doubling error passes tol and
// returns the Richardson-corrected state. dt is updated to the step taken.
PointState rk4_adaptive(const FieldSpec& field, const PointState& s, double& dt, double tol) {
    for (int halvings = 0; halvings < 48; ++halvings) {
        PointState full = rk4_step(field, s, dt);
        PointState half = rk4_step(field, s, dt / 2);
        half = rk4_step(field, half, dt / 2);
        double err = std::max(std::fabs(full.q.x - half.q.x), std::fabs(full.q.y - half.q.y));
        err = std::max(err, dt * std::max(std::fabs(full.v.x - half.v.x),
                                          std::fabs(full.v.y - half.v.y)));
        if (err <= tol || dt <= 1e-14) {
            half.q = half.q + (half.q - full.q) * (1.0 / 15.0);
            half.v = half.v + (half.v - full.v) * (1.0 / 15.0);
            return half;
        }
        dt /= 2;
    }
    throw IntegrationError("rk4_adaptive: step size underflow");
}

}  // namespace

FlightOutcome flight_field(const ScattererConfig& config, Vec2 q0, Vec2 v0, const FieldSpec& field,
                           const FlightLimits& limits, double time_cap) {
    if (field.is_free()) return flight_free(config, q0, v0, limits, {}, time_cap);
    const bool parabolic = field.kind() == FieldSpec::Kind::ConstantGravity;
    const Vec2 grav = field.gravity_vector();
    const double speed0 = v0.norm();
    const double h0 = field.is_potential() ? field.potential(q0) + 0.5 * v0.norm2() : 0.0;
    const double budget = path_budget_of(config, limits);
    const double sd_floor = 1e-6;
    const double far_cap = 0.5 * std::max(0.05, 1.0 - config.max_radius());

    PointState s{q0, v0};
    double time_used = 0, path_used = 0;
    std::int64_t steps = 0;
    int wall_bounces = 0;

    // Starting on (or within roundoff of) a scatterer: that disk is excluded
    // from crossing checks until the arc is clearly away from it. Legitimate
    // returns onto the launch disk re-arm once the distance exceeds 1e-4.
    DiskRef launch_skip;
    {
        DiskRef c;
        if (nearest_disk_sd(config, q0, &c) < 1e-9) launch_skip = c;
    }
    auto skip_ptr = [&]() -> const DiskRef* { return launch_skip.valid() ? &launch_skip : nullptr; };

    // Exact arc for the parabola; a plain RK4 sub-step otherwise (only used
    // with dt at or below the accepted adaptive step).
    auto probe = [&](const PointState& anchor, double dt) -> PointState {
        if (parabolic) return parabola_at(anchor, grav, dt);
        return rk4_step(field, anchor, dt);
    };

    for (;;) {
        if (++steps > limits.step_budget)
            throw TrapError("flight_field: step budget exhausted without a collision");
        if (launch_skip.valid() &&
            circle_signed_distance(s.q, launch_skip.disk.center, launch_skip.disk.radius) > 1e-4)
            launch_skip = DiskRef{};

        double sd = std::min({nearest_disk_sd(config, s.q, nullptr, skip_ptr()),
                              wall_sd(config, s.q), far_cap});
        double speed = s.v.norm();
        double dt = std::max(0.5 * sd, sd_floor) / std::max(speed, 1e-9);
        if (!std::isinf(time_cap)) dt = std::min(dt, time_cap - time_used);
        if (dt <= 0) {
            return FlightOutcome{false, {}, s.q, s.v, time_used};
        }

        PointState next;
        if (parabolic) {
            next = parabola_at(s, grav, dt);
        } else {
            next = rk4_adaptive(field, s, dt, 1e-11 * (1.0 + speed));
            if (field.kind() == FieldSpec::Kind::ThermostatConstant)
                next.v = next.v * (speed0 / next.v.norm());
        }

        double sd_next = nearest_disk_sd(config, next.q, nullptr, skip_ptr());
        double wall_next = wall_sd(config, next.q);
        if (sd_next < 0 || wall_next < 0) {
            auto bisect = [&](auto crossed) {
                double lo = 0, hi = dt;
                for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (crossed(probe(s, mid).q) ? hi : lo) = mid;
                }
                return hi;
            };
            double t_disk = sd_next < 0 ? bisect([&](const Vec2& p) {
                return nearest_disk_sd(config, p, nullptr, skip_ptr()) < 0;
            })
                                        : kInf;
            double t_wall =
                wall_next < 0 ? bisect([&](const Vec2& p) { return wall_sd(config, p) < 0; })
                              : kInf;
            if (t_disk <= t_wall) {
                // polish to |signed distance| < 1e-12
                double lo = 0, hi = t_disk;
                DiskRef hit;
                for (int it = 0; it < 100; ++it) {
                    double mid = 0.5 * (lo + hi);
                    double sdm = nearest_disk_sd(config, probe(s, mid).q, &hit, skip_ptr());
                    if (std::fabs(sdm) < kImpactTol) {
                        lo = hi = mid;
                        break;
                    }
                    (sdm < 0 ? hi : lo) = mid;
                }
                double t_hit = 0.5 * (lo + hi);
                PointState imp = probe(s, t_hit);
                nearest_disk_sd(config, imp.q, &hit, skip_ptr());
                if (field.is_potential()) {
                    double h1 = field.potential(imp.q) + 0.5 * imp.v.norm2();
                    if (std::fabs(h1 - h0) > 1e-6 * std::max(1.0, std::fabs(h0)))
                        throw IntegrationError("flight_field: energy drift " +
                                               std::to_string(h1 - h0));
                }
                FlightOutcome out;
                out.collided = true;
                out.ev = make_event(hit, imp.q, imp.v, time_used + t_hit, wall_bounces);
                return out;
            }
            // wall reflection
            PointState w = probe(s, t_wall);
            double dx = config.has_wall_x0() ? w.q.x : kInf;
            double dy0 = config.has_walls_y() ? w.q.y : kInf;
            double dy1 = config.has_walls_y() ? 1.0 - w.q.y : kInf;
            if (dx <= dy0 && dx <= dy1) {
                w.q.x = 0;
                w.v.x = std::fabs(w.v.x);
            } else if (dy0 <= dy1) {
                w.q.y = 0;
                w.v.y = std::fabs(w.v.y);
            } else {
                w.q.y = 1;
                w.v.y = -std::fabs(w.v.y);
            }
            path_used += speed * t_wall;
            time_used += t_wall;
            s = w;
            ++wall_bounces;
            continue;
        }

        path_used += speed * dt;
        time_used += dt;
        s = next;
        if (path_used > budget)
            throw HorizonError("flight_field: path budget exceeded (" + std::to_string(budget) +
                               ")");
        if (!std::isinf(time_cap) && time_used >= time_cap)
            return FlightOutcome{false, {}, s.q, s.v, time_used};
    }
}

// ---------------------------------------------------------------- wrappers --

CollisionEvent next_collision_free(const ScattererConfig& config, Vec2 q, Vec2 v,
                                   const FlightLimits& limits,
                                   std::optional<std::pair<LatticeVector, int>> exclude) {
    // flight_free throws HorizonError instead of returning uncollided
    return flight_free(config, q, v, limits, exclude, kInf).ev;
}

CollisionEvent next_collision_field(const ScattererConfig& config, Vec2 q, Vec2 v,
                                    const FieldSpec& field, const FlightLimits& limits) {
    return flight_field(config, q, v, field, limits, kInf).ev;
}

FlowState billiard_flow(const ScattererConfig& config, const FieldSpec& field, FlowState x,
                        double t, const FlightLimits& limits) {
    if (t < 0) throw std::invalid_argument("billiard_flow: t < 0");
    DiskRef closest;
    if (nearest_disk_sd(config, x.q, &closest) < 0)
        throw std::domain_error("billiard_flow: start position inside the scatterer of cell " +
                                closest.cell.str());
    double remaining = t;
    for (std::int64_t events = 0; events < 100000000; ++events) {
        if (remaining <= 0) return x;
        FlightOutcome out = field.is_free()
                                ? flight_free(config, x.q, x.v, limits, {}, remaining)
                                : flight_field(config, x.q, x.v, field, limits, remaining);
        if (!out.collided) {
            x.q = out.q;
            x.v = out.v;
            return x;
        }
        x.q = out.ev.q;
        x.v = out.ev.v_post;
        remaining -= out.ev.time;
    }
    throw TrapError("billiard_flow: event budget exhausted");
}

}  // namespace latmix
