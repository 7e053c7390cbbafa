#include "latmix/pingpong.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "latmix/errors.hpp"

namespace latmix {

namespace {

double frac(double x) { return x - std::floor(x); }

double eval_poly(const std::vector<double>& c, double u) {
    double acc = 0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * u + c[k];
    return acc;
}

double eval_poly_d1(const std::vector<double>& c, double u) {
    double acc = 0;
    for (std::size_t k = c.size(); k-- > 1;) acc = acc * u + c[k] * static_cast<double>(k);
    return acc;
}

double eval_poly_d2(const std::vector<double>& c, double u) {
    double acc = 0;
    for (std::size_t k = c.size(); k-- > 2;)
        acc = acc * u + c[k] * static_cast<double>(k) * static_cast<double>(k - 1);
    return acc;
}

}  // namespace

WallMotion::WallMotion(std::vector<double> breakpoints, std::vector<std::vector<double>> coefficients)
    : breaks_(std::move(breakpoints)), coef_(std::move(coefficients)) {
    if (breaks_.size() < 2 || breaks_.front() != 0.0 || breaks_.back() != 1.0)
        throw std::invalid_argument("WallMotion: breakpoints must run from 0 to 1");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
        if (breaks_[i] <= breaks_[i - 1])
            throw std::invalid_argument("WallMotion: breakpoints not increasing");
    if (coef_.size() != breaks_.size() - 1)
        throw std::invalid_argument("WallMotion: need one coefficient list per piece");
    for (const auto& c : coef_)
        if (c.empty()) throw std::invalid_argument("WallMotion: empty coefficient list");
    // continuity inside (0,1) and across the period
    for (std::size_t i = 0; i + 1 < coef_.size(); ++i) {
        double left = eval_poly(coef_[i], breaks_[i + 1] - breaks_[i]);
        double right = eval_poly(coef_[i + 1], 0.0);
        if (std::fabs(left - right) > 1e-12)
            throw std::invalid_argument("WallMotion: discontinuous at interior breakpoint");
    }
    double wrap_left = eval_poly(coef_.back(), 1.0 - breaks_[breaks_.size() - 2]);
    double wrap_right = eval_poly(coef_.front(), 0.0);
    if (std::fabs(wrap_left - wrap_right) > 1e-12)
        throw std::invalid_argument("WallMotion: profile not 1-periodic continuous");

    min_value_ = max_value_ = value(0.0);
    for (int i = 0; i <= 4096; ++i) {
        double v = value(static_cast<double>(i) / 4096.0);
        min_value_ = std::min(min_value_, v);
        max_value_ = std::max(max_value_, v);
    }
}

WallMotion WallMotion::constant(double c) { return WallMotion({0.0, 1.0}, {{c}}); }

WallMotion WallMotion::parabolic_corner(double base, double beta) {
    return WallMotion({0.0, 1.0}, {{base, beta, -beta}});
}

WallMotion WallMotion::convex_corner(double amp) {
    // amp*(t - 1/2)^2 = amp/4 - amp t + amp t^2
    return WallMotion({0.0, 1.0}, {{amp / 4, -amp, amp}});
}

std::size_t WallMotion::piece_of(double u) const {
    std::size_t i = 0;
    while (i + 1 < coef_.size() && u >= breaks_[i + 1]) ++i;
    return i;
}

double WallMotion::value(double t) const {
    double u = frac(t);
    std::size_t i = piece_of(u);
    return eval_poly(coef_[i], u - breaks_[i]);
}

double WallMotion::deriv(double t) const {
    double u = frac(t);
    std::size_t i = piece_of(u);
    return eval_poly_d1(coef_[i], u - breaks_[i]);
}

double WallMotion::second(double t) const {
    double u = frac(t);
    std::size_t i = piece_of(u);
    return eval_poly_d2(coef_[i], u - breaks_[i]);
}

double WallMotion::slope_right() const { return eval_poly_d1(coef_.front(), 0.0); }

double WallMotion::slope_left() const {
    return eval_poly_d1(coef_.back(), 1.0 - breaks_[breaks_.size() - 2]);
}

WallMotion WallMotion::scaled(double c) const {
    std::vector<std::vector<double>> coef = coef_;
    for (auto& piece : coef)
        for (double& x : piece) x *= c;
    return WallMotion(breaks_, std::move(coef));
}

// --------------------------------------------------------------- pingpong --

namespace {

// First root of a piecewise-smooth gap function D on [s0, s0 + window]:
// 64 probes per smooth piece of the shifted profile, then bisection to 1e-12.
// `gap` must be positive at s0 (separating start).
template <typename GapFn>
double first_gap_root(const WallMotion& profile, GapFn&& gap, double t0, double s0, double window) {
    const auto& breaks = profile.breakpoints();
    double prev_s = s0;
    double prev_d = gap(s0);
    if (prev_d < 0) throw std::domain_error("first_gap_root: negative gap at search start");
    double piece_start = s0;
    const double s_end = s0 + window;
    while (piece_start < s_end) {
        // end of the current smooth piece of u -> profile(t0 + u)
        double u = frac(t0 + piece_start);
        std::size_t i = 0;
        while (i + 1 < breaks.size() && u >= breaks[i + 1] - 1e-15) ++i;
        double piece_end = piece_start + (breaks[i + 1] - u);
        piece_end = std::min(piece_end, s_end);
        const int probes = 64;
        double h = (piece_end - piece_start) / probes;
        if (h > 0) {
            for (int k = 1; k <= probes; ++k) {
                double s = piece_start + h * k;
                double d = gap(s);
                if (prev_d > 0 && d <= 0) {
                    double lo = prev_s, hi = s;
                    for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
                        double mid = 0.5 * (lo + hi);
                        (gap(mid) <= 0 ? hi : lo) = mid;
                    }
                    return 0.5 * (lo + hi);
                }
                prev_s = s;
                prev_d = d;
            }
        }
        piece_start = piece_end + 1e-15;
    }
    throw StallError("first_gap_root: no wall collision within " + std::to_string(window) +
                     " time units");
}

}  // namespace

PingEvent pingpong_event(const WallMotion& l, double t, double x, double v) {
    if (x > 0 || x < -l.value(t) - 1e-9)
        throw std::domain_error("pingpong_event: particle outside the walls");
    // fixed wall at 0
    double s_fixed = v > 0 ? (0.0 - x) / v : std::numeric_limits<double>::infinity();
    if (v > 0 && s_fixed <= 1e-12) s_fixed = std::numeric_limits<double>::infinity();
    // moving wall at -l(t): gap D(s) = x + v s + l(t+s)
    auto gap = [&](double s) { return x + v * s + l.value(t + s); };
    double s_moving;
    try {
        s_moving = first_gap_root(l, gap, t, 1e-10, 10.0);
    } catch (const StallError&) {
        if (std::isinf(s_fixed)) throw;
        s_moving = std::numeric_limits<double>::infinity();
    }
    PingEvent ev;
    if (s_fixed < s_moving) {
        ev.time = t + s_fixed;
        ev.moving_wall = false;
        ev.v_post = -v;
    } else {
        ev.time = t + s_moving;
        ev.moving_wall = true;
        ev.v_post = -2.0 * l.deriv(t + s_moving) - v;  // wall velocity is -l'
    }
    return ev;
}

PingpongStepResult pingpong_map(const WallMotion& l, const PingpongState& state) {
    if (state.velocity <= 0) throw std::domain_error("pingpong_map: velocity must be positive");
    if (state.phase < 0 || state.phase >= 1)
        throw std::domain_error("pingpong_map: phase must lie in [0,1)");
    double t = state.phase;
    double x = -l.value(t);  // on the moving wall
    double v = state.velocity;
    const double t_stop = std::floor(t) + 1.0;  // next integer moment
    const std::int64_t budget = 1000 + 8 * static_cast<std::int64_t>(state.velocity + 2.0);
    PingpongStepResult out;
    for (std::int64_t k = 0; k < budget; ++k) {
        PingEvent ev = pingpong_event(l, t, x, v);
        ++out.events;
        t = ev.time;
        x = ev.moving_wall ? -l.value(t) : 0.0;
        v = ev.v_post;
        if (ev.moving_wall && t >= t_stop) {
            if (v <= 0)
                throw std::domain_error(
                    "pingpong_map: nonpositive post-collisional velocity (energy too low)");
            out.state.phase = frac(t);
            out.state.velocity = v;
            out.band_increment = static_cast<std::int64_t>(std::floor(v)) -
                                 static_cast<std::int64_t>(std::floor(state.velocity));
            return out;
        }
    }
    throw StallError("pingpong_map: event budget exhausted");
}

std::pair<double, double> limit_map(double delta, double tau_phase, double i_value) {
    double tau_next = frac(tau_phase - i_value);
    return {tau_next, i_value + delta * tau_next};
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15 * tol)
        return left + right + (left + right - whole) / 15;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double compute_delta(const WallMotion& l) {
    if (l.min_value() <= 0) throw std::domain_error("compute_delta: profile not strictly positive");
    std::function<double(double)> integrand = [&](double s) {
        double v = l.value(s);
        return 1.0 / (v * v);
    };
    // integrate piece by piece so the integrand is smooth on each call
    const auto& breaks = l.breakpoints();
    double total = 0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        total += integrate(integrand, breaks[i], breaks[i + 1], 1e-12);
    return l.value(0.0) * l.corner_sigma() * total;
}

HyperbolicityVerdict hyperbolicity_check(double delta) {
    HyperbolicityVerdict v;
    v.hyperbolic = !(delta > 0 && delta < 4);
    v.boundary = std::fabs(delta) < 1e-9 || std::fabs(delta - 4.0) < 1e-9;
    v.degenerate_skew = std::fabs(delta) < 1e-9;
    return v;
}

std::string HyperbolicityVerdict::describe() const {
    if (!hyperbolic) return "not covered (Delta in (0,4))";
    std::string s = "piecewise hyperbolic";
    if (degenerate_skew) s += " [degenerate: skew shift]";
    else if (boundary) s += " [boundary value, inconclusive]";
    return s;
}

double cylinder_distance(double phase_a, double i_a, double phase_b, double i_b) {
    double dp = std::fabs(frac(phase_a) - frac(phase_b));
    dp = std::min(dp, 1.0 - dp);
    return dp + std::fabs(i_a - i_b);
}

// --------------------------------------------------------- bouncing ball ---

BounceEvent bouncing_event(const WallMotion& h, double g, double t, double x, double v) {
    if (g <= 0) throw std::domain_error("bouncing_event: g <= 0");
    if (x < h.value(t) - 1e-9) throw std::domain_error("bouncing_event: particle below the wall");
    auto gap = [&](double s) { return x + v * s - 0.5 * g * s * s - h.value(t + s); };
    // Skip ahead to the descending crossing of the level h_max: the gap is
    // strictly positive before it.
    double s0 = 1e-10;
    const double hmax = h.max_value();
    if (x > hmax + 1e-9) {
        double disc = v * v + 2.0 * g * (x - hmax);
        s0 = std::max(s0, (v + std::sqrt(disc)) / g - 1e-6);
    } else if (v > 0) {
        // passes above h_max? then restart the search at the down-crossing
        double apex = x + 0.5 * v * v / g;
        if (apex > hmax + 1e-9) {
            double disc = v * v + 2.0 * g * (x - hmax);
            double s_up = (v - std::sqrt(disc)) / g;  // could be < 0 if already above
            if (s_up > 1e-10 && gap(s_up) > 0) {
                // check no collision before leaving the wall band
                double s_hit = std::numeric_limits<double>::infinity();
                try {
                    s_hit = first_gap_root(h, gap, t, 1e-10, s_up);
                } catch (const StallError&) {
                }
                if (std::isfinite(s_hit)) {
                    BounceEvent ev;
                    ev.time = s_hit;
                    ev.v_post = 2.0 * h.deriv(t + s_hit) - (v - g * s_hit);
                    return ev;
                }
                s0 = (v + std::sqrt(disc)) / g - 1e-6;
            }
        }
    }
    double s = first_gap_root(h, gap, t, std::max(s0, 1e-10), 10.0);
    BounceEvent ev;
    ev.time = s;
    ev.v_post = 2.0 * h.deriv(t + s) - (v - g * s);
    return ev;
}

BallStepResult bouncing_map(const WallMotion& h, double g, const BallState& state) {
    if (state.v <= 0) throw std::domain_error("bouncing_map: v must be positive");
    BounceEvent ev = bouncing_event(h, g, state.phase, h.value(state.phase), state.v);
    if (ev.v_post <= 0)
        throw std::domain_error("bouncing_map: nonpositive post velocity (energy too low)");
    BallStepResult out;
    out.state.phase = frac(state.phase + ev.time);
    out.state.v = ev.v_post;
    const double band = 0.5 * g;
    out.band_increment = static_cast<std::int64_t>(std::floor(ev.v_post / band)) -
                         static_cast<std::int64_t>(std::floor(state.v / band));
    return out;
}

std::pair<double, double> bouncing_limit_map(const WallMotion& h, double g, double t, double v) {
    if (v <= 0) throw std::domain_error("bouncing_limit_map: v must be positive");
    double t_next = t + 2.0 * v / g;
    return {frac(t_next), v + 2.0 * h.deriv(t_next)};
}

JingVerdict check_jing_condition(const WallMotion& h, double g, double a, double eps) {
    if (a <= g) throw std::invalid_argument("check_jing_condition: requires a > g");
    JingVerdict v;
    bool first = true;
    const auto& breaks = h.breakpoints();
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        for (int k = 0; k <= 1024; ++k) {
            double u = breaks[i] + (breaks[i + 1] - breaks[i]) *
                                       (static_cast<double>(k) + 0.5) / 1025.0;
            double hpp = h.second(u);
            if (first) {
                v.min_hpp = v.max_hpp = hpp;
                first = false;
            }
            v.min_hpp = std::min(v.min_hpp, hpp);
            v.max_hpp = std::max(v.max_hpp, hpp);
        }
    }
    if (v.min_hpp > 0)
        v.clause = JingClause::Convex;
    else if (std::max(std::fabs(v.min_hpp + a), std::fabs(v.max_hpp + a)) <= eps)
        v.clause = JingClause::NearConstant;
    else
        v.clause = JingClause::NotCovered;
    return v;
}

std::string JingVerdict::describe() const {
    switch (clause) {
        case JingClause::Convex: return "h'' > 0 uniformly";
        case JingClause::NearConstant: return "|h'' + a| <= eps uniformly";
        case JingClause::NotCovered: return "not covered";
    }
    return "?";
}

// ------------------------------------------------- bouncing flow system ----

BouncingFlowSystem::BouncingFlowSystem(WallMotion h, double g, double flow_time)
    : h_(std::move(h)), g_(g), flow_time_(flow_time) {
    if (g_ <= 0) throw std::invalid_argument("BouncingFlowSystem: g <= 0");
    if (flow_time_ <= 0) throw std::invalid_argument("BouncingFlowSystem: flow_time <= 0");
}

std::pair<double, double> BouncingFlowSystem::evolve(double x, double v) const {
    double t = 0, remaining = flow_time_;
    if (x < h_.value(0))
        throw std::domain_error("BouncingFlowSystem: start below the wall");
    for (int bounce = 0; bounce < 100000; ++bounce) {
        BounceEvent ev;
        bool collides = true;
        try {
            ev = bouncing_event(h_, g_, t, x, v);
        } catch (const StallError&) {
            collides = false;  // nothing within the search window
            ev.time = remaining;
        }
        if (!collides || ev.time >= remaining) {
            double dt = remaining;
            return {x + v * dt - 0.5 * g_ * dt * dt, v - g_ * dt};
        }
        t += ev.time;
        x = h_.value(t);
        v = ev.v_post;
        remaining -= ev.time;
    }
    throw TrapError("BouncingFlowSystem: bounce budget exhausted");
}

ExtendedState<BouncingFlowSystem::Base> BouncingFlowSystem::step_x(
    const ExtendedState<Base>& x) const {
    double xa = static_cast<double>(x.cell[0]) + x.base.xf;
    double va = static_cast<double>(x.cell[1]) + x.base.vf;
    auto [x2, v2] = evolve(xa, va);
    double fx = std::floor(x2), fv = std::floor(v2);
    return {Base{x2 - fx, v2 - fv},
            LatticeVector{static_cast<std::int64_t>(fx), static_cast<std::int64_t>(fv)}};
}

double BouncingFlowSystem::base_metric(const Base& a, const Base& b) const {
    return std::fabs(a.xf - b.xf) + std::fabs(a.vf - b.vf);
}

}  // namespace latmix
