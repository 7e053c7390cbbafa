#ifndef LATMIX_PINGPONG_HPP
#define LATMIX_PINGPONG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "latmix/cocycle.hpp"
#include "latmix/lattice.hpp"

namespace latmix {

// 1-periodic piecewise-polynomial wall profile on [0,1]. Pieces are given in
// ascending powers of (t - left breakpoint); the profile is C^smooth inside
// (0,1) pieces and may have a velocity corner at the integers.
class WallMotion {
public:
    WallMotion(std::vector<double> breakpoints, std::vector<std::vector<double>> coefficients);

    static WallMotion constant(double c);
    // base + beta * t * (1 - t); corner slope jump sigma = 2 beta.
    static WallMotion parabolic_corner(double base, double beta);
    // amp * (t - 1/2)^2: second derivative 2*amp > 0, corner at integers.
    static WallMotion convex_corner(double amp);

    double value(double t) const;
    double deriv(double t) const;
    double second(double t) const;

    double slope_right() const;  // derivative at 0+ (== 1+)
    double slope_left() const;   // derivative at 1-
    double corner_sigma() const { return slope_right() - slope_left(); }

    double min_value() const { return min_value_; }
    double max_value() const { return max_value_; }
    const std::vector<double>& breakpoints() const { return breaks_; }

    WallMotion scaled(double c) const;  // c * profile

private:
    std::size_t piece_of(double u) const;
    std::vector<double> breaks_;
    std::vector<std::vector<double>> coef_;
    double min_value_ = 0, max_value_ = 0;
};

// --------------------------------------------------------------- pingpong --

// Geometry: fixed wall at x = 0, moving wall at x = -l(t); the particle lives
// in between. Elastic rules: fixed wall v -> -v; moving wall v -> 2 w - v with
// w = -dl/dt the wall velocity.
struct PingEvent {
    double time = 0;  // absolute time of the collision
    bool moving_wall = false;
    double v_post = 0;
};

// Next collision of the free flight x + v s against either wall. The moving
// wall root is bracketed on 64 monotonicity probes per smooth piece and then
// bisected to 1e-12. Throws StallError when nothing is found in 10 periods.
PingEvent pingpong_event(const WallMotion& l, double t, double x, double v);

struct PingpongState {
    double phase = 0;  // collision time mod 1
    double velocity = 0;  // post-collisional velocity I > 0
};

struct PingpongStepResult {
    PingpongState state;
    std::int64_t band_increment = 0;  // change of floor(I)
    int events = 0;
};

// The return map: run the event chain past the next integer time, stop at the
// first moving-wall collision. The energy band floor(I) is the lattice
// bookkeeping for extension experiments.
PingpongStepResult pingpong_map(const WallMotion& l, const PingpongState& state);

// Explicit high-energy limit: (tau, I) -> (frac(tau - I), I + Delta * tau').
std::pair<double, double> limit_map(double delta, double tau_phase, double i_value);

// Delta = l(0) * sigma * int_0^1 l^{-2}; adaptive Simpson to relative 1e-10.
double compute_delta(const WallMotion& l);

struct HyperbolicityVerdict {
    bool hyperbolic = false;     // Delta outside (0,4)
    bool boundary = false;       // within 1e-9 of {0, 4}
    bool degenerate_skew = false;  // Delta == 0: skew shift
    std::string describe() const;
};
HyperbolicityVerdict hyperbolicity_check(double delta);

// Base distance on the cylinder T x R.
double cylinder_distance(double phase_a, double i_a, double phase_b, double i_b);

// --------------------------------------------------------- bouncing ball ---

// Particle on R+ in the potential g x above a moving platform h(t).
struct BounceEvent {
    double time = 0;    // flight duration s
    double v_post = 0;  // 2 h'(t+s) - (v - g s)
};

// Smallest s > 0 with x + v s - g s^2/2 = h(t+s); piecewise bracketing plus
// bisection to 1e-12. Throws StallError after 10 empty periods.
BounceEvent bouncing_event(const WallMotion& h, double g, double t, double x, double v);

struct BallState {
    double phase = 0;
    double v = 0;  // post-collisional upward speed > 0
};

struct BallStepResult {
    BallState state;
    std::int64_t band_increment = 0;  // change of floor(v / (g/2))
};

// Collision map of the bouncing ball in (phase, v) coordinates.
BallStepResult bouncing_map(const WallMotion& h, double g, const BallState& state);

// Explicit limit: T(t,v) = (t + 2v/g, v + 2 h'(t + 2v/g)); phase returned
// mod 1.
std::pair<double, double> bouncing_limit_map(const WallMotion& h, double g, double t, double v);

enum class JingClause { Convex, NearConstant, NotCovered };
struct JingVerdict {
    JingClause clause = JingClause::NotCovered;
    double min_hpp = 0, max_hpp = 0;  // range of h'' over the sample grid
    std::string describe() const;
};
// Samples h'' on a fine grid of (0,1); requires a > g.
JingVerdict check_jing_condition(const WallMotion& h, double g, double a, double eps);

// ------------------------------------------------- bouncing flow system ----

// The continuous-time bouncing ball as a lattice system: cells are the unit
// boxes of the (x, v) plane and one "step" is the flow by a fixed time T
// started at wall phase 0. Used to probe cube averages of the flow.
class BouncingFlowSystem {
public:
    struct Base {
        double xf = 0, vf = 0;  // fractional parts of (x, v)
    };

    BouncingFlowSystem(WallMotion h, double g, double flow_time);

    LatticeSplit split() const { return {0, 2}; }
    ExtendedState<Base> step_x(const ExtendedState<Base>& x) const;
    Base sample_cell_base(RngStream& rng, const LatticeVector&) const {
        return Base{rng.uniform01(), rng.uniform01()};
    }
    double cell_measure(const LatticeVector&) const { return 1.0; }
    double base_metric(const Base& a, const Base& b) const;

    // Absolute-coordinate flow used by step_x: evolves (x, v) from time 0 by
    // flow_time through the bounce events.
    std::pair<double, double> evolve(double x, double v) const;

    double flow_time() const { return flow_time_; }
    double gravity() const { return g_; }
    const WallMotion& wall() const { return h_; }

private:
    WallMotion h_;
    double g_;
    double flow_time_;
};

}  // namespace latmix

#endif
