#ifndef LATMIX_COCYCLE_HPP
#define LATMIX_COCYCLE_HPP

#include <concepts>
#include <stdexcept>
#include <string>
#include <utility>

#include "latmix/lattice.hpp"
#include "latmix/rng.hpp"

namespace latmix {

// One application of the base map together with the lattice displacement it
// emits: T(y,z) = (f(y), z + tau(y)).
template <typename B>
struct Step {
    B next;
    LatticeVector displacement;
};

// A lattice extension of a probability-preserving base system. Base points
// are opaque to everything outside the system itself.
//
// Contract:
//   - step(y) returns (f(y), tau(y)); tau is bounded when the system declares
//     finite horizon;
//   - sample_invariant draws i.i.d. base points distributed per nu;
//   - base_metric is a metric on the base space;
//   - split() gives the lattice signature Z_+^{d1} x Z^{d2}.
template <typename S>
concept CocycleSystem = requires(const S& s, const typename S::Base& y, RngStream& rng) {
    typename S::Base;
    { s.split() } -> std::convertible_to<LatticeSplit>;
    { s.step(y) } -> std::convertible_to<Step<typename S::Base>>;
    { s.sample_invariant(rng) } -> std::convertible_to<typename S::Base>;
    { s.base_metric(y, y) } -> std::convertible_to<double>;
};

// Optional capability: systems whose fibers differ between cells (locally
// perturbed configurations, wall columns). cell_measure is the nu-mass of the
// fiber over `z` relative to the reference fiber; sample_cell_base draws from
// that fiber's normalized measure.
template <typename S>
concept CellAware = requires(const S& s, const LatticeVector& z, RngStream& rng) {
    { s.cell_measure(z) } -> std::convertible_to<double>;
    { s.sample_cell_base(rng, z) } -> std::convertible_to<typename S::Base>;
};

// Optional capability: deterministic quadrature of a base observable against
// nu, used where Monte Carlo resolution is insufficient (local-observable
// normalization checks).
template <typename S, typename F>
concept NuQuadrature = requires(const S& s, F f) {
    { s.nu_quadrature(f) } -> std::convertible_to<double>;
};

template <CocycleSystem S>
double cell_measure_of(const S& s, const LatticeVector& z) {
    if constexpr (CellAware<S>) return s.cell_measure(z);
    (void)z;
    return 1.0;
}

template <CocycleSystem S>
typename S::Base sample_base_in_cell(const S& s, RngStream& rng, const LatticeVector& z) {
    if constexpr (CellAware<S>) return s.sample_cell_base(rng, z);
    (void)z;
    return s.sample_invariant(rng);
}

// Point of the extended phase space X = M x Z^d.
template <typename B>
struct ExtendedState {
    B base;
    LatticeVector cell;
};

// Optional capability: full-space stepping for systems whose dynamics are not
// a product over the lattice (locally perturbed configurations, external
// fields with unbounded potential, energy-band bookkeeping).
template <typename S>
concept ExtendedStepper = requires(const S& s, const ExtendedState<typename S::Base>& x) {
    { s.step_x(x) } -> std::convertible_to<ExtendedState<typename S::Base>>;
};

// Optional capability: stepping that can flag a trajectory for exclusion
// (grazing collisions). Flagged trajectories are dropped from ensembles and
// counted in reports.
template <typename S>
concept FlaggedStepper = requires(const S& s, const ExtendedState<typename S::Base>& x, bool& f) {
    { s.step_x_flagged(x, f) } -> std::convertible_to<ExtendedState<typename S::Base>>;
};

// What the estimator suite requires: either the product interface or
// full-space stepping, plus metric and split.
template <typename S>
concept LatticeSystem = requires(const S& s, const typename S::Base& y) {
    typename S::Base;
    { s.split() } -> std::convertible_to<LatticeSplit>;
    { s.base_metric(y, y) } -> std::convertible_to<double>;
} && (CocycleSystem<S> || ExtendedStepper<S>);

inline void check_cell_in_lattice(const LatticeVector& z, const LatticeSplit& split,
                                  const char* who) {
    for (int i = 0; i < split.d1; ++i) {
        if (z[i] < 0)
            throw std::domain_error(std::string(who) + ": cell coordinate " + std::to_string(i) +
                                    " = " + std::to_string(z[i]) +
                                    " left the half-infinite lattice");
    }
}

// T(y,z) = (f(y), z + tau(y)). Cell arithmetic is exact; a displacement that
// leaves the declared lattice is a hard error.
template <CocycleSystem S>
ExtendedState<typename S::Base> extend_step(const S& s, const ExtendedState<typename S::Base>& x) {
    Step<typename S::Base> st = s.step(x.base);
    ExtendedState<typename S::Base> out{std::move(st.next), x.cell + st.displacement};
    check_cell_in_lattice(out.cell, s.split(), "extend_step");
    return out;
}

// tau_n(y) = sum_{j<n} tau(f^j y); tau_0 = 0.
template <CocycleSystem S>
LatticeVector birkhoff_displacement(const S& s, typename S::Base y, std::int64_t n) {
    if (n < 0) throw std::invalid_argument("birkhoff_displacement: n < 0");
    LatticeVector total = LatticeVector::zero(s.split().dim());
    for (std::int64_t j = 0; j < n; ++j) {
        Step<typename S::Base> st = s.step(y);
        total += st.displacement;
        y = std::move(st.next);
    }
    return total;
}

// One full-space step, preferring the system's own step_x.
template <LatticeSystem S>
ExtendedState<typename S::Base> system_step(const S& s, const ExtendedState<typename S::Base>& x) {
    if constexpr (ExtendedStepper<S>) {
        return s.step_x(x);
    } else {
        return extend_step(s, x);
    }
}

template <LatticeSystem S>
ExtendedState<typename S::Base> system_step_flagged(const S& s,
                                                    const ExtendedState<typename S::Base>& x,
                                                    bool& flag) {
    if constexpr (FlaggedStepper<S>) {
        return s.step_x_flagged(x, flag);
    } else {
        flag = false;
        return system_step(s, x);
    }
}

}  // namespace latmix

#endif
