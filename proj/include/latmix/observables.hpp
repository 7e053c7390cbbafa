#ifndef LATMIX_OBSERVABLES_HPP
#define LATMIX_OBSERVABLES_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latmix/cocycle.hpp"
#include "latmix/errors.hpp"
#include "latmix/lattice.hpp"
#include "latmix/stats.hpp"

namespace latmix {

// Observable on the base space M, psi in C(M).
template <CocycleSystem S>
struct BaseObservable {
    std::string name = "psi";
    std::function<double(const typename S::Base&)> eval;
    double bound = 1.0;                   // |psi| <= bound
    std::optional<double> nu_mean;        // closed-form nu(psi) when known
};

template <CocycleSystem S>
BaseObservable<S> const_base_observable(double c) {
    return BaseObservable<S>{"const", [c](const typename S::Base&) { return c; }, std::fabs(c), c};
}

enum class GlobalClass { G_O, G_U, Unknown };

// Bounded uniformly continuous observable on X = M x Z^d with (possibly
// declared) infinite-volume average.
template <CocycleSystem S>
struct GlobalObservable {
    std::string name = "Phi";
    std::function<double(const typename S::Base&, const LatticeVector&)> eval;
    double bound = 1.0;
    // modulus-of-continuity bound: |Phi(x)-Phi(x')| <= modulus(dist); optional,
    // only exercised by membership spot checks.
    std::function<double(double)> modulus;
    std::optional<double> average;  // Phi-bar; empty means "to be estimated"
    GlobalClass cls = GlobalClass::Unknown;
};

// One weighted cell of a local observable.
template <CocycleSystem S>
struct CellWeight {
    std::function<double(const typename S::Base&)> w;
    double sup_bound = 1.0;   // envelope on |w|; rejection envelope
    double lipschitz = 0.0;   // declared Lipschitz constant w.r.t. base_metric
    std::optional<double> nu_mean;  // closed-form per-fiber mean when known
};

// Compactly supported observable: finitely many cells, each with a weight
// function on M. `nonnegative` is the declared sign.
template <CocycleSystem S>
struct LocalObservable {
    std::string name = "phi";
    std::vector<std::pair<LatticeVector, CellWeight<S>>> cells;
    bool nonnegative = false;
};

// Indicator of one full cell; per-fiber mean is exactly 1.
template <CocycleSystem S>
LocalObservable<S> cell_indicator(const LatticeVector& z) {
    CellWeight<S> w;
    w.w = [](const typename S::Base&) { return 1.0; };
    w.sup_bound = 1.0;
    w.lipschitz = 0.0;
    w.nu_mean = 1.0;
    LocalObservable<S> obs;
    obs.name = "cell_indicator" + z.str();
    obs.cells.emplace_back(z, std::move(w));
    obs.nonnegative = true;
    return obs;
}

// Mean of a cell weight against the fiber's normalized invariant measure.
// Order of preference: declared closed form, system quadrature, Monte Carlo
// with the documented budget (default 1e6 draws).
template <CocycleSystem S>
double cell_weight_mean(const S& s, const CellWeight<S>& cw, std::uint64_t seed,
                        std::int64_t mc_budget = 1000000) {
    if (cw.nu_mean) return *cw.nu_mean;
    if constexpr (NuQuadrature<S, std::function<double(const typename S::Base&)>>) {
        return s.nu_quadrature(cw.w);
    } else {
        RngStream rng = RngStream::fork(seed, 0x6d65616eull);
        double sum = 0;
        for (std::int64_t i = 0; i < mc_budget; ++i) sum += cw.w(s.sample_invariant(rng));
        return sum / static_cast<double>(mc_budget);
    }
}

// nu-mass of a local observable: sum over cells of fiber mass x weight mean.
template <CocycleSystem S>
double local_mass(const S& s, const LocalObservable<S>& phi, std::uint64_t seed) {
    double m = 0;
    for (const auto& [z, cw] : phi.cells) m += cell_measure_of(s, z) * cell_weight_mean(s, cw, seed);
    return m;
}

// One term of the difference decomposition: coefficient (signed) times a
// nonnegative piece normalized to mass one on its single cell.
template <CocycleSystem S>
struct LocalPiece {
    double coefficient = 0;
    LatticeVector cell;
    CellWeight<S> weight;  // nonnegative, fiber mean 1
};

// Splits phi cell by cell into nonnegative normalized pieces:
// w = R||w|| * 1 - (R||w|| - w), each part divided by its own mean. A weight
// that is declared nonnegative stays a single piece. Identically zero input
// gives an empty list.
template <CocycleSystem S>
std::vector<LocalPiece<S>> decompose_local(const S& s, const LocalObservable<S>& phi,
                                           double envelope_factor = 10.0,
                                           std::uint64_t seed = 0x6465636full) {
    std::vector<LocalPiece<S>> out;
    for (const auto& [z, cw] : phi.cells) {
        if (cw.sup_bound == 0) continue;
        const double mass = cell_measure_of(s, z);
        if (phi.nonnegative) {
            double mean = cell_weight_mean(s, cw, seed);
            if (mean <= 0) continue;  // zero weight on this cell
            LocalPiece<S> p;
            p.coefficient = mean * mass;
            p.cell = z;
            auto f = cw.w;
            p.weight.w = [f, mean](const typename S::Base& y) { return f(y) / mean; };
            p.weight.sup_bound = cw.sup_bound / mean;
            p.weight.lipschitz = cw.lipschitz / mean;
            if (cw.nu_mean) p.weight.nu_mean = 1.0;
            out.push_back(std::move(p));
            continue;
        }
        const double top = envelope_factor * cw.sup_bound;  // R ||w||
        double mean = cell_weight_mean(s, cw, seed);
        // piece 1: full-cell indicator, coefficient R||w||
        LocalPiece<S> p1;
        p1.coefficient = top * mass;
        p1.cell = z;
        p1.weight.w = [](const typename S::Base&) { return 1.0; };
        p1.weight.sup_bound = 1.0;
        p1.weight.lipschitz = 0.0;
        p1.weight.nu_mean = 1.0;
        out.push_back(std::move(p1));
        // piece 2: (R||w|| - w) normalized, entering with a negative coefficient
        const double norm = top - mean;  // > 0 since |mean| <= ||w|| < R||w||
        LocalPiece<S> p2;
        p2.coefficient = -norm * mass;
        p2.cell = z;
        auto f = cw.w;
        p2.weight.w = [f, top, norm](const typename S::Base& y) { return (top - f(y)) / norm; };
        p2.weight.sup_bound = (top + cw.sup_bound) / norm;
        p2.weight.lipschitz = cw.lipschitz / norm;
        if (cw.nu_mean) p2.weight.nu_mean = 1.0;
        out.push_back(std::move(p2));
    }
    return out;
}

// Draws a base point of the given cell distributed as weight * nu(normalized)
// by rejection against the envelope. Throws SamplerEfficiencyError when the
// acceptance rate drops below 1e-3.
template <CocycleSystem S>
typename S::Base sample_weighted_base(const S& s, const LatticeVector& cell,
                                      const CellWeight<S>& w, RngStream& rng) {
    const int warn_after = 20000;  // 1/1e-3 with margin
    for (int tries = 1;; ++tries) {
        typename S::Base y = sample_base_in_cell(s, rng, cell);
        double val = w.w(y);
        if (val < 0) throw std::domain_error("sample_weighted_base: negative weight");
        if (val > w.sup_bound * (1.0 + 1e-12))
            throw std::domain_error("sample_weighted_base: weight exceeds declared envelope");
        if (rng.uniform01() * w.sup_bound < val) return y;
        if (tries >= warn_after)
            throw SamplerEfficiencyError(
                "sample_weighted_base: acceptance rate below 1e-3; tighten the envelope "
                "(sup_bound) or renormalize the weight");
    }
}

}  // namespace latmix

#endif
