#ifndef LATMIX_AVERAGES_HPP
#define LATMIX_AVERAGES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "latmix/observables.hpp"
#include "latmix/parallel.hpp"
#include "latmix/stats.hpp"

namespace latmix {

struct EnsembleOptions {
    std::uint64_t seed = 1;
    int workers = 1;
    int batches = kBatches;
};

// Draws a cell uniformly from V.
inline LatticeVector sample_cell(const CubeSpec& V, RngStream& rng) {
    LatticeVector z = V.lo();
    for (int i = 0; i < V.dim(); ++i) z[i] = rng.range(V.lo()[i], V.hi()[i]);
    return z;
}

// Monte Carlo estimate of (1/mu(V)) int_V Phi dmu. Cells are drawn uniformly;
// fibers with non-unit mass are handled by a ratio estimator, which reduces
// to the plain sample mean for product systems.
template <CocycleSystem S>
MeanSe cube_average(const GlobalObservable<S>& phi, const CubeSpec& V, const S& s,
                    std::int64_t N, const EnsembleOptions& opt) {
    if (N < 2) throw std::invalid_argument("cube_average: N < 2");
    if (V.cell_count() < 1) throw std::invalid_argument("cube_average: empty cube");
    auto ranges = batch_ranges(N, opt.batches);
    std::vector<double> num(ranges.size(), 0), den(ranges.size(), 0);
    run_batches(static_cast<int>(ranges.size()), opt.workers, [&](int b) {
        double ns = 0, ds = 0;
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(opt.seed, static_cast<std::uint64_t>(i));
            LatticeVector z = sample_cell(V, rng);
            double m = cell_measure_of(s, z);
            if (m > 0) {
                typename S::Base y = sample_base_in_cell(s, rng, z);
                ns += m * phi.eval(y, z);
            }
            ds += m;
        }
        num[static_cast<std::size_t>(b)] = ns;
        den[static_cast<std::size_t>(b)] = ds;
    });
    double tn = 0, td = 0;
    for (std::size_t b = 0; b < num.size(); ++b) {
        tn += num[b];
        td += den[b];
    }
    MeanSe r;
    r.mean = tn / td;
    // SE from batch-level ratio scatter.
    std::vector<double> ratios;
    ratios.reserve(num.size());
    for (std::size_t b = 0; b < num.size(); ++b)
        if (den[b] > 0) ratios.push_back(num[b] / den[b]);
    if (ratios.size() > 1) {
        double m = mean_of(ratios), ss = 0;
        for (double x : ratios) ss += (x - m) * (x - m);
        r.se = std::sqrt(ss / (static_cast<double>(ratios.size()) *
                               static_cast<double>(ratios.size() - 1)));
    }
    return r;
}

struct MembershipRow {
    std::int64_t size = 0;
    std::string box;  // human-readable box description
    double estimate = 0;
    double se = 0;
    double deviation = 0;  // |estimate - Phi-bar|
};

struct MembershipReport {
    std::string scheme;  // "G_O" or "G_U"
    double phi_bar = 0;
    std::vector<MembershipRow> rows;
    double worst_at_largest = 0;
    double tolerance = 0;
    bool pass = false;
};

// Box-shape parameter for the G_O scheme: product of [a_lo * N, a_hi * N].
struct BoxShape {
    std::vector<double> lo, hi;
};

namespace detail {

inline CubeSpec scaled_box(const BoxShape& shape, std::int64_t size, const LatticeSplit& split) {
    LatticeVector lo = LatticeVector::zero(split.dim());
    LatticeVector hi = LatticeVector::zero(split.dim());
    for (int i = 0; i < split.dim(); ++i) {
        double a = shape.lo[static_cast<std::size_t>(i)];
        double b = shape.hi[static_cast<std::size_t>(i)];
        lo[i] = static_cast<std::int64_t>(std::floor(a * static_cast<double>(size)));
        hi[i] = static_cast<std::int64_t>(std::floor(b * static_cast<double>(size))) - 1;
        if (i < split.d1 && lo[i] < 0) lo[i] = 0;
        if (hi[i] < lo[i]) hi[i] = lo[i];
    }
    return CubeSpec(lo, hi, split);
}

}  // namespace detail

// Finite-size membership certificate for G_O (origin-anchored scaled boxes)
// or G_U (fixed-size boxes at every tested center). Verdict: worst deviation
// from the declared average at the largest size <= tol. Never a proof.
template <CocycleSystem S>
MembershipReport check_global_membership(const GlobalObservable<S>& phi, GlobalClass scheme,
                                         const std::vector<std::int64_t>& size_ladder,
                                         const std::vector<BoxShape>& shapes,
                                         const std::vector<LatticeVector>& centers,
                                         const S& s, std::int64_t N, double tol,
                                         const EnsembleOptions& opt) {
    if (!phi.average)
        throw std::invalid_argument("check_global_membership: Phi-bar undeclared");
    for (std::size_t i = 1; i < size_ladder.size(); ++i)
        if (size_ladder[i] <= size_ladder[i - 1])
            throw std::invalid_argument("check_global_membership: size ladder not increasing");
    MembershipReport rep;
    rep.scheme = scheme == GlobalClass::G_O ? "G_O" : "G_U";
    rep.phi_bar = *phi.average;
    rep.tolerance = tol;
    std::uint64_t salt = 0;
    for (std::int64_t size : size_ladder) {
        double worst = 0;
        auto eval_box = [&](const CubeSpec& box, const std::string& label) {
            EnsembleOptions o = opt;
            o.seed = mix_keys(opt.seed, salt++);
            MeanSe e = cube_average(phi, box, s, N, o);
            MembershipRow row{size, label, e.mean, e.se, std::fabs(e.mean - rep.phi_bar)};
            worst = std::max(worst, row.deviation);
            rep.rows.push_back(std::move(row));
        };
        if (scheme == GlobalClass::G_O) {
            for (const BoxShape& shape : shapes) {
                CubeSpec box = detail::scaled_box(shape, size, s.split());
                eval_box(box, box.lo().str() + ".." + box.hi().str());
            }
        } else {
            for (const LatticeVector& c : centers) {
                CubeSpec box = CubeSpec::centered(c, size / 2, s.split());
                eval_box(box, "center" + c.str());
            }
        }
        rep.worst_at_largest = worst;  // rows are size-ordered; last write wins
    }
    rep.pass = rep.worst_at_largest <= tol;
    return rep;
}

}  // namespace latmix

#endif
