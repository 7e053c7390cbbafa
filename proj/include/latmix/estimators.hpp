#ifndef LATMIX_ESTIMATORS_HPP
#define LATMIX_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "latmix/averages.hpp"
#include "latmix/errors.hpp"
#include "latmix/observables.hpp"
#include "latmix/parallel.hpp"
#include "latmix/reports.hpp"
#include "latmix/stats.hpp"

namespace latmix {

template <typename S>
concept HasSublattice = requires(const S& s) {
    { s.sublattice() } -> std::convertible_to<SublatticeDecl>;
};

template <LatticeSystem S>
SublatticeDecl sublattice_of(const S& s) {
    if constexpr (HasSublattice<S>) {
        return s.sublattice();
    } else {
        return SublatticeDecl::aperiodic_dim(s.split().dim());
    }
}

template <typename S>
concept EnergyTracked = LatticeSystem<S> && requires(const S& s, const typename S::Base& y,
                                                     const LatticeVector& z) {
    { s.kinetic_energy(y, z) } -> std::convertible_to<double>;
};

// Ensemble controls shared by the trajectory estimators. Trajectories start
// in `start_cell` (fiber measure of that cell); `burn_in` steps are applied
// and the cell re-anchored before counting begins (used for field systems
// whose boundary sampler is not exactly invariant).
struct TrajectoryOptions {
    std::uint64_t seed = 1;
    int workers = 1;
    int batches = kBatches;
    std::optional<LatticeVector> start_cell;
    int burn_in = 0;

    EnsembleOptions ensemble() const { return {seed, workers, batches}; }
    LatticeVector start(const LatticeSplit& split) const {
        return start_cell ? *start_cell : LatticeVector::zero(split.dim());
    }
};

// ------------------------------------------------------- covariance/drift --

template <LatticeSystem S>
CovarianceEstimate estimate_covariance_drift(const S& s, std::int64_t n, std::int64_t N,
                                             const TrajectoryOptions& opt) {
    if (n < 1) throw std::invalid_argument("estimate_covariance_drift: n < 1");
    if (N < 100) throw std::invalid_argument("estimate_covariance_drift: N < 100");
    const int d = s.split().dim();
    const LatticeVector z0 = opt.start(s.split());
    auto ranges = batch_ranges(N, opt.batches);
    const std::size_t B = ranges.size();
    std::vector<std::vector<double>> sum(B, std::vector<double>(static_cast<std::size_t>(d), 0));
    std::vector<std::vector<double>> sum2(B,
                                          std::vector<double>(static_cast<std::size_t>(d * d), 0));
    std::vector<std::int64_t> kept(B, 0);

    run_batches(static_cast<int>(B), opt.workers, [&](int b) {
        auto& sb = sum[static_cast<std::size_t>(b)];
        auto& qb = sum2[static_cast<std::size_t>(b)];
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(opt.seed, static_cast<std::uint64_t>(i));
            ExtendedState<typename S::Base> x{sample_base_in_cell(s, rng, z0), z0};
            bool drop = false;
            for (int k = 0; k < opt.burn_in && !drop; ++k) x = system_step_flagged(s, x, drop);
            if (drop) continue;
            const LatticeVector anchor = x.cell;
            for (std::int64_t k = 0; k < n && !drop; ++k) {
                bool f = false;
                x = system_step_flagged(s, x, f);
                drop = drop || f;
            }
            if (drop) continue;
            LatticeVector tau = x.cell - anchor;
            ++kept[static_cast<std::size_t>(b)];
            for (int a = 0; a < d; ++a) {
                double ta = static_cast<double>(tau[a]);
                sb[static_cast<std::size_t>(a)] += ta;
                for (int c = 0; c < d; ++c)
                    qb[static_cast<std::size_t>(a * d + c)] += ta * static_cast<double>(tau[c]);
            }
        }
    });

    // statistic from pooled (count, sum, sum2): drift = mean/n, sigma = cov/n
    auto stat = [&](const std::vector<double>& sm, const std::vector<double>& q2, double cnt,
                    std::vector<double>& drift, std::vector<double>& sigma) {
        drift.assign(static_cast<std::size_t>(d), 0);
        sigma.assign(static_cast<std::size_t>(d * d), 0);
        if (cnt < 2) return;
        for (int a = 0; a < d; ++a) drift[static_cast<std::size_t>(a)] =
            sm[static_cast<std::size_t>(a)] / cnt / static_cast<double>(n);
        for (int a = 0; a < d; ++a) {
            for (int c = 0; c < d; ++c) {
                double ma = sm[static_cast<std::size_t>(a)] / cnt;
                double mc = sm[static_cast<std::size_t>(c)] / cnt;
                double cov = (q2[static_cast<std::size_t>(a * d + c)] - cnt * ma * mc) / (cnt - 1);
                sigma[static_cast<std::size_t>(a * d + c)] = cov / static_cast<double>(n);
            }
        }
    };

    std::vector<double> tot_sum(static_cast<std::size_t>(d), 0),
        tot_sum2(static_cast<std::size_t>(d * d), 0);
    double tot_n = 0;
    for (std::size_t b = 0; b < B; ++b) {
        tot_n += static_cast<double>(kept[b]);
        for (int a = 0; a < d; ++a) tot_sum[static_cast<std::size_t>(a)] += sum[b][static_cast<std::size_t>(a)];
        for (int a = 0; a < d * d; ++a)
            tot_sum2[static_cast<std::size_t>(a)] += sum2[b][static_cast<std::size_t>(a)];
    }
    if (tot_n < 2) throw std::runtime_error("estimate_covariance_drift: all trajectories dropped");

    CovarianceEstimate est;
    est.dim = d;
    est.n = n;
    est.samples = static_cast<std::int64_t>(tot_n);
    stat(tot_sum, tot_sum2, tot_n, est.drift, est.sigma);

    // jackknife over batches
    std::vector<std::vector<double>> jd(B), js(B);
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> sm = tot_sum, q2 = tot_sum2;
        double cnt = tot_n - static_cast<double>(kept[b]);
        for (int a = 0; a < d; ++a) sm[static_cast<std::size_t>(a)] -= sum[b][static_cast<std::size_t>(a)];
        for (int a = 0; a < d * d; ++a)
            q2[static_cast<std::size_t>(a)] -= sum2[b][static_cast<std::size_t>(a)];
        stat(sm, q2, cnt, jd[b], js[b]);
    }
    est.drift_se.assign(static_cast<std::size_t>(d), 0);
    est.sigma_se.assign(static_cast<std::size_t>(d * d), 0);
    for (int a = 0; a < d; ++a) {
        std::vector<double> th;
        th.reserve(B);
        for (std::size_t b = 0; b < B; ++b) th.push_back(jd[b][static_cast<std::size_t>(a)]);
        double m = mean_of(th), ss = 0;
        for (double t : th) ss += (t - m) * (t - m);
        est.drift_se[static_cast<std::size_t>(a)] =
            std::sqrt(ss * (static_cast<double>(B - 1) / static_cast<double>(B)));
    }
    for (int a = 0; a < d * d; ++a) {
        std::vector<double> th;
        th.reserve(B);
        for (std::size_t b = 0; b < B; ++b) th.push_back(js[b][static_cast<std::size_t>(a)]);
        double m = mean_of(th), ss = 0;
        for (double t : th) ss += (t - m) * (t - m);
        est.sigma_se[static_cast<std::size_t>(a)] =
            std::sqrt(ss * (static_cast<double>(B - 1) / static_cast<double>(B)));
    }
    for (int a = 0; a < d; ++a) {
        double var = est.sigma[static_cast<std::size_t>(a * d + a)];
        if (var <= 4 * est.sigma_se[static_cast<std::size_t>(a * d + a)] && var < 1e-9)
            est.degenerate_axes.push_back(a);
    }
    return est;
}

// --------------------------------------------------------------- the MLLT --

struct RescaledBox {
    std::vector<double> lo, hi;
    double volume() const {
        double v = 1;
        for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
        return v;
    }
    bool contains(const std::vector<double>& z) const {
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (z[i] < lo[i] || z[i] > hi[i]) return false;
        return true;
    }
};

struct MlltWindow {
    double scale = 0;  // L_n; 0 means sqrt(n)
    double radius = std::numeric_limits<double>::infinity();  // K
    std::vector<RescaledBox> exclusion;  // B_{eps,R}, rescaled coordinates
    bool shift_by_drift = false;         // center at D_n = n * estimated drift
    double resolved_fraction = 0.01;     // verdict cells: reference >= frac * max
    double rel_tolerance = 0.1;
    bool validate_periodicity = true;
};

namespace detail {

template <LatticeSystem S>
void mllt_validate_periodicity(const S& s, const SublatticeDecl& decl, std::int64_t N,
                               const TrajectoryOptions& opt) {
    // Occupancy of the mod-2 residue classes (per axis, plus the diagonal
    // class in 2d) at n = 16: an empty class betrays an undeclared
    // sublattice.
    const int d = s.split().dim();
    const LatticeVector z0 = opt.start(s.split());
    const std::int64_t probes = std::min<std::int64_t>(N, 20000);
    std::vector<std::array<std::int64_t, 2>> axis(static_cast<std::size_t>(d), {0, 0});
    std::array<std::int64_t, 2> diag{0, 0};
    RngStream rng = RngStream::fork(opt.seed, 0x70657269ull);
    for (std::int64_t i = 0; i < probes; ++i) {
        ExtendedState<typename S::Base> x{sample_base_in_cell(s, rng, z0), z0};
        bool drop = false;
        for (int k = 0; k < 16 && !drop; ++k) x = system_step_flagged(s, x, drop);
        if (drop) continue;
        LatticeVector tau = x.cell - z0;
        std::int64_t sum = 0;
        for (int a = 0; a < d; ++a) {
            ++axis[static_cast<std::size_t>(a)][static_cast<std::size_t>(((tau[a] % 2) + 2) % 2)];
            sum += tau[a];
        }
        ++diag[static_cast<std::size_t>(((sum % 2) + 2) % 2)];
    }
    for (int a = 0; a < d; ++a) {
        if (axis[static_cast<std::size_t>(a)][0] == 0 || axis[static_cast<std::size_t>(a)][1] == 0)
            throw ConfigError(
                "estimate_mllt: lattice periodicity detected on axis " + std::to_string(a) +
                " but the system is declared aperiodic; declare the sublattice");
    }
    if (d == 2 && (diag[0] == 0 || diag[1] == 0))
        throw ConfigError(
            "estimate_mllt: checkerboard periodicity detected but the system is declared "
            "aperiodic; declare the sublattice");
}

}  // namespace detail

template <LatticeSystem S>
MlltReport estimate_mllt(const S& s, const BaseObservable<S>& psi1, const BaseObservable<S>& psi2,
                         std::int64_t n, const MlltWindow& window, std::int64_t N,
                         const TrajectoryOptions& opt) {
    if (N < 10000) throw std::invalid_argument("estimate_mllt: N < 1e4");
    if (n < 1) throw std::invalid_argument("estimate_mllt: n < 1");
    const int d = s.split().dim();
    const LatticeVector z0 = opt.start(s.split());
    const SublatticeDecl decl = sublattice_of(s);
    if (std::isfinite(window.radius)) {
        for (const RescaledBox& box : window.exclusion) {
            for (std::size_t i = 0; i < box.lo.size(); ++i)
                if (box.lo[i] < -window.radius || box.hi[i] > window.radius)
                    throw std::invalid_argument(
                        "estimate_mllt: exclusion box outside the window radius");
        }
    }
    if (decl.aperiodic() && window.validate_periodicity && n >= 16)
        detail::mllt_validate_periodicity(s, decl, N, opt);

    using CellMap = std::unordered_map<LatticeVector, std::pair<double, std::int64_t>,
                                       LatticeVectorHash>;
    auto ranges = batch_ranges(N, opt.batches);
    const std::size_t B = ranges.size();
    std::vector<CellMap> maps(B);
    std::vector<std::int64_t> kept(B, 0), dropped(B, 0);
    std::vector<std::vector<double>> tsum(B, std::vector<double>(static_cast<std::size_t>(d), 0));
    std::vector<std::vector<double>> tsum2(B,
                                           std::vector<double>(static_cast<std::size_t>(d * d), 0));

    run_batches(static_cast<int>(B), opt.workers, [&](int b) {
        CellMap& cm = maps[static_cast<std::size_t>(b)];
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(opt.seed, static_cast<std::uint64_t>(i));
            ExtendedState<typename S::Base> x{sample_base_in_cell(s, rng, z0), z0};
            bool drop = false;
            for (int k = 0; k < opt.burn_in && !drop; ++k) x = system_step_flagged(s, x, drop);
            LatticeVector anchor = x.cell;
            double w1 = drop ? 0 : psi1.eval(x.base);
            for (std::int64_t k = 0; k < n && !drop; ++k) {
                bool f = false;
                x = system_step_flagged(s, x, f);
                drop = drop || f;
            }
            if (drop) {
                ++dropped[static_cast<std::size_t>(b)];
                continue;
            }
            ++kept[static_cast<std::size_t>(b)];
            LatticeVector tau = x.cell - anchor;
            if (!decl.allows(tau, n))
                throw ConfigError("estimate_mllt: displacement " + tau.str() +
                                  " violates the declared sublattice at n=" + std::to_string(n));
            auto& slot = cm[tau];
            slot.first += w1 * psi2.eval(x.base);
            slot.second += 1;
            for (int a = 0; a < d; ++a) {
                double ta = static_cast<double>(tau[a]);
                tsum[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] += ta;
                for (int c = 0; c < d; ++c)
                    tsum2[static_cast<std::size_t>(b)][static_cast<std::size_t>(a * d + c)] +=
                        ta * static_cast<double>(tau[c]);
            }
        }
    });

    MlltReport rep;
    rep.n = n;
    rep.scale = window.scale > 0 ? window.scale : std::sqrt(static_cast<double>(n));
    rep.samples = N;
    for (std::size_t b = 0; b < B; ++b) {
        rep.kept += kept[b];
        rep.dropped += dropped[b];
    }
    if (rep.kept < N / 2)
        throw std::runtime_error("estimate_mllt: more than half of the ensemble was dropped");

    // same-run covariance / drift
    {
        CovarianceEstimate& cov = rep.cov;
        cov.dim = d;
        cov.n = n;
        cov.samples = rep.kept;
        std::vector<double> ts(static_cast<std::size_t>(d), 0),
            ts2(static_cast<std::size_t>(d * d), 0);
        for (std::size_t b = 0; b < B; ++b) {
            for (int a = 0; a < d; ++a) ts[static_cast<std::size_t>(a)] += tsum[b][static_cast<std::size_t>(a)];
            for (int a = 0; a < d * d; ++a)
                ts2[static_cast<std::size_t>(a)] += tsum2[b][static_cast<std::size_t>(a)];
        }
        double cnt = static_cast<double>(rep.kept);
        cov.drift.assign(static_cast<std::size_t>(d), 0);
        cov.sigma.assign(static_cast<std::size_t>(d * d), 0);
        cov.drift_se.assign(static_cast<std::size_t>(d), 0);
        cov.sigma_se.assign(static_cast<std::size_t>(d * d), 0);
        for (int a = 0; a < d; ++a)
            cov.drift[static_cast<std::size_t>(a)] = ts[static_cast<std::size_t>(a)] / cnt /
                                                     static_cast<double>(n);
        for (int a = 0; a < d; ++a) {
            for (int c = 0; c < d; ++c) {
                double ma = ts[static_cast<std::size_t>(a)] / cnt;
                double mc = ts[static_cast<std::size_t>(c)] / cnt;
                cov.sigma[static_cast<std::size_t>(a * d + c)] =
                    (ts2[static_cast<std::size_t>(a * d + c)] - cnt * ma * mc) / (cnt - 1) /
                    static_cast<double>(n);
            }
        }
    }

    // nu(psi) by declared value or an independent nu-sample
    auto nu_mean = [&](const BaseObservable<S>& psi, std::uint64_t label) {
        if (psi.nu_mean) return *psi.nu_mean;
        RngStream rng = RngStream::fork(opt.seed, label);
        const std::int64_t m = std::min<std::int64_t>(N, 1000000);
        double sum = 0;
        for (std::int64_t i = 0; i < m; ++i) sum += psi.eval(sample_base_in_cell(s, rng, z0));
        return sum / static_cast<double>(m);
    };
    rep.nu_psi1 = nu_mean(psi1, 0x6e753141ull);
    rep.nu_psi2 = nu_mean(psi2, 0x6e753242ull);

    // center of the window
    rep.shift.assign(static_cast<std::size_t>(d), 0.0);
    if (window.shift_by_drift)
        for (int a = 0; a < d; ++a)
            rep.shift[static_cast<std::size_t>(a)] =
                static_cast<double>(n) * rep.cov.drift[static_cast<std::size_t>(a)];
    for (const RescaledBox& box : window.exclusion) rep.exclusion_volume += box.volume();
    rep.sublattice_index = decl.index();

    SmallMatrix sigma = rep.cov.sigma_matrix();
    const double ld = std::pow(rep.scale, d);

    // merge cells in batch order, then lay out sorted
    std::map<LatticeVector, std::pair<double, std::int64_t>> merged;
    for (std::size_t b = 0; b < B; ++b)
        for (const auto& [z, slot] : maps[b]) {
            auto& m = merged[z];
            m.first += slot.first;
            m.second += slot.second;
        }

    const double keptd = static_cast<double>(rep.kept);
    double max_ref = 0;
    for (const auto& [z, slot] : merged) {
        MlltCellRow row;
        row.cell = z;
        row.empirical = ld * slot.first / keptd;
        row.plain_prob = static_cast<double>(slot.second) / keptd;
        std::vector<double> resc(static_cast<std::size_t>(d), 0);
        for (int a = 0; a < d; ++a)
            resc[static_cast<std::size_t>(a)] =
                (static_cast<double>(z[a]) - rep.shift[static_cast<std::size_t>(a)]) / rep.scale;
        row.reference = static_cast<double>(rep.sublattice_index) *
                        gaussian_density(resc.data(), d, sigma) * rep.nu_psi1 * rep.nu_psi2;
        max_ref = std::max(max_ref, row.reference);
        for (const RescaledBox& box : window.exclusion)
            if (box.contains(resc)) row.excluded = true;
        double rinf = 0;
        for (double r : resc) rinf = std::max(rinf, std::fabs(r));
        if (rinf > window.radius) row.excluded = true;
        rep.cells.push_back(std::move(row));
        rep.mass_total += rep.cells.back().plain_prob;
        rep.apriori_stat = std::max(rep.apriori_stat, ld * rep.cells.back().plain_prob);
    }

    // per-cell SE from batch scatter
    {
        std::size_t idx = 0;
        for (auto& row : rep.cells) {
            std::vector<double> vals;
            vals.reserve(B);
            for (std::size_t b = 0; b < B; ++b) {
                if (kept[b] == 0) continue;
                auto it = maps[b].find(row.cell);
                double w = it == maps[b].end() ? 0.0 : it->second.first;
                vals.push_back(ld * w / static_cast<double>(kept[b]));
            }
            if (vals.size() > 1) {
                double m = mean_of(vals), ss = 0;
                for (double v : vals) ss += (v - m) * (v - m);
                row.se = std::sqrt(ss / (static_cast<double>(vals.size()) *
                                         static_cast<double>(vals.size() - 1)));
            }
            ++idx;
        }
    }

    for (auto& row : rep.cells) {
        row.resolved = row.reference >= window.resolved_fraction * max_ref;
        if (row.resolved && !row.excluded && max_ref > 0)
            rep.sup_rel_deviation = std::max(
                rep.sup_rel_deviation, std::fabs(row.empirical - row.reference) / max_ref);
    }
    rep.tolerance = window.rel_tolerance;
    rep.pass = rep.sup_rel_deviation <= window.rel_tolerance;
    return rep;
}

// ------------------------------------------------------------ local-global --

template <LatticeSystem S>
CorrelationCurve estimate_local_global(const S& s, const LocalObservable<S>& phi,
                                       const GlobalObservable<S>& Phi,
                                       const std::vector<std::int64_t>& n_list, std::int64_t N,
                                       const EnsembleOptions& opt, double tolerance = 0.0,
                                       double envelope_factor = 10.0) {
    if (!Phi.average)
        throw std::invalid_argument("estimate_local_global: Phi-bar undeclared; estimate it first");
    if (n_list.empty()) throw std::invalid_argument("estimate_local_global: empty n list");
    std::vector<std::int64_t> ns = n_list;
    std::sort(ns.begin(), ns.end());
    auto pieces = decompose_local(s, phi, envelope_factor, opt.seed);
    CorrelationCurve curve;
    curve.phi_bar = *Phi.average;
    for (const auto& p : pieces) curve.mu_phi += p.coefficient;
    curve.target = curve.mu_phi * curve.phi_bar;
    curve.tolerance = tolerance;
    if (pieces.empty()) {  // phi identically zero
        for (std::int64_t n : ns) curve.points.push_back({n, 0.0, 0.0});
        curve.pass = std::fabs(curve.target) <= tolerance;
        return curve;
    }

    auto ranges = batch_ranges(N, opt.batches);
    const std::size_t B = ranges.size();
    const std::size_t K = ns.size();
    // piece-major accumulators [piece][n][batch]
    std::vector<std::vector<std::vector<double>>> acc(
        pieces.size(), std::vector<std::vector<double>>(K, std::vector<double>(B, 0)));
    std::vector<std::vector<std::int64_t>> cnt(pieces.size(), std::vector<std::int64_t>(B, 0));
    std::int64_t dropped_total = 0;

    for (std::size_t p = 0; p < pieces.size(); ++p) {
        const auto& piece = pieces[p];
        std::uint64_t piece_seed = mix_keys(opt.seed, 0x70696563ull + p);
        std::vector<std::int64_t> dropped(B, 0);
        run_batches(static_cast<int>(B), opt.workers, [&](int b) {
            for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
                 i < ranges[static_cast<std::size_t>(b)].end; ++i) {
                RngStream rng = RngStream::fork(piece_seed, static_cast<std::uint64_t>(i));
                typename S::Base y = sample_weighted_base(s, piece.cell, piece.weight, rng);
                ExtendedState<typename S::Base> x{std::move(y), piece.cell};
                bool drop = false;
                std::size_t next = 0;
                std::vector<double> vals(K, 0.0);
                for (std::int64_t k = 0; next < K && !drop; ++k) {
                    if (k == ns[next]) {
                        vals[next] = Phi.eval(x.base, x.cell);
                        ++next;
                        if (next == K) break;
                    }
                    bool f = false;
                    x = system_step_flagged(s, x, f);
                    drop = drop || f;
                }
                if (drop) {
                    ++dropped[static_cast<std::size_t>(b)];
                    continue;
                }
                ++cnt[p][static_cast<std::size_t>(b)];
                for (std::size_t j = 0; j < K; ++j)
                    acc[p][j][static_cast<std::size_t>(b)] += vals[j];
            }
        });
        for (std::size_t b = 0; b < B; ++b) dropped_total += dropped[b];
    }
    curve.dropped = dropped_total;

    for (std::size_t j = 0; j < K; ++j) {
        double est = 0, var = 0;
        for (std::size_t p = 0; p < pieces.size(); ++p) {
            MeanSe ms = combine_batch_means(acc[p][j], cnt[p]);
            est += pieces[p].coefficient * ms.mean;
            var += pieces[p].coefficient * pieces[p].coefficient * ms.se * ms.se;
        }
        curve.points.push_back({ns[j], est, std::sqrt(var)});
    }
    const CorrelationPoint& last = curve.points.back();
    curve.pass = std::fabs(last.estimate - curve.target) <= tolerance + 4 * last.se;
    return curve;
}

// ----------------------------------------------------------- global-global --

template <LatticeSystem S>
CubeMixReport estimate_global_global(const S& s, const GlobalObservable<S>& Phi1,
                                     const GlobalObservable<S>& Phi2,
                                     const std::vector<std::int64_t>& n_list,
                                     const std::vector<std::int64_t>& cube_ladder,
                                     const std::vector<LatticeVector>& centers, std::int64_t N,
                                     const EnsembleOptions& opt, double tolerance,
                                     std::optional<double> target_override = {}) {
    if (n_list.empty() || cube_ladder.empty())
        throw std::invalid_argument("estimate_global_global: empty ladder");
    std::vector<std::int64_t> ns = n_list;
    std::sort(ns.begin(), ns.end());
    CubeMixReport rep;
    if (target_override) {
        rep.target = *target_override;
    } else {
        if (!Phi1.average || !Phi2.average)
            throw std::invalid_argument("estimate_global_global: averages undeclared");
        rep.target = *Phi1.average * *Phi2.average;
    }
    rep.centering_policy = "origin-anchored (G_O) plus centers (G_U)";
    rep.tolerance = tolerance;
    const std::size_t K = ns.size();
    const LatticeVector origin = LatticeVector::zero(s.split().dim());

    std::uint64_t salt = 0;
    for (std::int64_t L : cube_ladder) {
        struct Box {
            std::string scheme;
            LatticeVector center;
            CubeSpec cube;
        };
        std::vector<Box> boxes;
        boxes.push_back({"G_O", origin, CubeSpec::centered(origin, L, s.split())});
        for (const LatticeVector& c : centers)
            boxes.push_back({"G_U", c, CubeSpec::centered(c, L, s.split())});
        for (const Box& box : boxes) {
            auto ranges = batch_ranges(N, opt.batches);
            const std::size_t B = ranges.size();
            std::vector<std::vector<double>> num(K, std::vector<double>(B, 0));
            std::vector<double> den(B, 0);
            std::vector<std::int64_t> good(B, 0), dropped(B, 0);
            std::uint64_t box_seed = mix_keys(opt.seed, 0x67676d00ull + salt++);
            run_batches(static_cast<int>(B), opt.workers, [&](int b) {
                for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
                     i < ranges[static_cast<std::size_t>(b)].end; ++i) {
                    RngStream rng = RngStream::fork(box_seed, static_cast<std::uint64_t>(i));
                    LatticeVector z = sample_cell(box.cube, rng);
                    double m = cell_measure_of(s, z);
                    den[static_cast<std::size_t>(b)] += m;
                    if (m <= 0) continue;
                    ExtendedState<typename S::Base> x{sample_base_in_cell(s, rng, z), z};
                    double phi1 = Phi1.eval(x.base, x.cell);
                    bool drop = false;
                    std::size_t next = 0;
                    std::vector<double> vals(K, 0.0);
                    for (std::int64_t k = 0; next < K && !drop; ++k) {
                        if (k == ns[next]) {
                            vals[next] = phi1 * Phi2.eval(x.base, x.cell);
                            ++next;
                            if (next == K) break;
                        }
                        bool f = false;
                        x = system_step_flagged(s, x, f);
                        drop = drop || f;
                    }
                    if (drop) {
                        ++dropped[static_cast<std::size_t>(b)];
                        den[static_cast<std::size_t>(b)] -= m;  // excluded entirely
                        continue;
                    }
                    ++good[static_cast<std::size_t>(b)];
                    for (std::size_t j = 0; j < K; ++j)
                        num[j][static_cast<std::size_t>(b)] += m * vals[j];
                }
            });
            for (std::size_t b = 0; b < B; ++b) rep.dropped += dropped[b];
            for (std::size_t j = 0; j < K; ++j) {
                double tn = 0, td = 0;
                for (std::size_t b = 0; b < B; ++b) {
                    tn += num[j][b];
                    td += den[b];
                }
                CubeMixRow row;
                row.scheme = box.scheme;
                row.n = ns[j];
                row.size = L;
                row.center = box.center;
                row.estimate = td > 0 ? tn / td : 0.0;
                std::vector<double> ratios;
                for (std::size_t b = 0; b < B; ++b)
                    if (den[b] > 0) ratios.push_back(num[j][b] / den[b]);
                if (ratios.size() > 1) {
                    double mm = mean_of(ratios), ss = 0;
                    for (double r : ratios) ss += (r - mm) * (r - mm);
                    row.se = std::sqrt(ss / (static_cast<double>(ratios.size()) *
                                             static_cast<double>(ratios.size() - 1)));
                }
                row.deviation = std::fabs(row.estimate - rep.target);
                rep.rows.push_back(std::move(row));
            }
        }
    }
    const std::int64_t maxL = *std::max_element(cube_ladder.begin(), cube_ladder.end());
    const std::int64_t maxN = ns.back();
    for (const auto& row : rep.rows) {
        if (row.size == maxL && row.n == maxN) {
            rep.worst_at_largest = std::max(rep.worst_at_largest, row.deviation);
            rep.worst_se = std::max(rep.worst_se, row.se);
        }
    }
    rep.pass = rep.worst_at_largest <= tolerance + 4 * rep.worst_se;
    return rep;
}

// ------------------------------------------------------------- escape (M6) --

template <LatticeSystem S>
EscapeReport escape_fraction(const S& s, const LocalObservable<S>& initial, double radius,
                             const std::vector<std::int64_t>& n_list, std::int64_t N,
                             const EnsembleOptions& opt, double threshold = 1.0) {
    if (n_list.empty()) throw std::invalid_argument("escape_fraction: empty n list");
    std::vector<std::int64_t> ns = n_list;
    std::sort(ns.begin(), ns.end());
    auto pieces = decompose_local(s, initial, 10.0, opt.seed);
    if (pieces.empty()) throw std::invalid_argument("escape_fraction: empty initial measure");
    double total_mass = 0;
    for (const auto& p : pieces) {
        if (p.coefficient < 0)
            throw std::invalid_argument("escape_fraction: initial measure must be nonnegative");
        total_mass += p.coefficient;
    }

    auto ranges = batch_ranges(N, opt.batches);
    const std::size_t B = ranges.size();
    const std::size_t K = ns.size();
    std::vector<std::vector<double>> inside(K, std::vector<double>(B, 0));
    std::vector<std::int64_t> kept(B, 0), dropped(B, 0);

    run_batches(static_cast<int>(B), opt.workers, [&](int b) {
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(opt.seed, static_cast<std::uint64_t>(i));
            // pick a piece proportionally to its mass
            double u = rng.uniform01() * total_mass;
            std::size_t pi = 0;
            double accum = 0;
            for (std::size_t p = 0; p < pieces.size(); ++p) {
                accum += pieces[p].coefficient;
                if (u < accum || p + 1 == pieces.size()) {
                    pi = p;
                    break;
                }
            }
            ExtendedState<typename S::Base> x{
                sample_weighted_base(s, pieces[pi].cell, pieces[pi].weight, rng),
                pieces[pi].cell};
            bool drop = false;
            std::vector<char> in(K, 0);
            std::size_t next = 0;
            for (std::int64_t k = 0; next < K && !drop; ++k) {
                if (k == ns[next]) {
                    in[next] = x.cell.norm_inf() <= static_cast<std::int64_t>(radius) ? 1 : 0;
                    ++next;
                    if (next == K) break;
                }
                try {
                    bool f = false;
                    x = system_step_flagged(s, x, f);
                    drop = drop || f;
                } catch (const TrapError&) {
                    drop = true;
                } catch (const HorizonError&) {
                    drop = true;
                }
            }
            if (drop) {
                ++dropped[static_cast<std::size_t>(b)];
                continue;
            }
            ++kept[static_cast<std::size_t>(b)];
            for (std::size_t j = 0; j < K; ++j)
                inside[j][static_cast<std::size_t>(b)] += in[j];
        }
    });

    EscapeReport rep;
    rep.radius = radius;
    rep.initial_measure = initial.name;
    rep.threshold = threshold;
    for (std::size_t b = 0; b < B; ++b) {
        rep.samples += kept[b];
        rep.dropped += dropped[b];
    }
    for (std::size_t j = 0; j < K; ++j) {
        MeanSe ms = combine_batch_means(inside[j], kept);
        rep.points.push_back({ns[j], ms.mean, ms.se});
    }
    rep.strictly_decreasing = true;
    for (std::size_t j = 1; j < K; ++j)
        if (rep.points[j].fraction >= rep.points[j - 1].fraction) rep.strictly_decreasing = false;
    rep.final_fraction = rep.points.back().fraction;
    rep.pass = rep.strictly_decreasing && rep.final_fraction <= threshold;
    return rep;
}

// ------------------------------------------------------- Galton energy -----

template <EnergyTracked S>
EnergyPathReport galton_energy_paths(const S& s, std::int64_t n, std::vector<double> t_grid,
                                     std::int64_t N, const TrajectoryOptions& opt) {
    if (n < 1) throw std::invalid_argument("galton_energy_paths: n < 1");
    std::sort(t_grid.begin(), t_grid.end());
    if (t_grid.empty() || t_grid.front() < 0 || t_grid.back() > 1)
        throw std::invalid_argument("galton_energy_paths: t grid must lie in [0,1]");
    const LatticeVector z0 = opt.start(s.split());
    const double sq = std::sqrt(static_cast<double>(n));
    std::vector<std::int64_t> marks;
    marks.reserve(t_grid.size());
    for (double t : t_grid)
        marks.push_back(std::min<std::int64_t>(
            n, static_cast<std::int64_t>(std::floor(t * static_cast<double>(n)))));

    auto ranges = batch_ranges(N, opt.batches);
    std::vector<std::vector<double>> paths(static_cast<std::size_t>(N));
    std::vector<char> ok(static_cast<std::size_t>(N), 0);
    run_batches(static_cast<int>(ranges.size()), opt.workers, [&](int b) {
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(opt.seed, static_cast<std::uint64_t>(i));
            ExtendedState<typename S::Base> x{sample_base_in_cell(s, rng, z0), z0};
            std::vector<double> path(t_grid.size(), 0.0);
            bool drop = false;
            std::size_t next = 0;
            for (std::int64_t k = 0; next < path.size() && !drop; ++k) {
                while (next < marks.size() && marks[static_cast<std::size_t>(next)] == k) {
                    path[next] = s.kinetic_energy(x.base, x.cell) / sq;
                    ++next;
                }
                if (next == marks.size()) break;
                try {
                    bool f = false;
                    x = system_step_flagged(s, x, f);
                    drop = drop || f;
                } catch (const TrapError&) {
                    drop = true;
                } catch (const HorizonError&) {
                    drop = true;
                }
            }
            if (!drop) {
                paths[static_cast<std::size_t>(i)] = std::move(path);
                ok[static_cast<std::size_t>(i)] = 1;
            }
        }
    });

    EnergyPathReport rep;
    rep.n = n;
    rep.sqrt_n = sq;
    rep.t_grid = std::move(t_grid);
    for (std::int64_t i = 0; i < N; ++i) {
        if (ok[static_cast<std::size_t>(i)])
            rep.paths.push_back(std::move(paths[static_cast<std::size_t>(i)]));
        else
            ++rep.dropped;
    }
    return rep;
}

}  // namespace latmix

#endif
