#ifndef LATMIX_REPORTS_HPP
#define LATMIX_REPORTS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "latmix/lattice.hpp"
#include "latmix/stats.hpp"

namespace latmix {

// Report structs are plain data; to_csv writes the documented column schema
// with '#' header comments, deterministically (fixed %.17g formatting, sorted
// rows). Column schemas are documented in the README.

struct CovarianceEstimate {
    int dim = 0;
    std::int64_t n = 0;
    std::int64_t samples = 0;
    std::vector<double> sigma;      // row-major d x d, Cov(tau_n)/n
    std::vector<double> sigma_se;   // jackknife, same layout
    std::vector<double> drift;      // E[tau_n]/n
    std::vector<double> drift_se;
    std::vector<int> degenerate_axes;  // variance indistinguishable from zero

    SmallMatrix sigma_matrix() const;
    void to_csv(std::ostream& os) const;
};

struct MlltCellRow {
    LatticeVector cell;
    double empirical = 0;   // L^d x weighted empirical probability
    double reference = 0;   // sublattice_index x p((z-shift)/L) x nu(psi1) nu(psi2)
    double se = 0;          // of `empirical`
    double plain_prob = 0;  // unweighted empirical probability
    bool resolved = false;
    bool excluded = false;
};

struct MlltReport {
    std::int64_t n = 0;
    double scale = 0;  // L_n
    std::int64_t samples = 0;
    std::int64_t kept = 0;
    std::int64_t dropped = 0;
    std::vector<MlltCellRow> cells;  // sorted by cell
    // sup |empirical - reference| / max(reference) over resolved cells outside
    // the exclusion region and inside the window radius.
    double sup_rel_deviation = 0;
    double apriori_stat = 0;  // max_z L^d x plain probability
    double mass_total = 0;    // sum of plain probabilities (exactly 1 by construction)
    double nu_psi1 = 0, nu_psi2 = 0;
    std::vector<double> shift;  // center used (0 or D_n), per axis
    double exclusion_volume = 0;
    std::int64_t sublattice_index = 1;
    CovarianceEstimate cov;  // same-run covariance/drift
    double tolerance = 0;
    bool pass = false;

    void to_csv(std::ostream& os) const;
};

struct CorrelationPoint {
    std::int64_t n = 0;
    double estimate = 0;
    double se = 0;
};

struct CorrelationCurve {
    std::vector<CorrelationPoint> points;
    double mu_phi = 0;
    double phi_bar = 0;
    double target = 0;  // mu(phi) * Phi-bar
    double tolerance = 0;
    std::int64_t dropped = 0;
    bool pass = false;  // |estimate - target| <= tolerance + 4 se at largest n

    void to_csv(std::ostream& os) const;
};

struct CubeMixRow {
    std::string scheme;  // "G_O" or "G_U"
    std::int64_t n = 0;
    std::int64_t size = 0;
    LatticeVector center;  // meaningful for G_U rows
    double estimate = 0;
    double se = 0;
    double deviation = 0;
};

struct CubeMixReport {
    std::vector<CubeMixRow> rows;
    double target = 0;
    std::string centering_policy;
    double worst_at_largest = 0;  // max deviation among rows at (max n, max size)
    double worst_se = 0;          // max se among those rows
    double tolerance = 0;
    std::int64_t dropped = 0;
    bool pass = false;

    void to_csv(std::ostream& os) const;
};

struct EscapePoint {
    std::int64_t n = 0;
    double fraction = 0;
    double se = 0;
};

struct EscapeReport {
    std::vector<EscapePoint> points;
    double radius = 0;
    std::string initial_measure;
    std::int64_t samples = 0;
    std::int64_t dropped = 0;
    bool strictly_decreasing = false;
    double final_fraction = 0;
    double threshold = 0;
    bool pass = false;

    void to_csv(std::ostream& os) const;
};

struct EnergyPathReport {
    std::int64_t n = 0;
    double sqrt_n = 0;
    std::vector<double> t_grid;
    std::vector<std::vector<double>> paths;  // [trajectory][grid index], K/sqrt(n)
    std::int64_t dropped = 0;

    // Marginal sample of K_{floor(t n)}/sqrt(n) at grid index.
    std::vector<double> marginal(std::size_t grid_index) const;
    void to_csv(std::ostream& os) const;
};

// sigma estimated from short-time increments: Var(K_{m} - K_0) ~ sigma^2 m.
double sigma_bar_from_paths(const EnergyPathReport& report, double t_short);

std::string format_double(double x);  // %.17g, deterministic

}  // namespace latmix

#endif
