#include "latmix/reports.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace latmix {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void put_cell(std::ostream& os, const LatticeVector& z) {
    for (int i = 0; i < z.dim(); ++i) os << z[i] << (i + 1 < z.dim() ? ";" : "");
}

}  // namespace

SmallMatrix CovarianceEstimate::sigma_matrix() const {
    SmallMatrix m;
    m.d = dim;
    for (int i = 0; i < dim * dim; ++i) m.m[i] = sigma[static_cast<std::size_t>(i)];
    return m;
}

void CovarianceEstimate::to_csv(std::ostream& os) const {
    os << "# type: covariance\n# n: " << n << "\n# samples: " << samples << "\n";
    os << "kind,i,j,value,se\n";
    for (int i = 0; i < dim; ++i)
        os << "drift," << i << ",0," << format_double(drift[static_cast<std::size_t>(i)]) << ","
           << format_double(drift_se[static_cast<std::size_t>(i)]) << "\n";
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            os << "sigma," << i << "," << j << ","
               << format_double(sigma[static_cast<std::size_t>(i * dim + j)]) << ","
               << format_double(sigma_se[static_cast<std::size_t>(i * dim + j)]) << "\n";
}

void MlltReport::to_csv(std::ostream& os) const {
    os << "# type: mllt\n# n: " << n << "\n# scale: " << format_double(scale)
       << "\n# samples: " << samples << "\n# kept: " << kept << "\n# dropped: " << dropped
       << "\n# nu_psi1: " << format_double(nu_psi1) << "\n# nu_psi2: " << format_double(nu_psi2)
       << "\n# sublattice_index: " << sublattice_index
       << "\n# sup_rel_deviation: " << format_double(sup_rel_deviation)
       << "\n# apriori_stat: " << format_double(apriori_stat)
       << "\n# mass_total: " << format_double(mass_total) << "\n# shift:";
    for (double s : shift) os << " " << format_double(s);
    os << "\n# verdict: " << (pass ? "pass" : "fail") << "\n";
    os << "cell,empirical,reference,se,plain_prob,resolved,excluded\n";
    for (const auto& row : cells) {
        put_cell(os, row.cell);
        os << "," << format_double(row.empirical) << "," << format_double(row.reference) << ","
           << format_double(row.se) << "," << format_double(row.plain_prob) << ","
           << (row.resolved ? 1 : 0) << "," << (row.excluded ? 1 : 0) << "\n";
    }
}

void CorrelationCurve::to_csv(std::ostream& os) const {
    os << "# type: correlation\n# mu_phi: " << format_double(mu_phi)
       << "\n# phi_bar: " << format_double(phi_bar) << "\n# target: " << format_double(target)
       << "\n# verdict: " << (pass ? "pass" : "fail") << "\n";
    os << "n,estimate,se,target\n";
    for (const auto& p : points)
        os << p.n << "," << format_double(p.estimate) << "," << format_double(p.se) << ","
           << format_double(target) << "\n";
}

void CubeMixReport::to_csv(std::ostream& os) const {
    os << "# type: cubemix\n# target: " << format_double(target)
       << "\n# centering: " << centering_policy
       << "\n# worst_at_largest: " << format_double(worst_at_largest)
       << "\n# verdict: " << (pass ? "pass" : "fail") << "\n";
    os << "scheme,n,size,center,estimate,se,deviation\n";
    for (const auto& r : rows) {
        os << r.scheme << "," << r.n << "," << r.size << ",";
        put_cell(os, r.center);
        os << "," << format_double(r.estimate) << "," << format_double(r.se) << ","
           << format_double(r.deviation) << "\n";
    }
}

void EscapeReport::to_csv(std::ostream& os) const {
    os << "# type: escape\n# radius: " << format_double(radius)
       << "\n# initial: " << initial_measure << "\n# samples: " << samples
       << "\n# dropped: " << dropped
       << "\n# strictly_decreasing: " << (strictly_decreasing ? 1 : 0)
       << "\n# verdict: " << (pass ? "pass" : "fail") << "\n";
    os << "n,fraction,se\n";
    for (const auto& p : points)
        os << p.n << "," << format_double(p.fraction) << "," << format_double(p.se) << "\n";
}

std::vector<double> EnergyPathReport::marginal(std::size_t grid_index) const {
    if (grid_index >= t_grid.size())
        throw std::invalid_argument("EnergyPathReport::marginal: bad grid index");
    std::vector<double> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(p[grid_index]);
    return out;
}

void EnergyPathReport::to_csv(std::ostream& os) const {
    os << "# type: energy_paths\n# n: " << n << "\n# dropped: " << dropped << "\n# t_grid:";
    for (double t : t_grid) os << " " << format_double(t);
    os << "\n";
    os << "trajectory";
    for (std::size_t k = 0; k < t_grid.size(); ++k) os << ",k" << k;
    os << "\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        os << i;
        for (double v : paths[i]) os << "," << format_double(v);
        os << "\n";
    }
}

double sigma_bar_from_paths(const EnergyPathReport& report, double t_short) {
    std::size_t idx = 0;
    double best = 1e18;
    for (std::size_t k = 0; k < report.t_grid.size(); ++k) {
        double d = std::fabs(report.t_grid[k] - t_short);
        if (report.t_grid[k] > 0 && d < best) {
            best = d;
            idx = k;
        }
    }
    if (report.paths.size() < 2)
        throw std::invalid_argument("sigma_bar_from_paths: need >= 2 paths");
    std::vector<double> deltas;
    deltas.reserve(report.paths.size());
    for (const auto& p : report.paths) deltas.push_back(p[idx] - p[0]);
    return std::sqrt(variance_of(deltas) / report.t_grid[idx]);
}

}  // namespace latmix
