#include "latmix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latmix {

std::vector<BatchRange> batch_ranges(std::int64_t n, int batches) {
    if (n < 0) throw std::invalid_argument("batch_ranges: negative n");
    if (batches < 1) throw std::invalid_argument("batch_ranges: batches < 1");
    std::vector<BatchRange> out;
    out.reserve(static_cast<std::size_t>(batches));
    std::int64_t base = n / batches, rem = n % batches, pos = 0;
    for (int b = 0; b < batches; ++b) {
        std::int64_t len = base + (b < rem ? 1 : 0);
        out.push_back({pos, pos + len});
        pos += len;
    }
    return out;
}

MeanSe combine_batch_means(const std::vector<double>& batch_sums,
                           const std::vector<std::int64_t>& batch_counts) {
    if (batch_sums.size() != batch_counts.size())
        throw std::invalid_argument("combine_batch_means: size mismatch");
    double total = 0;
    std::int64_t n = 0;
    for (std::size_t b = 0; b < batch_sums.size(); ++b) {
        total += batch_sums[b];
        n += batch_counts[b];
    }
    MeanSe r;
    if (n == 0) return r;
    r.mean = total / static_cast<double>(n);
    // Variance of the weighted mean from between-batch scatter.
    double num = 0;
    int nb = 0;
    for (std::size_t b = 0; b < batch_sums.size(); ++b) {
        if (batch_counts[b] == 0) continue;
        double w = static_cast<double>(batch_counts[b]) / static_cast<double>(n);
        double mb = batch_sums[b] / static_cast<double>(batch_counts[b]);
        num += w * (mb - r.mean) * (mb - r.mean);
        ++nb;
    }
    if (nb > 1) r.se = std::sqrt(num / static_cast<double>(nb - 1));
    return r;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean_of: empty");
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("variance_of: need >= 2");
    double m = mean_of(v), s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

namespace {

// Series expansion of P(a,x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a,x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (a <= 0 || x < 0) throw std::domain_error("gamma_p: bad arguments");
    if (x == 0) return 0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0 || x < 0) throw std::domain_error("gamma_q: bad arguments");
    if (x == 0) return 1;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_pvalue(double stat, double dof) {
    if (dof <= 0) throw std::domain_error("chi_square_pvalue: dof <= 0");
    if (stat <= 0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * stat);
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof: bad inputs");
    // Pool sparse bins left to right.
    std::vector<double> obs, exp;
    double opool = 0, epool = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        opool += observed[i];
        epool += expected[i];
        if (epool >= min_expected) {
            obs.push_back(opool);
            exp.push_back(epool);
            opool = epool = 0;
        }
    }
    if (epool > 0 && !exp.empty()) {
        obs.back() += opool;
        exp.back() += epool;
    }
    if (exp.size() < 2) throw std::invalid_argument("chi_square_gof: too few usable bins");
    ChiSquareResult r;
    for (std::size_t i = 0; i < exp.size(); ++i) {
        double d = obs[i] - exp[i];
        r.stat += d * d / exp[i];
    }
    r.dof = static_cast<double>(exp.size() - 1);
    r.pvalue = chi_square_pvalue(r.stat, r.dof);
    return r;
}

ChiSquareResult chi_square_two_sample(const std::vector<double>& a,
                                      const std::vector<double>& b,
                                      double min_total) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("chi_square_two_sample: bad inputs");
    std::vector<double> xs, ys;
    double xpool = 0, ypool = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        xpool += a[i];
        ypool += b[i];
        if (xpool + ypool >= min_total) {
            xs.push_back(xpool);
            ys.push_back(ypool);
            xpool = ypool = 0;
        }
    }
    if ((xpool > 0 || ypool > 0) && !xs.empty()) {
        xs.back() += xpool;
        ys.back() += ypool;
    }
    if (xs.size() < 2) throw std::invalid_argument("chi_square_two_sample: too few usable bins");
    ChiSquareResult r;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double s = xs[i] + ys[i];
        if (s <= 0) continue;
        double d = xs[i] - ys[i];
        r.stat += d * d / s;
    }
    r.dof = static_cast<double>(xs.size() - 1);
    r.pvalue = chi_square_pvalue(r.stat, r.dof);
    return r;
}

SmallMatrix cholesky(const SmallMatrix& a) {
    SmallMatrix l;
    l.d = a.d;
    for (int i = 0; i < a.d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a.at(i, j);
            for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s <= 0) throw std::domain_error("cholesky: matrix not positive definite");
                l.at(i, j) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return l;
}

double gaussian_density(const double* z, int d, const SmallMatrix& sigma) {
    if (sigma.d != d || d < 1) throw std::domain_error("gaussian_density: bad dimension");
    SmallMatrix l = cholesky(sigma);
    // Solve L w = z, then quadratic form = |w|^2 and det = prod diag(L)^2.
    double w[4], quad = 0, logdet = 0;
    for (int i = 0; i < d; ++i) {
        double s = z[i];
        for (int k = 0; k < i; ++k) s -= l.at(i, k) * w[k];
        w[i] = s / l.at(i, i);
        quad += w[i] * w[i];
        logdet += 2.0 * std::log(l.at(i, i));
    }
    const double log2pi = 1.8378770664093454836;
    return std::exp(-0.5 * (quad + logdet + d * log2pi));
}

double jackknife_se(const std::vector<double>& theta) {
    const std::size_t b = theta.size();
    if (b < 2) return 0;
    double m = mean_of(theta), s = 0;
    for (double t : theta) s += (t - m) * (t - m);
    // delete-one jackknife over equal batches reduces to this scatter formula
    return std::sqrt(s / (static_cast<double>(b) * static_cast<double>(b - 1)));
}

}  // namespace latmix
