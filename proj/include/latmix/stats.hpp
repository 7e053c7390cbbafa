#ifndef LATMIX_STATS_HPP
#define LATMIX_STATS_HPP

#include <cstdint>
#include <vector>

namespace latmix {

// Mean / standard-error estimate from a fixed number of batch means.
// Ensembles are always cut into kBatches contiguous index ranges; the batch
// layout is what makes the parallel reduction deterministic.
constexpr int kBatches = 32;

struct BatchRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;  // exclusive
    std::int64_t size() const { return end - begin; }
};

// Contiguous near-equal split of [0, n) into `batches` ranges.
std::vector<BatchRange> batch_ranges(std::int64_t n, int batches = kBatches);

struct MeanSe {
    double mean = 0;
    double se = 0;
};

// Weighted mean of batch means plus its standard error (weights = batch sizes).
MeanSe combine_batch_means(const std::vector<double>& batch_sums,
                           const std::vector<std::int64_t>& batch_counts);

// Sample mean/variance of a plain vector.
double mean_of(const std::vector<double>& v);
double variance_of(const std::vector<double>& v);  // unbiased

// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|.
// Throws std::invalid_argument on an empty sample.
double ks_distance(std::vector<double> a, std::vector<double> b);

// Regularized incomplete gamma functions P(a,x), Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper-tail p-value of a chi-square statistic with the given degrees of freedom.
double chi_square_pvalue(double stat, double dof);

// Pearson statistic of observed counts vs expected counts. Bins with
// expected < min_expected are pooled into their predecessor.
struct ChiSquareResult {
    double stat = 0;
    double dof = 0;
    double pvalue = 0;
};
ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected = 5.0);
// Two-sample homogeneity test for equal-size samples: sum (a-b)^2/(a+b).
ChiSquareResult chi_square_two_sample(const std::vector<double>& a,
                                      const std::vector<double>& b,
                                      double min_total = 10.0);

// Dense symmetric d x d matrix, d <= 4, row-major.
struct SmallMatrix {
    int d = 0;
    double m[16] = {0};
    double& at(int i, int j) { return m[i * d + j]; }
    double at(int i, int j) const { return m[i * d + j]; }
};

// Cholesky factor L (lower) of a positive-definite matrix.
// Throws std::domain_error if the matrix is not positive definite.
SmallMatrix cholesky(const SmallMatrix& a);

// Centred Gaussian density with covariance sigma at point z (length d).
// Throws std::domain_error on a singular covariance.
double gaussian_density(const double* z, int d, const SmallMatrix& sigma);

// Jackknife standard error over batch means: se of the mean of the batch
// statistics theta_b (delete-one over equal-weight batches).
double jackknife_se(const std::vector<double>& theta_batches);

}  // namespace latmix

#endif
