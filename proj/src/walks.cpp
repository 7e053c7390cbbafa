#include "latmix/walks.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "latmix/errors.hpp"
#include "latmix/rng.hpp"

namespace latmix {

void StepDistribution::validate() const {
    if (steps.empty()) throw std::invalid_argument("StepDistribution: empty support");
    int d = steps.front().first.dim();
    long double total = 0;
    for (const auto& [z, p] : steps) {
        if (z.dim() != d) throw std::invalid_argument("StepDistribution: mixed dimensions");
        if (p <= 0) throw std::invalid_argument("StepDistribution: nonpositive probability");
        total += p;
    }
    if (std::fabs(static_cast<double>(total - 1.0L)) > 1e-15)
        throw std::invalid_argument("StepDistribution: probabilities do not sum to 1");
}

int StepDistribution::dim() const { return steps.empty() ? 0 : steps.front().first.dim(); }

std::vector<double> StepDistribution::mean() const {
    std::vector<double> m(static_cast<std::size_t>(dim()), 0.0);
    for (const auto& [z, p] : steps)
        for (int i = 0; i < dim(); ++i) m[static_cast<std::size_t>(i)] += p * static_cast<double>(z[i]);
    return m;
}

LatticeVector StepDistribution::mean_rounded() const {
    auto m = mean();
    LatticeVector v = LatticeVector::zero(dim());
    for (int i = 0; i < dim(); ++i)
        v[i] = static_cast<std::int64_t>(std::llround(m[static_cast<std::size_t>(i)]));
    return v;
}

std::vector<double> StepDistribution::covariance() const {
    const int d = dim();
    auto m = mean();
    std::vector<double> c(static_cast<std::size_t>(d * d), 0.0);
    for (const auto& [z, p] : steps) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                c[static_cast<std::size_t>(i * d + j)] +=
                    p * (static_cast<double>(z[i]) - m[static_cast<std::size_t>(i)]) *
                    (static_cast<double>(z[j]) - m[static_cast<std::size_t>(j)]);
    }
    return c;
}

StepDistribution StepDistribution::simple_1d() {
    return {{{LatticeVector{-1}, 0.5}, {LatticeVector{1}, 0.5}}};
}

StepDistribution StepDistribution::lazy_1d() {
    return {{{LatticeVector{-1}, 0.25}, {LatticeVector{0}, 0.5}, {LatticeVector{1}, 0.25}}};
}

StepDistribution StepDistribution::drifted_lazy_1d() {
    return {{{LatticeVector{0}, 0.25}, {LatticeVector{1}, 0.5}, {LatticeVector{2}, 0.25}}};
}

StepDistribution StepDistribution::nearest_neighbour_2d() {
    return {{{LatticeVector{1, 0}, 0.25},
             {LatticeVector{-1, 0}, 0.25},
             {LatticeVector{0, 1}, 0.25},
             {LatticeVector{0, -1}, 0.25}}};
}

WalkSystem::WalkSystem(StepDistribution steps, SublatticeDecl subl)
    : steps_(std::move(steps)), subl_(std::move(subl)) {
    steps_.validate();
    dim_ = steps_.dim();
    if (static_cast<int>(subl_.moduli.size()) != dim_ ||
        static_cast<int>(subl_.shifts.size()) != dim_)
        throw std::invalid_argument("WalkSystem: sublattice declaration dimension mismatch");
    for (std::int64_t p : subl_.moduli)
        if (p < 1) throw std::invalid_argument("WalkSystem: modulus < 1");
    double c = 0;
    for (const auto& [z, p] : steps_.steps) {
        c += p;
        cum_.push_back(c);
    }
    cum_.back() = 1.0;
}

WalkSystem::WalkSystem(StepDistribution steps)
    : WalkSystem(steps, SublatticeDecl::aperiodic_dim(steps.dim())) {}

std::size_t WalkSystem::symbol(const Base& y) const {
    double u = static_cast<double>(splitmix64(mix_keys(y.stream, y.pos)) >> 11) * 0x1.0p-53;
    std::size_t lo = 0, hi = cum_.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (u < cum_[mid])
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

Step<WalkSystem::Base> WalkSystem::step(const Base& y) const {
    std::size_t k = symbol(y);
    return {Base{y.stream, y.pos + 1}, steps_.steps[k].first};
}

double WalkSystem::base_metric(const Base& a, const Base& b) const {
    // Shift-space metric 2^-k with k = first position where the symbol
    // sequences differ (probed up to 64 positions).
    Base x = a, y = b;
    double w = 1.0;
    for (int k = 0; k < 64; ++k) {
        if (symbol(x) != symbol(y)) return w;
        ++x.pos;
        ++y.pos;
        w *= 0.5;
    }
    return 0.0;
}

std::map<LatticeVector, double> exact_pmf(const StepDistribution& steps, int n) {
    steps.validate();
    if (n < 0) throw std::invalid_argument("exact_pmf: n < 0");
    if (n > 128) throw std::invalid_argument("exact_pmf: n > 128");
    constexpr std::size_t kTableBudget = 4u << 20;

    std::unordered_map<LatticeVector, long double, LatticeVectorHash> cur;
    cur[LatticeVector::zero(steps.dim())] = 1.0L;
    for (int it = 0; it < n; ++it) {
        std::unordered_map<LatticeVector, long double, LatticeVectorHash> next;
        next.reserve(cur.size() * steps.steps.size());
        for (const auto& [z, mass] : cur) {
            for (const auto& [dz, p] : steps.steps) next[z + dz] += mass * static_cast<long double>(p);
        }
        if (next.size() > kTableBudget)
            throw ResourceError("exact_pmf: support table exceeds budget");
        cur = std::move(next);
    }
    std::map<LatticeVector, double> out;
    for (const auto& [z, mass] : cur) out[z] = static_cast<double>(mass);
    return out;
}

}  // namespace latmix
