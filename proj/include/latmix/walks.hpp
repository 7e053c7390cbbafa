#ifndef LATMIX_WALKS_HPP
#define LATMIX_WALKS_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "latmix/cocycle.hpp"
#include "latmix/lattice.hpp"

namespace latmix {

// Finite-support step law of a lattice random walk.
struct StepDistribution {
    std::vector<std::pair<LatticeVector, double>> steps;

    // Throws std::invalid_argument unless probabilities are positive, agree in
    // dimension and sum to 1 within 1e-15.
    void validate() const;
    int dim() const;

    LatticeVector mean_rounded() const;   // floor of the mean, per axis
    std::vector<double> mean() const;
    std::vector<double> covariance() const;  // row-major d x d

    static StepDistribution simple_1d();   // +-1 with prob 1/2; period 2
    static StepDistribution lazy_1d();     // -1,0,+1 with prob 1/4,1/2,1/4
    static StepDistribution drifted_lazy_1d();  // 0,1,2 with prob 1/4,1/2,1/4
    static StepDistribution nearest_neighbour_2d();
};

// Baseline cocycle: the shift on an i.i.d. symbol stream. A base point is the
// pair (stream key, position); the symbol at each position is a pure function
// of the pair, so the dynamics involve no floating-point state at all.
class WalkSystem {
public:
    struct Base {
        std::uint64_t stream = 0;
        std::uint64_t pos = 0;
    };

    WalkSystem(StepDistribution steps, SublatticeDecl subl);
    explicit WalkSystem(StepDistribution steps);  // declared aperiodic

    LatticeSplit split() const { return {0, dim_}; }
    Step<Base> step(const Base& y) const;
    Base sample_invariant(RngStream& rng) const { return Base{rng.next_u64(), 0}; }
    double base_metric(const Base& a, const Base& b) const;

    const StepDistribution& steps() const { return steps_; }
    const SublatticeDecl& sublattice() const { return subl_; }

    // Index of the step drawn at position y.pos (exposed for base observables).
    std::size_t symbol(const Base& y) const;

private:
    StepDistribution steps_;
    SublatticeDecl subl_;
    std::vector<double> cum_;
    int dim_ = 0;
};

// Exact n-fold convolution of the step law; long double accumulation keeps the
// total mass within 1e-12 of one. Requires n <= 128; throws ResourceError when
// the support table would exceed its size budget.
std::map<LatticeVector, double> exact_pmf(const StepDistribution& steps, int n);

}  // namespace latmix

#endif
