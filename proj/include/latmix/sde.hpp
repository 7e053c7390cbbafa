#ifndef LATMIX_SDE_HPP
#define LATMIX_SDE_HPP

#include <cstdint>
#include <vector>

namespace latmix {

// Reference sampler for the rescaled-energy diffusion
//     dK = sigma^2 / (4 K) dt + sigma dW,  on [0, t_end].
//
// Two independent discretizations are exposed; their agreement is the
// correctness certificate (no closed-form marginal is asserted anywhere):
//   - Direct: Euler-Maruyama on K with a reflecting floor kappa0 that keeps
//     the singular drift bounded.
//   - Transformed: evolve Y = K^2 / sigma^2, which by the Ito chain rule
//     satisfies dY = (3/2) dt + 2 sqrt(Y) dW (a squared Bessel equation),
//     with full truncation at 0; return sigma * sqrt(Y).
enum class SdeScheme { Direct, Transformed };

struct SdeConfig {
    double sigma_bar = 1.0;   // > 0 (0 allowed: deterministic degenerate case)
    double k0 = 0.0;          // K(0)
    double t_end = 1.0;
    std::int64_t steps = 10000;  // >= 1000
    double floor = 1e-4;         // kappa0 > 0, reflecting floor (Direct scheme)
    SdeScheme scheme = SdeScheme::Transformed;

    void validate() const;
};

// N samples of K(t_end). Deterministic in (seed, i); trajectory i uses the
// stream forked at index i, so both schemes see the same Brownian increments
// when called with the same seed.
std::vector<double> em_k_sde(const SdeConfig& config, std::int64_t N, std::uint64_t seed,
                             int workers = 1);

}  // namespace latmix

#endif
