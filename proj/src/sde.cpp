#include "latmix/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "latmix/parallel.hpp"
#include "latmix/rng.hpp"
#include "latmix/stats.hpp"

namespace latmix {

void SdeConfig::validate() const {
    if (sigma_bar < 0) throw std::invalid_argument("SdeConfig: sigma_bar < 0");
    if (steps < 1000) throw std::invalid_argument("SdeConfig: steps < 1000");
    if (floor <= 0) throw std::invalid_argument("SdeConfig: floor <= 0");
    if (t_end <= 0) throw std::invalid_argument("SdeConfig: t_end <= 0");
    if (k0 < 0) throw std::invalid_argument("SdeConfig: k0 < 0");
}

namespace {

double run_direct(const SdeConfig& c, RngStream& rng) {
    const double dt = c.t_end / static_cast<double>(c.steps);
    const double sqdt = std::sqrt(dt);
    const double s2 = c.sigma_bar * c.sigma_bar;
    double k = std::max(c.k0, c.floor);
    for (std::int64_t i = 0; i < c.steps; ++i) {
        k += s2 / (4.0 * k) * dt + c.sigma_bar * sqdt * rng.normal();
        if (k < c.floor) k = 2.0 * c.floor - k;  // reflect
    }
    return k;
}

double run_transformed(const SdeConfig& c, RngStream& rng) {
    const double dt = c.t_end / static_cast<double>(c.steps);
    const double sqdt = std::sqrt(dt);
    if (c.sigma_bar == 0) return c.k0;
    double y = (c.k0 * c.k0) / (c.sigma_bar * c.sigma_bar);
    for (std::int64_t i = 0; i < c.steps; ++i) {
        double ypos = y > 0 ? y : 0.0;  // full truncation
        y = y + 1.5 * dt + 2.0 * std::sqrt(ypos) * sqdt * rng.normal();
    }
    return c.sigma_bar * std::sqrt(y > 0 ? y : 0.0);
}

}  // namespace

std::vector<double> em_k_sde(const SdeConfig& config, std::int64_t N, std::uint64_t seed,
                             int workers) {
    config.validate();
    if (N < 1) throw std::invalid_argument("em_k_sde: N < 1");
    if (config.sigma_bar == 0) {
        // No noise and no drift: K stays at K(0).
        return std::vector<double>(static_cast<std::size_t>(N), config.k0);
    }
    std::vector<double> out(static_cast<std::size_t>(N), 0.0);
    auto ranges = batch_ranges(N);
    run_batches(static_cast<int>(ranges.size()), workers, [&](int b) {
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(seed, static_cast<std::uint64_t>(i));
            out[static_cast<std::size_t>(i)] = config.scheme == SdeScheme::Direct
                                                   ? run_direct(config, rng)
                                                   : run_transformed(config, rng);
        }
    });
    return out;
}

}  // namespace latmix
