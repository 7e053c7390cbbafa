#ifndef LATMIX_ERRORS_HPP
#define LATMIX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace latmix {

// Free flight exceeded the configured free-path budget. Raised by the
// event detectors when a scatterer configuration has (or behaves as if it
// has) unbounded horizon.
struct HorizonError : std::runtime_error {
    explicit HorizonError(const std::string& msg) : std::runtime_error(msg) {}
};

// Event budget exhausted without reaching a collision (field dynamics).
struct TrapError : std::runtime_error {
    explicit TrapError(const std::string& msg) : std::runtime_error(msg) {}
};

// Root search for a wall collision found nothing within the search window.
struct StallError : std::runtime_error {
    explicit StallError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rejection sampler acceptance rate collapsed; carries guidance.
struct SamplerEfficiencyError : std::runtime_error {
    explicit SamplerEfficiencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exact table computation would exceed its size budget.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Adaptive integrator violated its conservation tolerance.
struct IntegrationError : std::runtime_error {
    explicit IntegrationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment configuration (schema violations, undeclared periodicity, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace latmix

#endif
