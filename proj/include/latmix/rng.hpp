#ifndef LATMIX_RNG_HPP
#define LATMIX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace latmix {

// SplitMix64 finalizer. Used for key mixing and as the counter-based symbol
// generator of the random-walk systems.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ull + b));
}

// One random stream. The engine is std::mt19937_64; uniform and normal
// variates are produced by explicit recipes so that identical seeds yield
// identical sequences independent of the standard library's distributions.
//
// Streams are forked from (seed, index) pairs; ensembles assign one stream
// per trajectory so results do not depend on worker scheduling.
class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t key) : key_(key), eng_(key) {}

    static RngStream fork(std::uint64_t seed, std::uint64_t index) {
        return RngStream(mix_keys(seed, index));
    }
    // Labelled sibling stream, e.g. stream.sub(7) for an independent substream.
    RngStream sub(std::uint64_t label) const { return RngStream(mix_keys(key_, label)); }

    std::uint64_t key() const { return key_; }
    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as an argument to log().
    double uniform01_open0() { return 1.0 - uniform01(); }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Integer uniform on [0, n) via 128-bit multiply.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
    }

    std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Box-Muller, pair cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01_open0();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t key_;
    std::mt19937_64 eng_;
    double spare_ = 0;
    bool have_spare_ = false;
};

}  // namespace latmix

#endif
