#ifndef SDFSNN_RNG_HPP
#define SDFSNN_RNG_HPP

#include <cstdint>
#include <cmath>

namespace sdfsnn {

// Counter-based deterministic random stream. Each (seed, stream) pair
// addresses an independent sequence; the n-th draw is a pure function of
// (seed, stream, n), so sequences are reproducible across runs and
// platforms. The output function is the splitmix64 finalizer, which is
// statistically sound for Monte Carlo use at the scales needed here.
class RngHandle {
public:
    RngHandle(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ (stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL))),
          counter_(0), have_cached_normal_(false), cached_normal_(0.0) {}

    // Derive an independent sub-stream; draws from the child never collide
    // with draws from the parent or from siblings with different ids.
    RngHandle fork(std::uint64_t substream) const {
        return RngHandle(key_, 0x5851f42d4c957f2dULL ^ substream);
    }

    std::uint64_t next_u64() {
        return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller (cached second variate).
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(a);
        have_cached_normal_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n) without modulo bias (rejection sampling).
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_;
    bool have_cached_normal_;
    double cached_normal_;
};

} // namespace sdfsnn

#endif
