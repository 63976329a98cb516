#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

namespace sdnd {

// Counter-based pseudo-random generator (splitmix64 finalizer over a
// keyed counter). Streams derived from (seed, stream) are statistically
// independent, so parallel trials can each own a stream and reproduce
// the sequential result bit for bit.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed) ^ (0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller (pairwise, second value cached)
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u in (0, 1] so the log is finite
        double u = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        cached_ = r * std::sin(6.283185307179586477 * v);
        have_cached_ = true;
        return r * std::cos(6.283185307179586477 * v);
    }

    // Fisher-Yates shuffle
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace sdnd
