#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bubblesim {

/// SplitMix64 finalizer; used to decorrelate per-path seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for path i: base_seed ^ hash(i). Independent of execution order,
/// so ensembles are reproducible under any worker count.
inline std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t path_index) {
    return base_seed ^ splitmix64(path_index);
}

/// Salted substream seed for auxiliary draws (bridge corrections etc.)
/// attached to the same path.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

/// Standard normal sampler on top of mt19937_64 (Marsaglia polar method,
/// one cached spare). Avoids std::normal_distribution so the draw sequence
/// is pinned by the standardized engine, not the library.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double uniform01() {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bubblesim
