#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace heatpole {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// SplitMix64 stream keyed by (seed, stream id); streams for different ids are
// independent for practical purposes, so path i always sees the same numbers
// regardless of how paths are distributed over threads.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t stream)
        : state_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL)))
    {
    }

    std::uint64_t next_u64()
    {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform on (0, 1]
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 2.0 * std::numbers::pi * u2;
        spare_ = rad * std::sin(ang);
        has_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace heatpole
