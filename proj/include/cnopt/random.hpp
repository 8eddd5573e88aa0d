#pragma once

#include "cnopt/scalar_field.hpp"

#include <cstdint>
#include <random>

namespace cnopt {

/// SplitMix64 step; used to derive independent per-sample seeds from a base seed
/// so sampled results do not depend on evaluation order.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    return splitmix64(splitmix64(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

using Rng = std::mt19937_64;

inline Vec uniform_vector(Rng& rng, const Vec& lo, const Vec& hi)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec v(lo.size());
    for (Index i = 0; i < lo.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
    return v;
}

inline Vec unit_sphere_vector(Rng& rng, Index dim)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(dim);
    do {
        for (Index i = 0; i < dim; ++i) v[i] = g(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

}  // namespace cnopt
