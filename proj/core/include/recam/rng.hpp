// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace recam {

/// Seedable generator used everywhere randomness is needed.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not portable across library
/// implementations, so the conversions below are spelled out:
///   uniform():  top 53 bits of one draw scaled by 2^-53, range [0, 1)
///   normal():   Box-Muller on two uniform() draws, cosine branch only
///   below(n):   uniform() * n truncated
/// Sub-streams are derived with splitmix64 so that per-item randomness does
/// not depend on iteration order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic seed for a named sub-stream, e.g. derive_seed(seed, {scene, level}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

}  // namespace recam
