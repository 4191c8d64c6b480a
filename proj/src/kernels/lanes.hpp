#pragma once

#include <cstddef>

namespace mecnc::kernels {

// Reductions keep four partial sums, element i landing in lane i % 4, and
// combine them pairwise. Both kernel sets follow this order exactly.
inline constexpr std::size_t kLanes = 4;

inline double combine_lanes(const double (&lane)[kLanes]) {
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

} // namespace mecnc::kernels
