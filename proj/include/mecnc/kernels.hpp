#pragma once

// Data-parallel inner loops of the controller. Each kernel has a scalar
// reference and, where the CPU supports it, an AVX2 variant selected once at
// startup. Variants are bit-identical: no FMA contraction, and reductions
// accumulate in four interleaved lanes in both implementations.
//
// Set MECNC_KERNELS=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace mecnc::kernels {

struct ArgMax {
    std::size_t index = 0;
    double value = 0.0;
};

struct KernelTable {
    const char* name;

    // out[i] = factor[i] * x[i]
    void (*scale)(std::span<const double> x, std::span<const double> factor, std::span<double> out);

    // out[i] = max(x[i] - factor[i] * x[i + 1], 0), with x[n] taken as 0.
    void (*chain_weight)(std::span<const double> x, std::span<const double> factor,
                         std::span<double> out);

    // out[i] = max(a[i] - b[i], 0)
    void (*positive_difference)(std::span<const double> a, std::span<const double> b,
                                std::span<double> out);

    // argmax_i max(w[i] * mult[i] - offset, 0); lowest index wins ties.
    // Returns {0, 0} for an empty input.
    ArgMax (*affine_argmax)(std::span<const double> w, std::span<const double> mult, double offset);

    // argmax_i max(w[i] - offset, 0); lowest index wins ties.
    ArgMax (*shifted_argmax)(std::span<const double> w, double offset);

    // sum_i max(a[i] * eta - b[i], 0)
    double (*waterfill_sum)(std::span<const double> a, std::span<const double> b, double eta);
};

const KernelTable& scalar_kernels();

// Null when the build or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// Kernel set used by the library; chosen on first call.
const KernelTable& active();

// Forces a kernel set by name ("scalar" or "avx2"). Returns false if the
// requested set is unavailable.
bool select(std::string_view name);

} // namespace mecnc::kernels
