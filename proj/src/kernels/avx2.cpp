// Compiled with -mavx2 only; callers reach these through the dispatch table
// after a CPU check.

#include <immintrin.h>

#include "mecnc/kernels.hpp"

#include "kernels/lanes.hpp"

namespace mecnc::kernels {

namespace {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

void scale(std::span<const double> x, std::span<const double> factor, std::span<double> out) {
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(factor.data() + i), _mm256_loadu_pd(x.data() + i));
        _mm256_storeu_pd(out.data() + i, v);
    }
    for (; i < n; ++i) out[i] = factor[i] * x[i];
}

void chain_weight(std::span<const double> x, std::span<const double> factor, std::span<double> out) {
    const std::size_t n = x.size();
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    // The vector body needs x[i + 4], so it stops one element early.
    for (; i + 5 <= n; i += 4) {
        const __m256d cur = _mm256_loadu_pd(x.data() + i);
        const __m256d next = _mm256_loadu_pd(x.data() + i + 1);
        const __m256d f = _mm256_loadu_pd(factor.data() + i);
        const __m256d v = _mm256_sub_pd(cur, _mm256_mul_pd(f, next));
        _mm256_storeu_pd(out.data() + i, _mm256_max_pd(v, zero));
    }
    for (; i < n; ++i) {
        const double next = i + 1 < n ? x[i + 1] : 0.0;
        out[i] = pos(x[i] - factor[i] * next);
    }
}

void positive_difference(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = a.size();
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
        _mm256_storeu_pd(out.data() + i, _mm256_max_pd(v, zero));
    }
    for (; i < n; ++i) out[i] = pos(a[i] - b[i]);
}

// Finds the first index holding the maximum of a block already reduced to
// values; scanning lanes in order keeps the lowest-index tie rule.
inline void take_block(const double (&vals)[4], std::size_t base, ArgMax& best) {
    for (std::size_t k = 0; k < 4; ++k)
        if (vals[k] > best.value) best = {base + k, vals[k]};
}

ArgMax affine_argmax(std::span<const double> w, std::span<const double> mult, double offset) {
    ArgMax best;
    const std::size_t n = w.size();
    const __m256d zero = _mm256_setzero_pd();
    const __m256d off = _mm256_set1_pd(offset);
    std::size_t i = 0;
    alignas(32) double vals[4];
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), _mm256_loadu_pd(mult.data() + i));
        v = _mm256_max_pd(_mm256_sub_pd(v, off), zero);
        // Skip the scalar scan when nothing in the block beats the current best.
        const __m256d gt = _mm256_cmp_pd(v, _mm256_set1_pd(best.value), _CMP_GT_OQ);
        if (_mm256_movemask_pd(gt) == 0) continue;
        _mm256_store_pd(vals, v);
        take_block(vals, i, best);
    }
    for (; i < n; ++i) {
        const double v = pos(w[i] * mult[i] - offset);
        if (v > best.value) best = {i, v};
    }
    return best;
}

ArgMax shifted_argmax(std::span<const double> w, double offset) {
    ArgMax best;
    const std::size_t n = w.size();
    const __m256d zero = _mm256_setzero_pd();
    const __m256d off = _mm256_set1_pd(offset);
    std::size_t i = 0;
    alignas(32) double vals[4];
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(w.data() + i), off), zero);
        const __m256d gt = _mm256_cmp_pd(v, _mm256_set1_pd(best.value), _CMP_GT_OQ);
        if (_mm256_movemask_pd(gt) == 0) continue;
        _mm256_store_pd(vals, v);
        take_block(vals, i, best);
    }
    for (; i < n; ++i) {
        const double v = pos(w[i] - offset);
        if (v > best.value) best = {i, v};
    }
    return best;
}

double waterfill_sum(std::span<const double> a, std::span<const double> b, double eta) {
    const std::size_t n = a.size();
    const std::size_t body = n - n % kLanes;
    const __m256d zero = _mm256_setzero_pd();
    const __m256d e = _mm256_set1_pd(eta);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kLanes) {
        __m256d v = _mm256_sub_pd(_mm256_mul_pd(_mm256_loadu_pd(a.data() + i), e), _mm256_loadu_pd(b.data() + i));
        acc = _mm256_add_pd(acc, _mm256_max_pd(v, zero));
    }
    alignas(32) double lane[kLanes];
    _mm256_store_pd(lane, acc);
    for (std::size_t i = body; i < n; ++i) lane[i - body] += pos(a[i] * eta - b[i]);
    return combine_lanes(lane);
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2",         scale,          chain_weight, positive_difference,
                                   affine_argmax, shifted_argmax, waterfill_sum};
    return table;
}

} // namespace mecnc::kernels
