#include "mecnc/kernels.hpp"

#include "kernels/lanes.hpp"

namespace mecnc::kernels {

namespace {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

void scale(std::span<const double> x, std::span<const double> factor, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = factor[i] * x[i];
}

void chain_weight(std::span<const double> x, std::span<const double> factor, std::span<double> out) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double next = i + 1 < n ? x[i + 1] : 0.0;
        out[i] = pos(x[i] - factor[i] * next);
    }
}

void positive_difference(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = pos(a[i] - b[i]);
}

ArgMax affine_argmax(std::span<const double> w, std::span<const double> mult, double offset) {
    ArgMax best;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = pos(w[i] * mult[i] - offset);
        if (v > best.value) best = {i, v};
    }
    return best;
}

ArgMax shifted_argmax(std::span<const double> w, double offset) {
    ArgMax best;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = pos(w[i] - offset);
        if (v > best.value) best = {i, v};
    }
    return best;
}

double waterfill_sum(std::span<const double> a, std::span<const double> b, double eta) {
    double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = a.size();
    const std::size_t body = n - n % kLanes;
    for (std::size_t i = 0; i < body; i += kLanes)
        for (std::size_t k = 0; k < kLanes; ++k) lane[k] += pos(a[i + k] * eta - b[i + k]);
    for (std::size_t i = body; i < n; ++i) lane[i - body] += pos(a[i] * eta - b[i]);
    return combine_lanes(lane);
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar",       scale,          chain_weight, positive_difference,
                                   affine_argmax, shifted_argmax, waterfill_sum};
    return table;
}

} // namespace mecnc::kernels
