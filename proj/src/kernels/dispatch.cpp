#include <cstdlib>
#include <string_view>

#include "mecnc/kernels.hpp"

namespace mecnc::kernels {

#if MECNC_HAVE_AVX2
const KernelTable& avx2_table();
#endif

namespace {

const KernelTable* initial() {
    if (const char* env = std::getenv("MECNC_KERNELS")) {
        if (std::string_view(env) == "scalar") return &scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

const KernelTable*& current() {
    static const KernelTable* table = initial();
    return table;
}

} // namespace

const KernelTable* avx2_kernels() {
#if MECNC_HAVE_AVX2
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current(); }

bool select(std::string_view name) {
    if (name == "scalar") {
        current() = &scalar_kernels();
        return true;
    }
    if (name == "avx2") {
        if (const KernelTable* t = avx2_kernels()) {
            current() = t;
            return true;
        }
    }
    return false;
}

} // namespace mecnc::kernels
