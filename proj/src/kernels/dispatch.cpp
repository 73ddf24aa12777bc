#include <algorithm>
#include <atomic>
#include <limits>

#include "lsep/kernels.hpp"

namespace lsep::kernels {

namespace {

Isa detect() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    if (detail::avx2_compiled() && __builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
    if (detail::neon_compiled()) return Isa::Neon;
    return Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

constexpr std::size_t kBlock = 256;

}  // namespace

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "?";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
            __builtin_cpu_init();
            return detail::avx2_compiled() && __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon: return detail::neon_compiled();
    }
    return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) {
    if (!isa_available(isa)) return false;
    current().store(isa);
    return true;
}

void reset_isa() { current().store(detect()); }

void half_chord_sq(Vec3 q, Points p, double* out) {
    switch (active_isa()) {
        case Isa::Avx2: detail::half_chord_sq_avx2(q, p, out); return;
        case Isa::Neon: detail::half_chord_sq_neon(q, p, out); return;
        case Isa::Scalar: break;
    }
    detail::half_chord_sq_scalar(q, p, out);
}

Nearest nearest(Vec3 q, Points p) {
    Nearest best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    double buf[kBlock];
    for (std::size_t s = 0; s < p.n; s += kBlock) {
        std::size_t m = std::min(kBlock, p.n - s);
        half_chord_sq(q, Points{p.x0 + s, p.x1 + s, p.x2 + s, m}, buf);
        for (std::size_t j = 0; j < m; ++j)
            if (buf[j] < best.q) best = {s + j, buf[j]};
    }
    return best;
}

void below(Vec3 q, Points p, double thr, std::vector<std::uint32_t>& idx) {
    double buf[kBlock];
    for (std::size_t s = 0; s < p.n; s += kBlock) {
        std::size_t m = std::min(kBlock, p.n - s);
        half_chord_sq(q, Points{p.x0 + s, p.x1 + s, p.x2 + s, m}, buf);
        for (std::size_t j = 0; j < m; ++j)
            if (buf[j] < thr) idx.push_back(static_cast<std::uint32_t>(s + j));
    }
}

}  // namespace lsep::kernels
