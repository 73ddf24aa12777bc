#include "lsep/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace lsep::kernels::detail {

bool neon_compiled() { return true; }

void half_chord_sq_neon(Vec3 q, Points p, double* out) {
    const float64x2_t a = vdupq_n_f64(q.x0), b = vdupq_n_f64(q.x1), c = vdupq_n_f64(q.x2);
    const float64x2_t m1 = vdupq_n_f64(-1.0), h = vdupq_n_f64(0.5), z = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= p.n; j += 2) {
        float64x2_t t = vnegq_f64(vmulq_f64(a, vld1q_f64(p.x0 + j)));
        t = vaddq_f64(t, vmulq_f64(b, vld1q_f64(p.x1 + j)));
        t = vaddq_f64(t, vmulq_f64(c, vld1q_f64(p.x2 + j)));
        float64x2_t v = vmulq_f64(vsubq_f64(m1, t), h);
        // vmaxq propagates NaN differently from the scalar branch; inputs are finite
        vst1q_f64(out + j, vmaxq_f64(v, z));
    }
    if (j < p.n) half_chord_sq_scalar(q, Points{p.x0 + j, p.x1 + j, p.x2 + j, p.n - j}, out + j);
}

}  // namespace lsep::kernels::detail

#else

namespace lsep::kernels::detail {
bool neon_compiled() { return false; }
void half_chord_sq_neon(Vec3 q, Points p, double* out) { half_chord_sq_scalar(q, p, out); }
}  // namespace lsep::kernels::detail

#endif
