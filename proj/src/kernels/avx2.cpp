#include "lsep/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

namespace lsep::kernels::detail {

bool avx2_compiled() { return true; }

__attribute__((target("avx2"))) void half_chord_sq_avx2(Vec3 q, Points p, double* out) {
    const __m256d a = _mm256_set1_pd(q.x0), b = _mm256_set1_pd(q.x1), c = _mm256_set1_pd(q.x2);
    const __m256d m1 = _mm256_set1_pd(-1.0), h = _mm256_set1_pd(0.5), z = _mm256_setzero_pd();
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t j = 0;
    for (; j + 4 <= p.n; j += 4) {
        __m256d t = _mm256_xor_pd(_mm256_mul_pd(a, _mm256_loadu_pd(p.x0 + j)), sign);
        t = _mm256_add_pd(t, _mm256_mul_pd(b, _mm256_loadu_pd(p.x1 + j)));
        t = _mm256_add_pd(t, _mm256_mul_pd(c, _mm256_loadu_pd(p.x2 + j)));
        __m256d v = _mm256_mul_pd(_mm256_sub_pd(m1, t), h);
        // max(v, 0) returning 0 for v <= 0, as the scalar branch does
        _mm256_storeu_pd(out + j, _mm256_max_pd(v, z));
    }
    if (j < p.n) half_chord_sq_scalar(q, Points{p.x0 + j, p.x1 + j, p.x2 + j, p.n - j}, out + j);
}

}  // namespace lsep::kernels::detail

#else

namespace lsep::kernels::detail {
bool avx2_compiled() { return false; }
void half_chord_sq_avx2(Vec3 q, Points p, double* out) { half_chord_sq_scalar(q, p, out); }
}  // namespace lsep::kernels::detail

#endif
