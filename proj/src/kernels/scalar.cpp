#include "lsep/kernels.hpp"

namespace lsep::kernels::detail {

void half_chord_sq_scalar(Vec3 q, Points p, double* out) {
    const double a = q.x0, b = q.x1, c = q.x2;
    for (std::size_t j = 0; j < p.n; ++j) {
        double t = -(a * p.x0[j]);
        t += b * p.x1[j];
        t += c * p.x2[j];
        double v = (-1.0 - t) * 0.5;
        out[j] = v > 0.0 ? v : 0.0;
    }
}

}  // namespace lsep::kernels::detail
