#pragma once

// Batched sinh^2(d/2) scans between one hyperboloid point and a block of points in
// structure-of-arrays layout.  Every variant evaluates
//     t = -(q0*p0); t += q1*p1; t += q2*p2; out = max(0, (-1 - t) * 0.5)
// in this order without fused multiply-add, so results are bitwise identical.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lsep/hyperbolic.hpp"

namespace lsep::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct Points {
    const double* x0;
    const double* x1;
    const double* x2;
    std::size_t n;
};

const char* isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
// Pin the dispatch (tests); returns false if the ISA is not available on this CPU.
bool force_isa(Isa isa);
void reset_isa();

void half_chord_sq(Vec3 q, Points p, double* out);
// Smallest value and its index (first index on ties).  Empty input gives {SIZE_MAX, +inf}.
struct Nearest {
    std::size_t index;
    double q;
};
Nearest nearest(Vec3 q, Points p);
// Appends indices j with value < thr, ascending.
void below(Vec3 q, Points p, double thr, std::vector<std::uint32_t>& idx);

namespace detail {
void half_chord_sq_scalar(Vec3 q, Points p, double* out);
void half_chord_sq_avx2(Vec3 q, Points p, double* out);
void half_chord_sq_neon(Vec3 q, Points p, double* out);
bool avx2_compiled();
bool neon_compiled();
}  // namespace detail

}  // namespace lsep::kernels
