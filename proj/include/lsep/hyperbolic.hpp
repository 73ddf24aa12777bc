#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>

namespace lsep {

// Minkowski space R^{2,1} with <X,Y> = -x0 y0 + x1 y1 + x2 y2.
// Points of H^2 sit on the sheet <X,X> = -1, x0 > 0.
struct Vec3 {
    double x0 = 0.0, x1 = 0.0, x2 = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x0 + b.x0, a.x1 + b.x1, a.x2 + b.x2}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x0 - b.x0, a.x1 - b.x1, a.x2 - b.x2}; }
inline Vec3 operator-(Vec3 a) { return {-a.x0, -a.x1, -a.x2}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x0, s * a.x1, s * a.x2}; }
inline double mdot(Vec3 a, Vec3 b) { return -a.x0 * b.x0 + a.x1 * b.x1 + a.x2 * b.x2; }

inline constexpr Vec3 kOrigin{1.0, 0.0, 0.0};
// Minkowski cross product: orthogonal to a and b under mdot.
inline Vec3 mcross(Vec3 a, Vec3 b) {
    return {-(a.x1 * b.x2 - a.x2 * b.x1), a.x2 * b.x0 - a.x0 * b.x2, a.x0 * b.x1 - a.x1 * b.x0};
}

// Lorentz transformation, row major.
struct Mat3 {
    std::array<double, 9> a{1, 0, 0, 0, 1, 0, 0, 0, 1};
    double operator()(int i, int j) const { return a[3 * i + j]; }
    double& operator()(int i, int j) { return a[3 * i + j]; }
};

Vec3 operator*(const Mat3& m, Vec3 v);
Mat3 operator*(const Mat3& m, const Mat3& n);
// Inverse of a Lorentz matrix: J m^T J.
Mat3 lorentz_inverse(const Mat3& m);

// SL(2,R) element acting on the upper half plane.
struct Mat2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
};

Mat2 operator*(const Mat2& x, const Mat2& y);
Mat2 inverse(const Mat2& m);
inline double trace(const Mat2& m) { return m.a + m.d; }
inline double det(const Mat2& m) { return m.a * m.d - m.b * m.c; }
// Rescale to determinant one.
Mat2 renormalized(const Mat2& m);

// Image of M under SL(2,R) -> SO(2,1), S -> M S M^T on symmetric matrices.
Mat3 lorentz(const Mat2& m);

// Disk model uses w = (X1 - i X2)/(1 + X0), which agrees with the Cayley
// transform w = (z - i)/(z + i) from the upper half plane.
std::complex<double> to_disk(Vec3 X);
Vec3 from_disk(std::complex<double> w);
std::complex<double> uhp_to_disk(std::complex<double> z);
std::complex<double> disk_to_uhp(std::complex<double> w);

// sinh^2(d/2) via the Minkowski norm of the chord; well conditioned for close points.
inline double half_chord_sq(Vec3 a, Vec3 b) {
    Vec3 d = a - b;
    double q = 0.25 * mdot(d, d);
    return q > 0.0 ? q : 0.0;
}
inline double distance(Vec3 a, Vec3 b) { return 2.0 * std::asinh(std::sqrt(half_chord_sq(a, b))); }
// Same quantity from disk coordinates.
double disk_half_chord_sq(std::complex<double> z, std::complex<double> w);
inline double distance_from_q(double q) { return 2.0 * std::asinh(std::sqrt(q > 0.0 ? q : 0.0)); }
inline double q_from_distance(double d) {
    double s = std::sinh(0.5 * d);
    return s * s;
}

// Rescale a near-hyperboloid vector back onto the sheet.
Vec3 normalize_point(Vec3 X);
// Tangent projection and length of a tangent (spacelike) vector.
inline Vec3 project_tangent(Vec3 X, Vec3 v) { return v + mdot(v, X) * X; }
inline double tnorm(Vec3 v) {
    double n = mdot(v, v);
    return n > 0.0 ? std::sqrt(n) : 0.0;
}
Vec3 exp_map(Vec3 X, Vec3 v);
// Parallel transport of w (tangent at `from`) along the geodesic to `to`.
Vec3 transport(Vec3 from, Vec3 to, Vec3 w);
// Unit normal of the geodesic through a and b (Minkowski cross product).
Vec3 geodesic_normal(Vec3 a, Vec3 b);
// Distance from X to the geodesic segment [a, b].
double distance_to_segment(Vec3 X, Vec3 a, Vec3 b);

// Fermi coordinates about an oriented geodesic: P(s,u) sits at signed distance u
// from the axis, over the axis point at arclength s.
struct Frame {
    Vec3 o{1, 0, 0}, e1{0, 1, 0}, e2{0, 0, 1};

    Vec3 point(double s, double u) const;
    // d/ds and d/du of point(s,u).
    Vec3 ds(double s, double u) const;
    Vec3 du(double s, double u) const;
    std::pair<double, double> coords(Vec3 X) const;
    Frame shifted(double s0) const;
    Frame transformed(const Mat3& m) const;
};

// sinh^2(d/2) between two points given in the same Fermi chart.
inline double fermi_half_chord_sq(double s1, double u1, double s2, double u2) {
    double a = std::sinh(0.5 * (s1 - s2));
    double b = std::sinh(0.5 * (u1 - u2));
    return std::cosh(u1) * std::cosh(u2) * a * a + b * b;
}

}  // namespace lsep
