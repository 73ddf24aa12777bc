#include "lsep/hyperbolic.hpp"

#include <algorithm>

namespace lsep {

Vec3 operator*(const Mat3& m, Vec3 v) {
    return {m(0, 0) * v.x0 + m(0, 1) * v.x1 + m(0, 2) * v.x2,
            m(1, 0) * v.x0 + m(1, 1) * v.x1 + m(1, 2) * v.x2,
            m(2, 0) * v.x0 + m(2, 1) * v.x1 + m(2, 2) * v.x2};
}

Mat3 operator*(const Mat3& m, const Mat3& n) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = m(i, 0) * n(0, j) + m(i, 1) * n(1, j) + m(i, 2) * n(2, j);
    return r;
}

Mat3 lorentz_inverse(const Mat3& m) {
    static constexpr double J[3] = {-1.0, 1.0, 1.0};
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = J[i] * m(j, i) * J[j];
    return r;
}

Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

Mat2 inverse(const Mat2& m) { return {m.d, -m.b, -m.c, m.a}; }

Mat2 renormalized(const Mat2& m) {
    double s = 1.0 / std::sqrt(det(m));
    return {m.a * s, m.b * s, m.c * s, m.d * s};
}

Mat3 lorentz(const Mat2& m) {
    // Columns are images of the basis symmetric matrices I, diag(1,-1), [[0,1],[1,0]].
    auto image = [&](double s00, double s01, double s11) {
        // M S M^T
        double t00 = m.a * s00 + m.b * s01, t01 = m.a * s01 + m.b * s11;
        double t10 = m.c * s00 + m.d * s01, t11 = m.c * s01 + m.d * s11;
        double r00 = t00 * m.a + t01 * m.b;
        double r01 = t00 * m.c + t01 * m.d;
        double r11 = t10 * m.c + t11 * m.d;
        return Vec3{0.5 * (r00 + r11), 0.5 * (r00 - r11), r01};
    };
    Vec3 c0 = image(1, 0, 1), c1 = image(1, 0, -1), c2 = image(0, 1, 0);
    Mat3 r;
    r(0, 0) = c0.x0; r(1, 0) = c0.x1; r(2, 0) = c0.x2;
    r(0, 1) = c1.x0; r(1, 1) = c1.x1; r(2, 1) = c1.x2;
    r(0, 2) = c2.x0; r(1, 2) = c2.x1; r(2, 2) = c2.x2;
    return r;
}

std::complex<double> to_disk(Vec3 X) { return {X.x1 / (1.0 + X.x0), -X.x2 / (1.0 + X.x0)}; }

Vec3 from_disk(std::complex<double> w) {
    double r2 = std::norm(w);
    double den = 1.0 - r2;
    return {(1.0 + r2) / den, 2.0 * w.real() / den, -2.0 * w.imag() / den};
}

std::complex<double> uhp_to_disk(std::complex<double> z) {
    const std::complex<double> i(0.0, 1.0);
    return (z - i) / (z + i);
}

std::complex<double> disk_to_uhp(std::complex<double> w) {
    const std::complex<double> i(0.0, 1.0);
    return i * (1.0 + w) / (1.0 - w);
}

double disk_half_chord_sq(std::complex<double> z, std::complex<double> w) {
    return std::norm(z - w) / ((1.0 - std::norm(z)) * (1.0 - std::norm(w)));
}

Vec3 normalize_point(Vec3 X) {
    double n = -mdot(X, X);
    return (1.0 / std::sqrt(n)) * X;
}

Vec3 exp_map(Vec3 X, Vec3 v) {
    double t = tnorm(v);
    if (t == 0.0) return X;
    return std::cosh(t) * X + (std::sinh(t) / t) * v;
}

Vec3 transport(Vec3 from, Vec3 to, Vec3 w) {
    double k = mdot(to, w) / (1.0 - mdot(from, to));
    return w + k * (from + to);
}

Vec3 geodesic_normal(Vec3 a, Vec3 b) {
    // Euclidean cross product followed by J makes the result Minkowski-orthogonal to a and b.
    Vec3 c{a.x1 * b.x2 - a.x2 * b.x1, a.x2 * b.x0 - a.x0 * b.x2, a.x0 * b.x1 - a.x1 * b.x0};
    Vec3 n{-c.x0, c.x1, c.x2};
    return (1.0 / tnorm(n)) * n;
}

double distance_to_segment(Vec3 X, Vec3 a, Vec3 b) {
    double qab = half_chord_sq(a, b);
    if (qab <= 0.0) return distance(X, a);
    double L = distance_from_q(qab);
    // unit tangent at a pointing to b
    Vec3 t = b - std::cosh(L) * a;
    t = (1.0 / std::sinh(L)) * t;
    // parameter of the foot of X on the line through a, b
    double A = -mdot(X, a), B = mdot(X, t);
    double tau = 0.5 * std::log((A + B) / (A - B));
    tau = std::clamp(tau, 0.0, L);
    Vec3 c = std::cosh(tau) * a + std::sinh(tau) * t;
    return distance(X, c);
}

Vec3 Frame::point(double s, double u) const {
    double cu = std::cosh(u);
    return (cu * std::cosh(s)) * o + (cu * std::sinh(s)) * e1 + std::sinh(u) * e2;
}

Vec3 Frame::ds(double s, double u) const {
    double cu = std::cosh(u);
    return (cu * std::sinh(s)) * o + (cu * std::cosh(s)) * e1;
}

Vec3 Frame::du(double s, double u) const {
    double su = std::sinh(u);
    return (su * std::cosh(s)) * o + (su * std::sinh(s)) * e1 + std::cosh(u) * e2;
}

std::pair<double, double> Frame::coords(Vec3 X) const {
    double u = std::asinh(mdot(X, e2));
    double A = -mdot(X, o), B = mdot(X, e1);
    double s = 0.5 * std::log((A + B) / (A - B));
    return {s, u};
}

Frame Frame::shifted(double s0) const {
    Frame f;
    f.o = std::cosh(s0) * o + std::sinh(s0) * e1;
    f.e1 = std::sinh(s0) * o + std::cosh(s0) * e1;
    f.e2 = e2;
    return f;
}

Frame Frame::transformed(const Mat3& m) const {
    Frame f;
    f.o = m * o;
    f.e1 = m * e1;
    f.e2 = m * e2;
    return f;
}

}  // namespace lsep
