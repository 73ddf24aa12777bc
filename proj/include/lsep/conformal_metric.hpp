#pragma once

#include <complex>
#include <string>
#include <vector>

#include "lsep/hyperbolic.hpp"
#include "lsep/jet.hpp"

namespace lsep {

// chi(s) = c exp(-1/(1 - s^2)) on |s| < 1, with the diameter integral equal to one.
namespace profile {
inline constexpr double kNorm = 2.252283621043581010499781255559830730074;
inline constexpr double kCutoff = 1.0 - 1e-12;
double chi(double s);
// chi as a function of S = s^2
template <int D, int K>
Jet<D, K> chi_of_S(const Jet<D, K>& S) {
    if (!(S.value() < kCutoff * kCutoff)) return Jet<D, K>();
    Jet<D, K> u = 1.0 - S;
    return kNorm * exp(-inv(u));
}
// sup |chi^{(j)}| over [0, 1), by dense evaluation; j <= 4
double sup_derivative(int j);
// C_k = 2 max_{j<=k} sup |chi^{(j)}|, the constant of the budget C_k |delta| r0^{-(k+1)}
double budget_constant(int k);
}  // namespace profile

// rho^2 = (2 asinh sqrt q)^2 as a function of q = sinh^2(rho/2); smooth through q = 0.
template <int D, int K>
Jet<D, K> rho_sq_of_q(const Jet<D, K>& q) {
    if (q.value() <= 0.01) {
        // 4 sum a_n q^n, a_1 = 1, a_{n+1}/a_n = -2n^2/((2n+1)(n+1))
        Jet<D, K> r, p = q;
        double a = 1.0;
        for (int n = 1; n <= 20; ++n) {
            r += a * p;
            p = p * q;
            a *= -2.0 * n * n / ((2.0 * n + 1.0) * (n + 1.0));
        }
        return 4.0 * r;
    }
    Jet<D, K> t = asinh(sqrt(q));
    return 4.0 * (t * t);
}

// log(1 + a chi(rho/r0)) as a function of q = sinh^2(rho/2)
template <int D, int K>
Jet<D, K> bump_log_factor(const Jet<D, K>& q, double r0, double a) {
    Jet<D, K> S = rho_sq_of_q(q);
    S *= 1.0 / (r0 * r0);
    Jet<D, K> c = profile::chi_of_S(S);
    c *= a;
    return log(1.0 + c);
}

struct Bump {
    Vec3 center;     // in the closed fundamental octagon
    double r0 = 0.0;
    double delta = 0.0;
    int window = 0;
    int index = 0;   // i within the window
    int class_index = -1;
    std::string word;
    double amplitude() const { return delta / r0; }
};

// A bump center seen from some chart: position and the bump it came from.
struct BumpImage {
    int bump;
    Vec3 center;
};

class ConformalMetric {
public:
    ConformalMetric() = default;
    explicit ConformalMetric(std::vector<Bump> bumps, double log_scale = 0.0);

    const std::vector<Bump>& bumps() const { return bumps_; }
    // constant added to F (the e^{2F} = const metrics used in distortion checks)
    double log_scale() const { return log_scale_; }
    ConformalMetric with(const std::vector<Bump>& extra) const;
    bool empty() const { return bumps_.empty() && log_scale_ == 0.0; }
    double max_r0() const { return max_r0_; }

    // All images of bump centers within `reach` of X (any lift), expressed in X's chart.
    std::vector<BumpImage> centers_near(Vec3 X, double reach) const;

    double F(Vec3 X) const;
    // F along the base geodesic t -> cosh t X + sinh t V as a Taylor jet in t.
    template <int K>
    Jet<1, K> F_along(Vec3 X, Vec3 V) const;
    template <int K>
    Jet<1, K> F_along(Vec3 X, Vec3 V, const std::vector<BumpImage>& near) const;
    // F and its derivatives in disk coordinates at w.
    template <int K>
    Jet<2, K> F_disk(std::complex<double> w) const;

private:
    std::vector<Bump> bumps_;
    double log_scale_ = 0.0;
    double max_r0_ = 0.0;
    // every translate of every center within 2R + kReach of the origin
    std::vector<BumpImage> images_;
    std::vector<double> ix0_, ix1_, ix2_;
};

inline constexpr double kImageReach = 1.0;

struct FactorValue {
    double F = 0.0;
    double dx = 0.0, dy = 0.0;
    double dxx = 0.0, dxy = 0.0, dyy = 0.0;
};

// F and coordinate derivatives (disk model) up to max_order <= 2.
FactorValue factor_at(const ConformalMetric& g, std::complex<double> w, int max_order = 2);
// Gaussian curvature of e^{2F} g0 at X.
double curvature_at(const ConformalMetric& g, Vec3 X);
// First-order length change predicted for the bump's geodesic.
inline double bump_length_increment(const Bump& b) { return b.delta; }

struct CkWindowNorm {
    int window;
    double norm;    // C^k norm of the window's own factor minus one
    double budget;  // C_k max|delta| r0^{-(k+1)} (1 + 2 max|a| chi(0)) (1 + r0^2)
};

struct CkNormReport {
    int k = 2;
    double eps0 = 0.0;
    std::vector<double> norm_F;    // sup |d^j F| per order j = 0..k
    std::vector<double> norm_phi;  // sup |d^j (e^{2F} - 1)| per order
    double norm = 0.0;             // max_j norm_phi[j]
    double budget = 0.0;
    double K_min = -1.0, K_max = -1.0;
    double c0_distortion = 0.0;    // smallest D with e^{2F} in [1/(1+D), 1+D]
    std::size_t samples = 0;
    std::vector<CkWindowNorm> windows;
    bool admissible = true;
};

CkNormReport admissibility(const ConformalMetric& g, double eps0, int k);

}  // namespace lsep
