#include "lsep/conformal_metric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "lsep/errors.hpp"
#include "lsep/kernels.hpp"
#include "lsep/surface_group.hpp"

namespace lsep {

namespace profile {

double chi(double s) {
    double S = s * s;
    if (!(S < kCutoff * kCutoff)) return 0.0;
    return kNorm * std::exp(-1.0 / (1.0 - S));
}

double sup_derivative(int j) {
    static const std::array<double, 5> sup = [] {
        std::array<double, 5> m{};
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            double s = static_cast<double>(i) / n;
            auto x = Jet<1, 4>::variable(s);
            auto c = chi_of_S(x * x);
            for (int d = 0; d <= 4; ++d) m[d] = std::max(m[d], std::abs(c.derivative(d)));
        }
        return m;
    }();
    if (j < 0 || j > 4) throw Error(ErrorKind::Validation, "derivative order out of range");
    return sup[j];
}

double budget_constant(int k) {
    double m = 0.0;
    for (int j = 0; j <= k; ++j) m = std::max(m, sup_derivative(j));
    return 2.0 * m;
}

}  // namespace profile

namespace {

const std::vector<Translate>& image_translates() {
    static const std::vector<Translate> t = bolza_surface().ball(2.0 * octagon_circumradius() + kImageReach);
    return t;
}

// (1 - cosh t) and sinh t as jets in t
template <int K>
Jet<1, K> cosh_minus_one() {
    Jet<1, K> r;
    double f = 1.0;
    for (int n = 1; n <= K; ++n) {
        f *= n;
        if (n % 2 == 0) r.c[n] = 1.0 / f;
    }
    return r;
}

template <int K>
Jet<1, K> sinh_t() {
    Jet<1, K> r;
    double f = 1.0;
    for (int n = 1; n <= K; ++n) {
        f *= n;
        if (n % 2 == 1) r.c[n] = 1.0 / f;
    }
    return r;
}

void tangent_basis(Vec3 X, Vec3& E1, Vec3& E2) {
    Vec3 a = project_tangent(X, Vec3{0, 1, 0});
    if (tnorm(a) < 1e-3) a = project_tangent(X, Vec3{0, 0, 1});
    E1 = (1.0 / tnorm(a)) * a;
    Vec3 b = project_tangent(X, Vec3{0, 0, 1});
    if (tnorm(b) < 1e-3 || std::abs(mdot(b, E1)) > 0.99 * tnorm(b)) b = project_tangent(X, Vec3{1, 0, 0});
    b = b - mdot(b, E1) * E1;
    E2 = (1.0 / tnorm(b)) * b;
}

}  // namespace

ConformalMetric::ConformalMetric(std::vector<Bump> bumps, double log_scale)
    : bumps_(std::move(bumps)), log_scale_(log_scale) {
    const double inj = injectivity_radius();
    const double Rc = octagon_circumradius();
    const Surface& S = bolza_surface();
    for (std::size_t b = 0; b < bumps_.size(); ++b) {
        const Bump& bp = bumps_[b];
        if (!(bp.r0 > 0.0) || !(bp.r0 < 0.5 * inj))
            throw Error(ErrorKind::Validation, "bump radius must lie in (0, r_inj/2)");
        if (!(std::abs(bp.delta) / bp.r0 < 1.0)) throw Error(ErrorKind::Validation, "bump needs |delta|/r0 < 1");
        if (bp.r0 > kImageReach) throw Error(ErrorKind::Validation, "bump radius exceeds image reach");
        if (!S.in_octagon(bp.center, 1e-9)) throw Error(ErrorKind::Validation, "bump center outside the octagon");
        max_r0_ = std::max(max_r0_, bp.r0);
        for (const auto& t : image_translates()) {
            Vec3 c = t.L * bp.center;
            if (c.x0 > std::cosh(Rc + kImageReach)) continue;
            images_.push_back({static_cast<int>(b), c});
            ix0_.push_back(c.x0);
            ix1_.push_back(c.x1);
            ix2_.push_back(c.x2);
        }
    }
}

ConformalMetric ConformalMetric::with(const std::vector<Bump>& extra) const {
    auto b = bumps_;
    b.insert(b.end(), extra.begin(), extra.end());
    return ConformalMetric(std::move(b), log_scale_);
}

std::vector<BumpImage> ConformalMetric::centers_near(Vec3 X, double reach) const {
    std::vector<BumpImage> out;
    if (images_.empty()) return out;
    if (reach > kImageReach) throw Error(ErrorKind::Validation, "reach exceeds the precomputed image ball");
    auto [Xr, g] = bolza_surface().reduce(X);
    std::vector<std::uint32_t> hits;
    kernels::below(Xr, kernels::Points{ix0_.data(), ix1_.data(), ix2_.data(), ix0_.size()}, q_from_distance(reach),
                   hits);
    if (hits.empty()) return out;
    Mat3 gi = lorentz_inverse(g);
    for (auto h : hits) out.push_back({images_[h].bump, gi * images_[h].center});
    return out;
}

double ConformalMetric::F(Vec3 X) const {
    double f = log_scale_;
    if (bumps_.empty()) return f;
    for (const auto& im : centers_near(X, max_r0_)) {
        const Bump& b = bumps_[im.bump];
        double rho = distance(X, im.center);
        double c = profile::chi(rho / b.r0);
        if (c != 0.0) f += std::log1p(b.amplitude() * c);
    }
    return f;
}

template <int K>
Jet<1, K> ConformalMetric::F_along(Vec3 X, Vec3 V) const {
    return F_along<K>(X, V, centers_near(X, max_r0_));
}

template <int K>
Jet<1, K> ConformalMetric::F_along(Vec3 X, Vec3 V, const std::vector<BumpImage>& near) const {
    Jet<1, K> f(log_scale_);
    static const Jet<1, K> ch = cosh_minus_one<K>();
    static const Jet<1, K> sh = sinh_t<K>();
    for (const auto& im : near) {
        const Bump& b = bumps_[im.bump];
        double q0 = half_chord_sq(X, im.center);
        // q(t) = q0 - (cosh t - 1) <X,C>/2 - sinh t <V,C>/2
        Jet<1, K> q = Jet<1, K>(q0) - (0.5 * mdot(X, im.center)) * ch - (0.5 * mdot(V, im.center)) * sh;
        f += bump_log_factor(q, b.r0, b.amplitude());
    }
    return f;
}

template <int K>
Jet<2, K> ConformalMetric::F_disk(std::complex<double> w) const {
    Jet<2, K> f(log_scale_);
    if (bumps_.empty()) return f;
    auto x = Jet<2, K>::variable(w.real(), 0), y = Jet<2, K>::variable(w.imag(), 1);
    for (const auto& im : centers_near(from_disk(w), max_r0_)) {
        const Bump& b = bumps_[im.bump];
        std::complex<double> c = to_disk(im.center);
        Jet<2, K> dx = x - c.real(), dy = y - c.imag();
        Jet<2, K> num = dx * dx + dy * dy;
        Jet<2, K> den = (1.0 - (x * x + y * y)) * (1.0 - std::norm(c));
        f += bump_log_factor(num * inv(den), b.r0, b.amplitude());
    }
    return f;
}

template Jet<1, 1> ConformalMetric::F_along<1>(Vec3, Vec3) const;
template Jet<1, 2> ConformalMetric::F_along<2>(Vec3, Vec3) const;
template Jet<1, 3> ConformalMetric::F_along<3>(Vec3, Vec3) const;
template Jet<1, 4> ConformalMetric::F_along<4>(Vec3, Vec3) const;
template Jet<1, 2> ConformalMetric::F_along<2>(Vec3, Vec3, const std::vector<BumpImage>&) const;
template Jet<1, 4> ConformalMetric::F_along<4>(Vec3, Vec3, const std::vector<BumpImage>&) const;
template Jet<2, 1> ConformalMetric::F_disk<1>(std::complex<double>) const;
template Jet<2, 2> ConformalMetric::F_disk<2>(std::complex<double>) const;

FactorValue factor_at(const ConformalMetric& g, std::complex<double> w, int max_order) {
    if (max_order < 0 || max_order > 2) throw Error(ErrorKind::Validation, "factor_at supports orders 0..2");
    auto j = g.F_disk<2>(w);
    FactorValue v;
    v.F = j.value();
    if (max_order >= 1) {
        v.dx = j.derivative(1, 0);
        v.dy = j.derivative(0, 1);
    }
    if (max_order >= 2) {
        v.dxx = j.derivative(2, 0);
        v.dxy = j.derivative(1, 1);
        v.dyy = j.derivative(0, 2);
    }
    return v;
}

double curvature_at(const ConformalMetric& g, Vec3 X) {
    if (g.bumps().empty()) return -std::exp(-2.0 * g.log_scale());
    Vec3 E1, E2;
    tangent_basis(X, E1, E2);
    auto near = g.centers_near(X, g.max_r0());
    auto a = g.F_along<2>(X, E1, near), b = g.F_along<2>(X, E2, near);
    double lap = a.derivative(2) + b.derivative(2);
    return std::exp(-2.0 * a.value()) * (-1.0 - lap);
}

namespace {

struct Sampler {
    const ConformalMetric& g;
    int k;
    std::vector<double> nF, nphi;
    double Kmin = 1e300, Kmax = -1e300, Fmin = 1e300, Fmax = -1e300;
    std::size_t n = 0;

    Sampler(const ConformalMetric& m, int order) : g(m), k(order), nF(order + 1, 0.0), nphi(order + 1, 0.0) {}

    void at(Vec3 X, Vec3 E1, Vec3 E2) {
        auto near = g.centers_near(X, g.max_r0());
        double second[2] = {0.0, 0.0}, F0 = 0.0;
        for (int m = 0; m < 12; ++m) {
            double th = m * M_PI / 12.0;
            Vec3 V = std::cos(th) * E1 + std::sin(th) * E2;
            auto F = g.F_along<4>(X, V, near);
            auto phi = exp(2.0 * F) - 1.0;
            for (int j = 0; j <= k; ++j) {
                nF[j] = std::max(nF[j], std::abs(F.derivative(j)));
                nphi[j] = std::max(nphi[j], std::abs(phi.derivative(j)));
            }
            if (m == 0) second[0] = F.derivative(2);
            if (m == 6) second[1] = F.derivative(2);
            if (m == 0) F0 = F.value();
        }
        Fmin = std::min(Fmin, F0);
        Fmax = std::max(Fmax, F0);
        double K = std::exp(-2.0 * F0) * (-1.0 - second[0] - second[1]);
        Kmin = std::min(Kmin, K);
        Kmax = std::max(Kmax, K);
        ++n;
    }

    // 17 x 17 tangent-plane grid over [-r0, r0]^2 around c
    void bump_grid(Vec3 c, double r0) {
        Vec3 E1, E2;
        tangent_basis(c, E1, E2);
        for (int i = 0; i < 17; ++i)
            for (int j = 0; j < 17; ++j) {
                double x = r0 * (i - 8) / 8.0, y = r0 * (j - 8) / 8.0;
                Vec3 X = exp_map(c, x * E1 + y * E2);
                at(X, transport(c, X, E1), transport(c, X, E2));
            }
    }

    void global_grid() {
        const Surface& S = bolza_surface();
        double R = std::tanh(0.5 * octagon_circumradius());
        for (int i = 0; i < 33; ++i)
            for (int j = 0; j < 33; ++j) {
                std::complex<double> w(R * (i - 16) / 16.0, R * (j - 16) / 16.0);
                if (std::abs(w) >= 0.999) continue;
                Vec3 X = from_disk(w);
                if (!S.in_octagon(X, 1e-9)) continue;
                Vec3 E1, E2;
                tangent_basis(X, E1, E2);
                at(X, E1, E2);
            }
    }
};

double bump_budget(const Bump& b, int k) {
    double a = std::abs(b.amplitude());
    return profile::budget_constant(k) * std::abs(b.delta) * std::pow(b.r0, -(k + 1)) *
           (1.0 + 2.0 * a * profile::chi(0.0)) * (1.0 + b.r0 * b.r0);
}

}  // namespace

CkNormReport admissibility(const ConformalMetric& g, double eps0, int k) {
    if (k < 2 || k > 4) throw Error(ErrorKind::Validation, "admissibility order must lie in [2, 4]");
    CkNormReport r;
    r.k = k;
    r.eps0 = eps0;
    Sampler s(g, k);
    for (const auto& b : g.bumps()) {
        s.bump_grid(b.center, b.r0);
        r.budget = std::max(r.budget, bump_budget(b, k));
    }
    s.global_grid();
    r.norm_F = s.nF;
    r.norm_phi = s.nphi;
    r.norm = *std::max_element(s.nphi.begin(), s.nphi.end());
    r.K_min = s.Kmin;
    r.K_max = s.Kmax;
    r.samples = s.n;
    r.c0_distortion = std::max(std::expm1(2.0 * s.Fmax), std::expm1(-2.0 * s.Fmin));
    r.c0_distortion = std::max(r.c0_distortion, 0.0);

    std::map<int, std::vector<Bump>> by_window;
    for (const auto& b : g.bumps()) by_window[b.window].push_back(b);
    if (by_window.size() > 1 || (by_window.size() == 1 && g.log_scale() != 0.0)) {
        for (const auto& [w, bs] : by_window) {
            ConformalMetric only(bs);
            Sampler sw(only, k);
            double budget = 0.0;
            for (const auto& b : bs) {
                sw.bump_grid(b.center, b.r0);
                budget = std::max(budget, bump_budget(b, k));
            }
            r.windows.push_back({w, *std::max_element(sw.nphi.begin(), sw.nphi.end()), budget});
        }
    } else if (by_window.size() == 1) {
        r.windows.push_back({by_window.begin()->first, r.norm, r.budget});
    }
    r.admissible = r.K_max < 0.0 && r.norm < eps0;
    return r;
}

}  // namespace lsep
