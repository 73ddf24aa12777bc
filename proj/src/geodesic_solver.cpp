#include "lsep/geodesic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lsep/errors.hpp"

namespace lsep {

namespace {

double wrap(double s, double period) {
    double r = std::fmod(s, period);
    if (r < 0) r += period;
    if (r >= period) r -= period;
    return r;
}

using J2 = Jet<2, 2>;

// Point of the Fermi chart in frame components, with s measured from sc.
struct FermiJet {
    J2 p0, p1, p2;
};

FermiJet fermi_point(double sigma, const J2& u) {
    J2 cu = cosh(u);
    return {std::cosh(sigma) * cu, std::sinh(sigma) * cu, sinh(u)};
}

struct Segment {
    double L = 0.0;
    double g1 = 0.0, g2 = 0.0;
    double h11 = 0.0, h12 = 0.0, h22 = 0.0;
};

// Lifts that can touch segment i, found by a window on s.
class Evaluator {
public:
    Evaluator(const DiscreteClosedCurve& c, const ConformalMetric& g) : c_(c), log_scale_(g.log_scale()) {
        lifts_ = bump_lifts(c, g);
        std::sort(lifts_.begin(), lifts_.end(), [](const BumpLift& a, const BumpLift& b) {
            return a.s < b.s || (a.s == b.s && a.bump < b.bump);
        });
    }

    const std::vector<BumpLift>& lifts() const { return lifts_; }

    Segment segment(std::size_t i, double u1v, double u2v) const {
        const double s1 = c_.s[i], s2 = c_.s_next(i);
        J2 u1 = J2::variable(u1v, 0), u2 = J2::variable(u2v, 1);
        double sh = std::sinh(0.5 * (s2 - s1));
        J2 du = sinh(0.5 * (u1 - u2));
        J2 q = (sh * sh) * (cosh(u1) * cosh(u2)) + du * du;
        J2 d = 2.0 * asinh(sqrt(q));
        J2 F(log_scale_);
        bool touched = log_scale_ != 0.0;
        if (!lifts_.empty()) {
            const double sm = 0.5 * (s1 + s2);
            for (const auto& b : lifts_) {
                double sc = nearest_rep(b.s, sm);
                double reach = b.r0 + (s2 - s1) + std::abs(b.u) + std::max(std::abs(u1v), std::abs(u2v));
                if (std::abs(sm - sc) > reach) continue;
                // midpoint of the segment minus the bump center, in frame components
                FermiJet P1 = fermi_point(s1 - sc, u1), P2 = fermi_point(s2 - sc, u2);
                J2 m0 = P1.p0 + P2.p0, m1 = P1.p1 + P2.p1, m2 = P1.p2 + P2.p2;
                J2 nrm = inv(sqrt(m0 * m0 - m1 * m1 - m2 * m2));
                m0 = m0 * nrm;
                m1 = m1 * nrm;
                m2 = m2 * nrm;
                J2 d0 = m0 - std::cosh(b.u), d2 = m2 - std::sinh(b.u);
                J2 qc = 0.25 * (d2 * d2 + m1 * m1 - d0 * d0);
                if (qc.value() >= q_from_distance(b.r0)) continue;
                F += bump_log_factor(qc, b.r0, b.a);
                touched = true;
            }
        }
        J2 f = touched ? exp(F) * d : d;
        Segment s;
        s.L = f.value();
        s.g1 = f.derivative(1, 0);
        s.g2 = f.derivative(0, 1);
        s.h11 = f.derivative(2, 0);
        s.h12 = f.derivative(1, 1);
        s.h22 = f.derivative(0, 2);
        return s;
    }

    double F_at(double s, double u) const {
        double f = log_scale_;
        for (const auto& b : lifts_) {
            double sc = nearest_rep(b.s, s);
            double q = fermi_half_chord_sq(s, u, sc, b.u);
            if (q >= q_from_distance(b.r0)) continue;
            f += std::log1p(b.a * profile::chi(distance_from_q(q) / b.r0));
        }
        return f;
    }

private:
    double nearest_rep(double sc, double s) const {
        double p = c_.period;
        return sc + p * std::round((s - sc) / p);
    }

    const DiscreteClosedCurve& c_;
    double log_scale_;
    std::vector<BumpLift> lifts_;
};

struct System {
    double L = 0.0;
    std::vector<double> g, diag, off;  // off[i] couples i and i+1 (cyclic)
};

System assemble(const Evaluator& ev, const DiscreteClosedCurve& c, const std::vector<double>& u) {
    const std::size_t N = c.size();
    System S;
    S.g.assign(N, 0.0);
    S.diag.assign(N, 0.0);
    S.off.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t j = (i + 1) % N;
        Segment seg = ev.segment(i, u[i], u[j]);
        S.L += seg.L;
        S.g[i] += seg.g1;
        S.g[j] += seg.g2;
        S.diag[i] += seg.h11;
        S.diag[j] += seg.h22;
        S.off[i] += seg.h12;
    }
    return S;
}

double energy(const Evaluator& ev, const DiscreteClosedCurve& c, const std::vector<double>& u) {
    double L = 0.0;
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) L += ev.segment(i, u[i], u[(i + 1) % N]).L;
    return L;
}

// Solves the cyclic tridiagonal system; returns false if a pivot is not positive.
bool solve_cyclic(const std::vector<double>& d, const std::vector<double>& off, const std::vector<double>& rhs,
                  std::vector<double>& x) {
    const std::size_t N = d.size();
    if (N < 3) return false;
    // Sherman-Morrison: A = T + u v^T with the corner coupling folded into u, v.
    const double gamma = -d[0];
    std::vector<double> a(N, 0.0), b(d), cc(N, 0.0);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        cc[i] = off[i];
        a[i + 1] = off[i];
    }
    const double corner = off[N - 1];
    b[0] -= gamma;
    b[N - 1] -= corner * corner / gamma;
    auto thomas = [&](const std::vector<double>& r, std::vector<double>& y) {
        std::vector<double> cp(N), dp(N);
        if (!(b[0] > 0.0)) return false;
        cp[0] = cc[0] / b[0];
        dp[0] = r[0] / b[0];
        for (std::size_t i = 1; i < N; ++i) {
            double m = b[i] - a[i] * cp[i - 1];
            if (!(m > 0.0)) return false;
            cp[i] = cc[i] / m;
            dp[i] = (r[i] - a[i] * dp[i - 1]) / m;
        }
        y.assign(N, 0.0);
        y[N - 1] = dp[N - 1];
        for (std::size_t i = N - 1; i-- > 0;) y[i] = dp[i] - cp[i] * y[i + 1];
        return true;
    };
    std::vector<double> y, z, uvec(N, 0.0);
    uvec[0] = gamma;
    uvec[N - 1] = corner;
    if (!thomas(rhs, y) || !thomas(uvec, z)) return false;
    double vy = y[0] + corner / gamma * y[N - 1];
    double vz = z[0] + corner / gamma * z[N - 1];
    double den = 1.0 + vz;
    if (den == 0.0) return false;
    x.resize(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = y[i] - z[i] * vy / den;
    return true;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> build_grid(double period, double spacing, const std::vector<BumpLift>& lifts) {
    const std::size_t N = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(period / spacing - 1e-12)));
    struct Iv {
        double lo, hi, h, c;
    };
    std::vector<Iv> ivs;
    for (const auto& b : lifts) {
        if (std::abs(b.u) > 1.5 * b.r0) continue;
        double w = 1.2 * b.r0;
        ivs.push_back({b.s - w, b.s + w, b.r0 / 16.0, b.s});
    }
    auto inside = [&](double s) {
        for (const auto& iv : ivs)
            for (int k = -1; k <= 1; ++k)
                if (s >= iv.lo + k * period && s <= iv.hi + k * period) return true;
        return false;
    };
    std::vector<double> pts;
    for (std::size_t k = 0; k < N; ++k) {
        double s = period * static_cast<double>(k) / static_cast<double>(N);
        if (!inside(s)) pts.push_back(s);
    }
    double hmin = spacing;
    for (const auto& iv : ivs) {
        hmin = std::min(hmin, iv.h);
        int jlo = static_cast<int>(std::ceil((iv.lo - iv.c) / iv.h));
        int jhi = static_cast<int>(std::floor((iv.hi - iv.c) / iv.h));
        for (int j = jlo; j <= jhi; ++j) pts.push_back(wrap(iv.c + j * iv.h, period));
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double s : pts)
        if (out.empty() || s - out.back() > 0.25 * hmin) out.push_back(s);
    if (out.size() > 1 && out.front() + period - out.back() <= 0.25 * hmin) out.pop_back();
    // keep s_0 = 0 as the anchor of the period when the grid is uniform
    return out;
}

}  // namespace

Frame axis_frame(const Mat2& m) {
    double ell = class_length(m);
    Vec3 n = axis_normal(m);
    Vec3 p = normalize_point(kOrigin - mdot(kOrigin, n) * n);
    Vec3 e1 = mcross(p, n);
    e1 = (1.0 / tnorm(e1)) * e1;
    Vec3 Bp = lorentz(m) * p;
    if (mdot(Bp, e1) < 0.0) e1 = -e1;
    Frame f;
    f.o = p;
    f.e1 = e1;
    f.e2 = n;
    return f.shifted(-0.5 * ell);
}

DiscreteClosedCurve initial_curve(const Mat2& twist, const ConformalMetric& g, double spacing) {
    if (!(spacing > 0.0)) throw Error(ErrorKind::Validation, "spacing must be positive");
    DiscreteClosedCurve c;
    c.twist = twist;
    c.period = class_length(twist);
    c.frame = axis_frame(twist);
    c.spacing = spacing;
    const std::size_t N = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(c.period / spacing - 1e-12)));
    for (std::size_t k = 0; k < N; ++k) c.s.push_back(c.period * static_cast<double>(k) / static_cast<double>(N));
    c.u.assign(N, 0.0);
    if (!g.bumps().empty()) {
        auto lifts = bump_lifts(c, g);
        bool local = false;
        for (const auto& b : lifts) local |= std::abs(b.u) <= 1.5 * b.r0;
        if (local) {
            c.s = build_grid(c.period, spacing, lifts);
            c.u.assign(c.s.size(), 0.0);
        }
    }
    return c;
}

DiscreteClosedCurve initial_curve(const ConjugacyClass& cls, const ConformalMetric& g, double spacing) {
    auto c = initial_curve(cls.rep.m, g, spacing);
    return c;
}

std::vector<BumpLift> bump_lifts(const DiscreteClosedCurve& c, const ConformalMetric& g) {
    std::vector<BumpLift> out;
    if (g.bumps().empty()) return out;
    double rmin = 1e300, rmax = 0.0;
    for (const auto& b : g.bumps()) {
        rmin = std::min(rmin, b.r0);
        rmax = std::max(rmax, b.r0);
    }
    const double h = std::min(c.spacing > 0 ? c.spacing : 0.01, 0.5 * rmin);
    const int n = static_cast<int>(std::ceil(c.period / h));
    for (int k = 0; k < n; ++k) {
        double s = c.period * k / n;
        Vec3 X = c.frame.point(s, 0.0);
        for (const auto& im : g.centers_near(X, std::min(2.5 * rmax, kImageReach))) {
            const Bump& b = g.bumps()[im.bump];
            auto [sc, uc] = c.frame.coords(im.center);
            if (std::abs(uc) > 1.5 * b.r0) continue;
            sc = wrap(sc, c.period);
            bool dup = false;
            for (const auto& e : out) {
                if (e.bump != im.bump) continue;
                double ds = std::abs(e.s - sc);
                ds = std::min(ds, c.period - ds);
                if (ds < 1e-9 && std::abs(e.u - uc) < 1e-9) dup = true;
            }
            if (!dup) out.push_back({im.bump, sc, uc, b.r0, b.amplitude()});
        }
    }
    return out;
}

double curve_length(const DiscreteClosedCurve& c, const ConformalMetric& g) {
    Evaluator ev(c, g);
    return energy(ev, c, c.u);
}

double geodesic_residual(const DiscreteClosedCurve& c, const ConformalMetric& g) {
    Evaluator ev(c, g);
    System S = assemble(ev, c, c.u);
    const double h = c.spacing > 0 ? c.spacing : 0.01;
    double r = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        double step = S.diag[i] > 0.0 ? std::abs(S.g[i] / S.diag[i]) : std::abs(S.g[i]) * h;
        r = std::max(r, step / (h * h));
    }
    return r;
}

std::vector<Vec3> unit_tangents(const DiscreteClosedCurve& c, const ConformalMetric& g) {
    Evaluator ev(c, g);
    const std::size_t N = c.size();
    std::vector<Vec3> T(N);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t ip = (i + 1) % N, im = (i + N - 1) % N;
        double sp = i + 1 < N ? c.s[ip] : c.s[ip] + c.period;
        double sm = i > 0 ? c.s[im] : c.s[im] - c.period;
        Vec3 X = c.node(i);
        Vec3 v = project_tangent(X, c.frame.point(sp, c.u[ip]) - c.frame.point(sm, c.u[im]));
        double scale = std::exp(ev.F_at(c.s[i], c.u[i])) * tnorm(v);
        T[i] = (1.0 / scale) * v;
    }
    return T;
}

ClosedGeodesicNumeric relax(DiscreteClosedCurve c, const ConformalMetric& g, const SolverOptions& opt) {
    if (c.size() < 3) throw Error(ErrorKind::SpacingCollapse, "curve has fewer than 3 nodes");
    Evaluator ev(c, g);
    const std::size_t N = c.size();
    ClosedGeodesicNumeric out;
    std::vector<double> p(N), trial(N), rhs(N);
    int it = 0, full_steps = 0;
    for (;; ++it) {
        System S = assemble(ev, c, c.u);
        if (sup_abs(S.g) < opt.grad_tol) break;
        if (it >= opt.max_iters)
            throw Error(ErrorKind::NoConvergence, "gradient " + std::to_string(sup_abs(S.g)) + " after " +
                                                       std::to_string(it) + " iterations");
        for (std::size_t i = 0; i < N; ++i) rhs[i] = -S.g[i];
        bool newton = solve_cyclic(S.diag, S.off, rhs, p);
        double slope = 0.0;
        if (newton)
            for (std::size_t i = 0; i < N; ++i) slope += S.g[i] * p[i];
        if (!newton || !(slope < 0.0)) {
            newton = false;
            slope = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                p[i] = S.diag[i] > 0.0 ? -S.g[i] / S.diag[i] : -S.g[i] * c.spacing;
                slope += S.g[i] * p[i];
            }
        }
        // near convergence the energy change is below rounding; take the full step
        if (newton && sup_abs(p) < 1e-7) {
            if (++full_steps > 50) {
                if (sup_abs(S.g) < 1e3 * opt.grad_tol) break;
                throw Error(ErrorKind::NoConvergence, "Newton polish stalled at gradient " + std::to_string(sup_abs(S.g)));
            }
            for (std::size_t i = 0; i < N; ++i) c.u[i] += p[i];
            continue;
        }
        double t = 1.0;
        bool moved = false;
        while (t > 1e-14) {
            for (std::size_t i = 0; i < N; ++i) trial[i] = c.u[i] + t * p[i];
            double L = energy(ev, c, trial);
            if (L <= S.L + 1e-4 * t * slope) {
                c.u = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) {
            if (sup_abs(S.g) < 1e3 * opt.grad_tol) break;
            throw Error(ErrorKind::NoConvergence, "line search stalled at gradient " + std::to_string(sup_abs(S.g)));
        }
        if (sup_abs(c.u) > 0.5 * injectivity_radius())
            throw Error(ErrorKind::SpacingCollapse, "curve left the tubular chart of its axis");
    }
    out.iterations = it;
    out.length = energy(ev, c, c.u);
    // coarse copy on every other node
    if (N >= 6) {
        DiscreteClosedCurve h = c;
        h.s.clear();
        h.u.clear();
        for (std::size_t i = 0; i < N; i += 2) {
            h.s.push_back(c.s[i]);
            h.u.push_back(c.u[i]);
        }
        Evaluator eh(h, g);
        out.quad_error = std::abs(out.length - energy(eh, h, h.u)) / 3.0;
    }
    out.residual = geodesic_residual(c, g);
    if (out.residual > opt.residual_tol)
        throw Error(ErrorKind::NoConvergence, "residual " + std::to_string(out.residual) + " above tolerance");
    out.tangents = unit_tangents(c, g);
    out.curve = std::move(c);
    return out;
}

ClosedGeodesicNumeric relax_class(const BaseSpectrum& spec, int cls, const ConformalMetric& g,
                                  const SolverOptions& opt) {
    const ConjugacyClass& c = spec.classes.at(cls);
    const ConjugacyClass& root = spec.classes.at(c.root);
    auto curve = initial_curve(root, g, opt.spacing);
    curve.class_id = c.root;
    auto r = relax(std::move(curve), g, opt);
    r.power = c.power;
    r.length *= c.power;
    return r;
}

SasakiGap sasaki_surrogate(Vec3 X, Vec3 V, Vec3 Y, Vec3 W) {
    double d = distance(X, Y);
    Vec3 Wt = transport(Y, X, W);
    Vec3 a = (1.0 / tnorm(V)) * V, b = (1.0 / tnorm(Wt)) * Wt;
    double chord = tnorm(a - b);
    double theta = 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    return {std::sqrt(d * d + theta * theta), d, theta};
}

ExpansionAudit expansion_audit(std::size_t pairs, double tmax, unsigned seed) {
    ExpansionAudit a;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double R = std::tanh(0.5 * octagon_circumradius());
    for (std::size_t k = 0; k < pairs; ++k) {
        double r = R * std::sqrt(U(rng)), phi = 2.0 * M_PI * U(rng);
        Vec3 X = from_disk(std::polar(r, phi));
        Vec3 E1 = project_tangent(X, Vec3{0, 1, 0});
        E1 = (1.0 / tnorm(E1)) * E1;
        Vec3 E2 = mcross(X, E1);
        E2 = (1.0 / tnorm(E2)) * E2;
        double th = 2.0 * M_PI * U(rng);
        Vec3 V = std::cos(th) * E1 + std::sin(th) * E2;
        // nearby vector: base offset eta in a random direction, angle offset beta
        double eta = std::pow(10.0, -4.0 + 2.0 * U(rng)), dir = 2.0 * M_PI * U(rng);
        double beta = (2.0 * U(rng) - 1.0) * std::pow(10.0, -4.0 + 2.0 * U(rng));
        Vec3 Y = exp_map(X, eta * (std::cos(dir) * E1 + std::sin(dir) * E2));
        Vec3 Vr = std::cos(beta) * V + std::sin(beta) * mcross(X, V);
        Vec3 W = transport(X, Y, Vr);
        W = (1.0 / tnorm(W)) * W;
        double s0 = sasaki_surrogate(X, V, Y, W).value;
        ++a.pairs;
        for (int j = -12; j <= 12; ++j) {
            double t = tmax * j / 12.0;
            Vec3 Xt = std::cosh(t) * X + std::sinh(t) * V, Vt = std::sinh(t) * X + std::cosh(t) * V;
            Vec3 Yt = std::cosh(t) * Y + std::sinh(t) * W, Wt = std::sinh(t) * Y + std::cosh(t) * W;
            double st = sasaki_surrogate(Xt, Vt, Yt, Wt).value;
            double bound = a.kappa0 * std::exp(a.kappa * std::abs(t)) * s0;
            a.worst_ratio = std::max(a.worst_ratio, st / bound);
            ++a.checks;
            if (st > bound * a.slack) ++a.violations;
        }
    }
    return a;
}

}  // namespace lsep
