#include "lsep/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

#include "lsep/errors.hpp"
#include "lsep/kernels.hpp"
#include "lsep/surface_group.hpp"

namespace lsep {

namespace {

constexpr std::uint32_t kChunk = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap(double x, double L) {
    double r = std::fmod(x, L);
    if (r < 0) r += L;
    if (r >= L) r -= L;
    return r;
}

double cyclic_gap(double a, double b, double L) {
    double d = std::abs(wrap(a - b, L));
    return std::min(d, L - d);
}

bool same(const Mat3& a, const Mat3& b) { return a.a == b.a; }

// Deck translates whose tiles can hold points within `reach` of the octagon.
const std::vector<Translate>& translates_for(double reach) {
    static std::mutex mu;
    static std::map<double, std::vector<Translate>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(reach);
    if (it != cache.end()) return it->second;
    auto v = bolza_surface().ball(2.0 * octagon_circumradius() + reach + 1e-6);
    return cache.emplace(reach, std::move(v)).first->second;
}

// One node pair (i on a, j on b) closer than the scan radius.  xa, xb index the
// tracks' xforms; K = xa^{-1} xb carries b's lift chart into a's.
struct Hit {
    std::uint32_t i, j, xa, xb;
    double q;
};

std::vector<Hit> scan(const Track& a, const Track& b, double dthr) {
    std::vector<Hit> hits;
    const double qthr = q_from_distance(dthr);
    const double qk = qthr * (1.0 + 1e-9) + 1e-12;
    std::vector<std::uint32_t> idx;
    for (const auto& A : a.chunks()) {
        if (!A.own) continue;
        for (const auto& B : b.chunks()) {
            if (distance(A.center, B.center) > A.radius + B.radius + dthr) continue;
            kernels::Points pts{b.x0() + B.off, b.x1() + B.off, b.x2() + B.off, B.count};
            for (std::uint32_t p = A.off; p < A.off + A.count; ++p) {
                Vec3 X{a.x0()[p], a.x1()[p], a.x2()[p]};
                idx.clear();
                kernels::below(X, pts, qk, idx);
                for (auto k : idx) {
                    std::uint32_t r = B.off + k;
                    double q = half_chord_sq(X, Vec3{b.x0()[r], b.x1()[r], b.x2()[r]});
                    if (q < qthr) hits.push_back({a.node_of(p), b.node_of(r), A.xform, B.xform, q});
                }
            }
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) {
        if (x.i != y.i) return x.i < y.i;
        if (x.j != y.j) return x.j < y.j;
        return x.q < y.q;
    });
    hits.erase(std::unique(hits.begin(), hits.end(),
                           [](const Hit& x, const Hit& y) { return x.i == y.i && x.j == y.j; }),
               hits.end());
    return hits;
}

Mat3 relative(const Track& a, const Track& b, const Hit& h) {
    return lorentz_inverse(a.xforms()[h.xa]) * b.xforms()[h.xb];
}

double lookup(const std::vector<Hit>& hits, std::uint32_t i, std::uint32_t j) {
    auto it = std::lower_bound(hits.begin(), hits.end(), std::make_pair(i, j), [](const Hit& h, const auto& key) {
        return h.i != key.first ? h.i < key.first : h.j < key.second;
    });
    if (it != hits.end() && it->i == i && it->j == j) return it->q;
    return kInf;
}

// Strict local minimum of the node field over the 8-neighbourhood (ties broken by index).
bool local_min(const std::vector<Hit>& hits, const Hit& h, std::size_t Na, std::size_t Nb) {
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            if (!di && !dj) continue;
            auto i = static_cast<std::uint32_t>((h.i + Na + di) % Na);
            auto j = static_cast<std::uint32_t>((h.j + Nb + dj) % Nb);
            double q = lookup(hits, i, j);
            if (q < h.q || (q == h.q && std::make_pair(i, j) < std::make_pair(h.i, h.j))) return false;
        }
    return true;
}

// Quadratic model of q on a 3x3 stencil, iterated with shrinking steps.
std::pair<double, double> refine(const Track& a, const Track& b, const Mat3& K, double s, double t, double h) {
    auto f = [&](double x, double y) { return half_chord_sq(a.point_at(x), K * b.point_at(y)); };
    for (int it = 0; it < 8 && h > 1e-9; ++it) {
        double v[3][3];
        for (int k = -1; k <= 1; ++k)
            for (int l = -1; l <= 1; ++l) v[k + 1][l + 1] = f(s + k * h, t + l * h);
        double gx = (v[2][1] - v[0][1]) / (2 * h), gy = (v[1][2] - v[1][0]) / (2 * h);
        double hxx = (v[2][1] - 2 * v[1][1] + v[0][1]) / (h * h);
        double hyy = (v[1][2] - 2 * v[1][1] + v[1][0]) / (h * h);
        double hxy = (v[2][2] - v[2][0] - v[0][2] + v[0][0]) / (4 * h * h);
        double det = hxx * hyy - hxy * hxy;
        if (!(det > 0.0 && hxx > 0.0)) break;
        double dx = -(hyy * gx - hxy * gy) / det, dy = -(hxx * gy - hxy * gx) / det;
        dx = std::clamp(dx, -1.5 * h, 1.5 * h);
        dy = std::clamp(dy, -1.5 * h, 1.5 * h);
        if (f(s + dx, t + dy) < v[1][1]) {
            s += dx;
            t += dy;
        }
        double step = std::max(std::abs(dx), std::abs(dy));
        h = std::max(std::min(h / 8.0, 4.0 * step), 1e-10);
    }
    return {s, t};
}

double oriented_gap(Vec3 x, Vec3 V, Vec3 y, Vec3 W) {
    return std::min(sasaki_gap(x, V, y, W).value, sasaki_gap(x, V, y, -W).value);
}

Mat3 twist_power(const Track& g, long m) {
    Mat3 T;
    for (long k = 0; k < std::abs(m); ++k) T = (m > 0 ? g.twist() : lorentz_inverse(g.twist())) * T;
    return T;
}

// Refined minimum with parameters wrapped into [0, length) and K adjusted to match.
AlmostIntersection settle(const Track& a, const Track& b, const Mat3& K, double s, double t) {
    AlmostIntersection ai;
    ai.s = wrap(s, a.length());
    ai.t = wrap(t, b.length());
    long ms = std::lround((s - ai.s) / a.length()), mt = std::lround((t - ai.t) / b.length());
    ai.K = twist_power(a, -ms) * K * twist_power(b, mt);
    ai.x = a.point_at(ai.s);
    ai.y = ai.K * b.point_at(ai.t);
    ai.distance = distance(ai.x, ai.y);
    ai.sasaki_gap = oriented_gap(ai.x, a.tangent_at(ai.s), ai.y, ai.K * b.tangent_at(ai.t));
    return ai;
}

// band > 0 marks a self scan: pairs within `band` of the diagonal are dropped and
// only s < t is reported.
std::vector<AlmostIntersection> detect(const Track& a, const Track& b, double eps, double band) {
    const bool self = band > 0.0;
    const double sp = std::max(a.max_spacing(), b.max_spacing());
    auto hits = scan(a, b, eps + 2.1 * sp);
    if (self)
        std::erase_if(hits, [&](const Hit& h) { return cyclic_gap(a.arc(h.i), a.arc(h.j), a.length()) <= band; });
    std::vector<AlmostIntersection> out;
    const double qc = q_from_distance(eps + sp);
    for (const auto& h : hits) {
        if (self && h.i >= h.j) continue;
        if (h.q >= qc || !local_min(hits, h, a.size(), b.size())) continue;
        Mat3 K = relative(a, b, h);
        auto [s, t] = refine(a, b, K, a.arc(h.i), b.arc(h.j), sp);
        AlmostIntersection ai = settle(a, b, K, s, t);
        if (ai.distance >= eps) continue;
        if (self) {
            if (cyclic_gap(ai.s, ai.t, a.length()) <= band) continue;
            if (ai.s > ai.t) ai = settle(a, b, lorentz_inverse(ai.K), ai.t, ai.s);
        }
        out.push_back(ai);
    }
    return out;
}

// Two minima of one basin can refine onto the same point.
void dedupe(std::vector<AlmostIntersection>& v, double La, double Lb) {
    std::vector<AlmostIntersection> keep;
    for (const auto& ai : v) {
        bool dup = false;
        for (const auto& k : keep)
            if (cyclic_gap(k.s, ai.s, La) < 1e-7 && cyclic_gap(k.t, ai.t, Lb) < 1e-7) dup = true;
        if (!dup) keep.push_back(ai);
    }
    v.swap(keep);
}

// Polyline of `g` over arclength [lo, hi], mapped by K.
std::vector<Vec3> polyline(const Track& g, double lo, double hi, const Mat3& K) {
    std::vector<Vec3> out{K * g.point_at(lo)};
    const long N = static_cast<long>(g.size());
    long m = static_cast<long>(std::floor(lo / g.length()));
    long k = static_cast<long>(g.segment_of(lo)) + m * N + 1;
    for (; g.lifted_arc(k) < hi; ++k) out.push_back(K * g.lifted(k));
    out.push_back(K * g.point_at(hi));
    return out;
}

double polyline_distance(Vec3 X, const std::vector<Vec3>& P) {
    std::size_t best = 0;
    double bq = kInf;
    for (std::size_t i = 0; i < P.size(); ++i) {
        double q = half_chord_sq(X, P[i]);
        if (q < bq) {
            bq = q;
            best = i;
        }
    }
    double d = distance_from_q(bq);
    if (best > 0) d = std::min(d, distance_to_segment(X, P[best - 1], P[best]));
    if (best + 1 < P.size()) d = std::min(d, distance_to_segment(X, P[best], P[best + 1]));
    return d;
}

// J(x, y): maximal interval around s whose points stay within eps of I_y.
Arc build_arc(const Track& a, const Track& b, const AlmostIntersection& ai, double eps, double r_m) {
    auto Iy = polyline(b, ai.t - 0.5 * r_m, ai.t + 0.5 * r_m, ai.K);
    double ends[2];
    for (int side = 0; side < 2; ++side) {
        int dir = side ? 1 : -1;
        double px = ai.s;
        long k = static_cast<long>(a.segment_of(ai.s)) + (dir > 0 ? 1 : 0);
        if (dir < 0 && a.lifted_arc(k) == ai.s) --k;
        double end = ai.s + dir * r_m;
        for (;; k += dir) {
            double x = a.lifted_arc(k);
            if (std::abs(x - ai.s) >= r_m) break;
            double d = polyline_distance(a.lifted(k), Iy);
            if (d >= eps) {
                // bisect on the curve itself; a chord of the distance undershoots where it is convex
                double in = px, out = x;
                for (int it = 0; it < 60 && std::abs(out - in) > 1e-13; ++it) {
                    double mid = 0.5 * (in + out);
                    (polyline_distance(a.point_at(mid), Iy) < eps ? in : out) = mid;
                }
                end = out;
                break;
            }
            px = x;
        }
        ends[side] = end;
    }
    return {ends[0], ends[1]};
}

SegmentCover cover_from(const Track& a, const Track& b, double eps, double r_m,
                        const std::vector<AlmostIntersection>& ai) {
    SegmentCover c;
    for (const auto& x : ai) {
        Arc J = build_arc(a, b, x, eps, r_m);
        c.max_arc = std::max(c.max_arc, J.length());
        c.arcs.push_back(J);
    }
    c.count = c.arcs.size();
    c.pairs = ai.size();
    return c;
}

AlmostIntersection swapped(const Track& a, const AlmostIntersection& ai) {
    AlmostIntersection r = ai;
    std::swap(r.s, r.t);
    r.K = lorentz_inverse(ai.K);
    r.x = a.point_at(r.s);
    r.y = r.K * a.point_at(r.t);
    return r;
}

double count_bound_of(const ProximityConstants& k) {
    return k.T > 0.0 && k.r_m > 0.0 ? 4.0 * (k.T / k.r_m) * (k.T / k.r_m) : 0.0;
}

bool in_arcs(const std::vector<Arc>& arcs, double s, double L) {
    for (const auto& J : arcs)
        for (int m = -1; m <= 1; ++m)
            if (s + m * L >= J.lo && s + m * L <= J.hi) return true;
    return false;
}

}  // namespace

Track::Track(const ClosedGeodesicNumeric& g, int id, double reach) : id_(id), reach_(reach) {
    const auto& c = g.curve;
    const std::size_t N = c.size();
    if (N < 3) throw Error(ErrorKind::Validation, "track needs at least 3 nodes");
    twist_ = lorentz(c.twist);
    twist_inv_ = lorentz_inverse(twist_);
    P_.resize(N);
    for (std::size_t i = 0; i < N; ++i) P_[i] = c.node(i);
    arc_.assign(N + 1, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        double d = distance(P_[i], lifted(static_cast<long>(i) + 1));
        arc_[i + 1] = arc_[i] + d;
        max_spacing_ = std::max(max_spacing_, d);
    }
    length_ = arc_[N];
    T_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        Vec3 v = project_tangent(P_[i], lifted(static_cast<long>(i) + 1) - lifted(static_cast<long>(i) - 1));
        T_[i] = (1.0 / tnorm(v)) * v;
    }

    const Surface& S = bolza_surface();
    const auto& tr = translates_for(reach);
    const double lim = octagon_circumradius() + reach;
    std::vector<Mat3> W(N);
    for (std::size_t i = 0; i < N; ++i) W[i] = S.reduce(P_[i]).second;
    for (std::size_t i0 = 0; i0 < N;) {
        std::size_t i1 = i0;
        while (i1 + 1 < N && same(W[i1 + 1], W[i0])) ++i1;
        const std::size_t mid = (i0 + i1) / 2;
        Vec3 Rmid = W[i0] * P_[mid];
        double rp = 0.0;
        for (std::size_t j = i0; j <= i1; ++j) rp = std::max(rp, distance(Rmid, W[i0] * P_[j]));
        for (const auto& t : tr) {
            const bool own = t.word.empty();
            if (!own && distance(kOrigin, t.L * Rmid) - rp > lim) continue;
            Mat3 X = t.L * W[i0];
            const auto xf = static_cast<std::uint32_t>(xforms_.size());
            bool used = false;
            for (std::size_t j0 = i0; j0 <= i1; j0 += kChunk) {
                std::size_t j1 = std::min(i1, j0 + kChunk - 1);
                Vec3 cen = X * P_[(j0 + j1) / 2];
                double r = 0.0;
                for (std::size_t j = j0; j <= j1; ++j) r = std::max(r, distance(cen, X * P_[j]));
                if (!own && distance(kOrigin, cen) - r > lim) continue;
                Chunk ch{static_cast<std::uint32_t>(x0_.size()), static_cast<std::uint32_t>(j1 - j0 + 1), xf, own,
                         cen, r};
                for (std::size_t j = j0; j <= j1; ++j) {
                    Vec3 Y = X * P_[j];
                    x0_.push_back(Y.x0);
                    x1_.push_back(Y.x1);
                    x2_.push_back(Y.x2);
                    node_of_.push_back(static_cast<std::uint32_t>(j));
                }
                chunks_.push_back(ch);
                used = true;
            }
            if (used) xforms_.push_back(X);
        }
        i0 = i1 + 1;
    }
}

Vec3 Track::lifted(long k) const {
    const long N = static_cast<long>(P_.size());
    long m = k >= 0 ? k / N : -((-k + N - 1) / N);
    Vec3 X = P_[static_cast<std::size_t>(k - m * N)];
    for (long t = 0; t < m; ++t) X = twist_ * X;
    for (long t = 0; t < -m; ++t) X = twist_inv_ * X;
    return X;
}

double Track::lifted_arc(long k) const {
    const long N = static_cast<long>(P_.size());
    long m = k >= 0 ? k / N : -((-k + N - 1) / N);
    return arc_[static_cast<std::size_t>(k - m * N)] + static_cast<double>(m) * length_;
}

std::size_t Track::segment_of(double x) const {
    double r = wrap(x, length_);
    auto it = std::upper_bound(arc_.begin(), arc_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - arc_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, P_.size() - 1);
}

Vec3 Track::point_at(double x) const {
    const long N = static_cast<long>(P_.size());
    long m = static_cast<long>(std::floor(x / length_));
    double r = x - static_cast<double>(m) * length_;
    long i = static_cast<long>(segment_of(r));
    Vec3 A = lifted(i + m * N), B = lifted(i + 1 + m * N);
    double L = arc_[i + 1] - arc_[i], tau = std::clamp(r - arc_[i], 0.0, L);
    if (L <= 0.0) return A;
    return normalize_point((1.0 / std::sinh(L)) * (std::sinh(L - tau) * A + std::sinh(tau) * B));
}

Vec3 Track::tangent_at(double x) const {
    const long N = static_cast<long>(P_.size());
    long m = static_cast<long>(std::floor(x / length_));
    double r = x - static_cast<double>(m) * length_;
    long i = static_cast<long>(segment_of(r));
    Vec3 A = lifted(i + m * N), B = lifted(i + 1 + m * N);
    double L = arc_[i + 1] - arc_[i], tau = std::clamp(r - arc_[i], 0.0, L);
    Vec3 X = point_at(x);
    Vec3 v = project_tangent(X, (1.0 / std::sinh(L)) * (std::cosh(tau) * B - std::cosh(L - tau) * A));
    return (1.0 / tnorm(v)) * v;
}

ProximityConstants make_constants(double kappa, double r_m, double eps0_phase, double alpha, double T) {
    ProximityConstants k;
    k.kappa = kappa;
    k.kappa0 = std::sqrt(1.0 + kappa);
    k.r_m = r_m;
    k.eps0_phase = eps0_phase;
    k.C1 = eps0_phase / 4.0;
    k.C2 = k.kappa0 * std::exp(kappa * r_m / 2.0);
    k.C3 = k.C1 > 0.0 ? 2.0 / k.C1 * (1.0 + k.C2) : std::numeric_limits<double>::infinity();
    k.alpha = alpha;
    k.T = T;
    return k;
}

SasakiBounds sasaki_gap(Vec3 X, Vec3 V, Vec3 Y, Vec3 W) {
    double d = distance(X, Y);
    if (d >= injectivity_radius()) return {kInf, kInf, kInf, d, kInf};
    auto s = sasaki_surrogate(X, V, Y, W);
    return {s.value, std::max(s.d, s.theta), s.d + s.theta, s.d, s.theta};
}

std::vector<AlmostIntersection> almost_intersections(const Track& beta, const Track& gamma, double eps,
                                                     double count_bound) {
    if (beta.id() == gamma.id()) throw Error(ErrorKind::Validation, "almost_intersections needs distinct classes");
    auto v = detect(beta, gamma, eps, 0.0);
    dedupe(v, beta.length(), gamma.length());
    if (count_bound > 0.0 && static_cast<double>(v.size()) > count_bound)
        throw Error(ErrorKind::CountBoundViolated, std::to_string(v.size()) + " almost-intersections between " +
                                                       std::to_string(beta.id()) + " and " +
                                                       std::to_string(gamma.id()));
    return v;
}

SegmentCover covering_segments(const Track& beta, const Track& gamma, double eps, const ProximityConstants& k,
                               const std::vector<AlmostIntersection>& ai) {
    if (eps > 0.5 * k.r_m) throw Error(ErrorKind::Validation, "tube radius exceeds r_m/2");
    return cover_from(beta, gamma, eps, k.r_m, ai);
}

std::vector<AlmostIntersection> self_intersections(const Track& beta, double eps, double r_m, double count_bound) {
    auto v = detect(beta, beta, eps, 0.5 * r_m);
    dedupe(v, beta.length(), beta.length());
    if (count_bound > 0.0 && static_cast<double>(v.size()) > count_bound)
        throw Error(ErrorKind::CountBoundViolated, "self almost-intersections of " + std::to_string(beta.id()));
    return v;
}

SegmentCover self_cover(const Track& beta, double eps, const ProximityConstants& k) {
    if (eps > 0.5 * k.r_m) throw Error(ErrorKind::Validation, "tube radius exceeds r_m/2");
    auto ai = self_intersections(beta, eps, k.r_m, count_bound_of(k));
    std::vector<AlmostIntersection> both;
    for (const auto& x : ai) {
        both.push_back(x);
        both.push_back(swapped(beta, x));
    }
    SegmentCover c = cover_from(beta, beta, eps, k.r_m, both);
    c.pairs = ai.size();
    return c;
}

double surface_distance(const Track& from, Vec3 X, const Track& g, double skip, double skip_at) {
    (void)from;
    const double cap = g.reach();
    auto [R0, Wr] = bolza_surface().reduce(X);
    Vec3 R = Wr * X;
    const bool skipping = skip >= 0.0;
    auto skipped = [&](std::uint32_t j) { return skipping && cyclic_gap(g.arc(j), skip_at, g.length()) <= skip; };
    std::vector<double> buf;
    // nearest node
    double best = kInf;
    for (const auto& B : g.chunks()) {
        if (distance(R, B.center) - B.radius > std::min(distance_from_q(best), cap)) continue;
        buf.resize(B.count);
        kernels::half_chord_sq(R, {g.x0() + B.off, g.x1() + B.off, g.x2() + B.off, B.count}, buf.data());
        for (std::uint32_t k = 0; k < B.count; ++k)
            if (buf[k] < best && !skipped(g.node_of(B.off + k))) best = buf[k];
    }
    if (best == kInf) return cap;
    // the closest polyline point is within half a spacing of some node
    const double dn = distance_from_q(best) + 0.5 * g.max_spacing() + 1e-9;
    if (dn - g.max_spacing() > cap) return cap;
    double out = kInf;
    for (const auto& B : g.chunks()) {
        if (distance(R, B.center) - B.radius > dn) continue;
        Mat3 Ki = lorentz_inverse(g.xforms()[B.xform]);
        Vec3 Xg = Ki * R;
        for (std::uint32_t k = 0; k < B.count; ++k) {
            std::uint32_t p = B.off + k, j = g.node_of(p);
            if (skipped(j)) continue;
            if (distance(R, Vec3{g.x0()[p], g.x1()[p], g.x2()[p]}) > dn) continue;
            long jl = static_cast<long>(j);
            Vec3 P = g.lifted(jl);
            out = std::min(out, distance_to_segment(Xg, g.lifted(jl - 1), P));
            out = std::min(out, distance_to_segment(Xg, P, g.lifted(jl + 1)));
        }
    }
    return std::min(out, cap);
}

CoverCheck cover_completeness(const Track& beta, const Track& gamma, double eps, const SegmentCover& cover,
                              std::size_t samples, unsigned seed, double r_m) {
    CoverCheck out;
    const bool self = &beta == &gamma;
    const double sp = std::max(beta.max_spacing(), gamma.max_spacing());
    auto hits = scan(beta, gamma, eps + 2.1 * sp);
    if (self)
        std::erase_if(hits, [&](const Hit& h) {
            return cyclic_gap(beta.arc(h.i), beta.arc(h.j), beta.length()) <= 0.5 * r_m;
        });
    if (hits.empty()) return out;
    // candidate parameter intervals: one segment each side of every hit node
    std::vector<Arc> cand;
    for (std::size_t k = 0; k < hits.size(); ++k) {
        if (k && hits[k].i == hits[k - 1].i) continue;
        long i = hits[k].i;
        cand.push_back({beta.lifted_arc(i - 1), beta.lifted_arc(i + 1)});
    }
    std::vector<double> cum{0.0};
    for (const auto& c : cand) cum.push_back(cum.back() + c.length());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, cum.back());
    const double L = beta.length();
    const long N = static_cast<long>(beta.size());
    for (std::size_t n = 0; n < samples; ++n) {
        double u = U(rng);
        std::size_t c = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()) - 1;
        c = std::min(c, cand.size() - 1);
        double s = wrap(cand[c].lo + (u - cum[c]), L);
        Vec3 X = beta.point_at(s);
        long i0 = static_cast<long>(beta.segment_of(s));
        double d = kInf;
        for (long i : {i0, i0 + 1}) {
            auto wrapped = static_cast<std::uint32_t>(i % N);
            auto it = std::lower_bound(hits.begin(), hits.end(), wrapped,
                                       [](const Hit& h, std::uint32_t v) { return h.i < v; });
            for (; it != hits.end() && it->i == wrapped; ++it) {
                Mat3 K = relative(beta, gamma, *it);
                if (i == N) K = beta.twist() * K;
                long j = it->j;
                if (self && cyclic_gap(s, gamma.arc(it->j), L) <= 0.5 * r_m) continue;
                Vec3 Pj = K * gamma.lifted(j);
                d = std::min(d, distance_to_segment(X, K * gamma.lifted(j - 1), Pj));
                d = std::min(d, distance_to_segment(X, Pj, K * gamma.lifted(j + 1)));
            }
        }
        ++out.samples;
        if (d < eps) {
            ++out.near;
            if (!in_arcs(cover.arcs, s, L)) ++out.escaped;
        }
    }
    return out;
}

SafePoint safe_point(const Track& beta, const std::vector<const Track*>& others, double eps,
                     const ProximityConstants& k) {
    if (beta.reach() < eps) throw Error(ErrorKind::Validation, "track reach below the clearance radius");
    const double L = beta.length();
    const double bound = count_bound_of(k);
    std::vector<Arc> arcs;
    for (const Track* o : others) {
        if (o->id() == beta.id()) continue;
        auto ai = almost_intersections(beta, *o, eps, bound);
        auto c = covering_segments(beta, *o, eps, k, ai);
        arcs.insert(arcs.end(), c.arcs.begin(), c.arcs.end());
    }
    auto sc = self_cover(beta, eps, k);
    arcs.insert(arcs.end(), sc.arcs.begin(), sc.arcs.end());

    // covered set on [0, L)
    std::vector<Arc> cov;
    for (const auto& J : arcs) {
        if (J.length() >= L) {
            cov.push_back({0.0, L});
            continue;
        }
        double lo = wrap(J.lo, L), hi = lo + J.length();
        if (hi > L) {
            cov.push_back({lo, L});
            cov.push_back({0.0, hi - L});
        } else {
            cov.push_back({lo, hi});
        }
    }
    std::sort(cov.begin(), cov.end(), [](const Arc& a, const Arc& b) { return a.lo < b.lo; });
    std::vector<Arc> merged;
    for (const auto& J : cov) {
        if (!merged.empty() && J.lo <= merged.back().hi) merged.back().hi = std::max(merged.back().hi, J.hi);
        else merged.push_back(J);
    }
    std::vector<Arc> free;
    if (merged.empty()) {
        free.push_back({0.0, L});
    } else {
        for (std::size_t i = 0; i + 1 < merged.size(); ++i)
            if (merged[i + 1].lo > merged[i].hi) free.push_back({merged[i].hi, merged[i + 1].lo});
        double gap = merged.front().lo + L - merged.back().hi;
        if (gap > 0.0) free.push_back({merged.back().hi, merged.back().hi + gap});
    }
    std::sort(free.begin(), free.end(), [](const Arc& a, const Arc& b) {
        if (a.length() != b.length()) return a.length() > b.length();
        return a.lo < b.lo;
    });
    for (const auto& F : free) {
        if (F.length() < 2.0 * eps) break;
        double s = wrap(F.lo + 0.5 * F.length(), L);
        Vec3 z = beta.point_at(s);
        double clear = surface_distance(beta, z, beta, 0.5 * k.r_m, s);
        for (const Track* o : others)
            if (o->id() != beta.id()) clear = std::min(clear, surface_distance(beta, z, *o));
        if (clear < eps) continue;
        SafePoint sp;
        sp.geodesic = beta.id();
        sp.s = s;
        sp.z = z;
        auto [zr, W] = bolza_surface().reduce(z);
        sp.z_reduced = zr;
        sp.clearance = clear;
        sp.free_length = F.length();
        sp.eps = eps;
        sp.host = {s - eps, s + eps};
        return sp;
    }
    throw Error(ErrorKind::NoSafeSegment, "no free segment of length " + std::to_string(2.0 * eps) +
                                              " with verified clearance on geodesic " + std::to_string(beta.id()));
}

PhaseReport phase_audit(const std::vector<const Track*>& tracks, const std::vector<double>& lengths, double T,
                        double kappa) {
    if (tracks.size() < 2 || tracks.size() != lengths.size())
        throw Error(ErrorKind::Validation, "phase audit needs at least two geodesics with lengths");
    PhaseReport rep;
    rep.T = T;
    struct P {
        std::size_t a, b;
        double w;
    };
    std::vector<P> pairs;
    for (std::size_t a = 0; a < tracks.size(); ++a)
        for (std::size_t b = a + 1; b < tracks.size(); ++b)
            pairs.push_back({a, b, std::exp(2.0 * kappa * std::max(lengths[a], lengths[b]))});
    std::stable_sort(pairs.begin(), pairs.end(), [](const P& x, const P& y) { return x.w < y.w; });
    rep.pairs = pairs.size();
    double E = kInf;
    rep.min_gap = kInf;
    const double rinj = injectivity_radius();
    for (const auto& pr : pairs) {
        const Track& A = *tracks[pr.a];
        const Track& B = *tracks[pr.b];
        double U = std::min(rinj, E / pr.w);
        if (!(U > 0.0)) continue;
        ++rep.pairs_scanned;
        auto hits = scan(A, B, U);
        if (hits.empty()) continue;
        struct C {
            double g;
            std::size_t h;
        };
        std::vector<C> cs;
        for (std::size_t n = 0; n < hits.size(); ++n) {
            const Hit& h = hits[n];
            Mat3 K = relative(A, B, h);
            double g = oriented_gap(A.node(h.i), A.tangent(h.i), K * B.node(h.j), K * B.tangent(h.j));
            cs.push_back({g, n});
        }
        std::sort(cs.begin(), cs.end(), [](const C& x, const C& y) { return x.g != y.g ? x.g < y.g : x.h < y.h; });
        double best = cs.front().g;
        // polish the few smallest node candidates in continuous parameters
        for (std::size_t c = 0; c < std::min<std::size_t>(3, cs.size()); ++c) {
            const Hit& h = hits[cs[c].h];
            Mat3 K = relative(A, B, h);
            auto f = [&](double s, double t) {
                return oriented_gap(A.point_at(s), A.tangent_at(s), K * B.point_at(t), K * B.tangent_at(t));
            };
            double s = A.arc(h.i), t = B.arc(h.j), v = f(s, t);
            double st = std::max(A.max_spacing(), B.max_spacing());
            while (st > 1e-9) {
                bool moved = false;
                const double mv[4][2] = {{st, 0}, {-st, 0}, {0, st}, {0, -st}};
                for (const auto& m : mv) {
                    double w = f(s + m[0], t + m[1]);
                    if (w < v) {
                        v = w;
                        s += m[0];
                        t += m[1];
                        moved = true;
                        break;
                    }
                }
                if (!moved) st *= 0.5;
            }
            best = std::min(best, v);
        }
        rep.min_gap = std::min(rep.min_gap, best);
        if (best * pr.w < E) {
            E = best * pr.w;
            rep.arg_a = tracks[pr.a]->id();
            rep.arg_b = tracks[pr.b]->id();
        }
    }
    if (!(E > 0.0) || E == kInf) throw Error(ErrorKind::Validation, "phase separation constant is not positive");
    rep.eps0_phase = E;
    return rep;
}

void divergence_audit(const Track& beta, const Track& gamma, const std::vector<AlmostIntersection>& ai,
                      const SegmentCover& cover, const ProximityConstants& k, DivergenceAudit& out) {
    const double lin = k.C1 * std::exp(-2.0 * k.kappa * k.T), off = k.C2 * std::exp(-k.alpha * k.T);
    for (std::size_t n = 0; n < ai.size(); ++n) {
        const auto& x = ai[n];
        auto Ix = polyline(beta, x.s - 0.5 * k.r_m, x.s + 0.5 * k.r_m, Mat3{});
        for (int m = -10; m <= 10; ++m) {
            double tp = 0.5 * k.r_m * m / 10.0;
            Vec3 X = x.K * gamma.point_at(x.t + tp);
            double d = polyline_distance(X, Ix);
            double bound = std::max(lin * std::abs(tp) - off, 0.0);
            ++out.checks;
            out.worst_margin = std::min(out.worst_margin, d - bound);
            if (d < bound - 1e-12) ++out.violations;
        }
    }
    const double jmax = k.C3 * std::exp(-(k.alpha - 2.0 * k.kappa) * k.T);
    for (const auto& J : cover.arcs) {
        ++out.arc_checks;
        if (J.length() > jmax) ++out.arc_violations;
    }
}

}  // namespace lsep
