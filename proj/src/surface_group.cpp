#include "lsep/surface_group.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "lsep/errors.hpp"

namespace lsep {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::NotHyperbolic: return "NotHyperbolic";
        case ErrorKind::ResourceLimit: return "ResourceLimit";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::SpacingCollapse: return "SpacingCollapse";
        case ErrorKind::CountBoundViolated: return "CountBoundViolated";
        case ErrorKind::CoverIncomplete: return "CoverIncomplete";
        case ErrorKind::NoSafeSegment: return "NoSafeSegment";
        case ErrorKind::CalibrationFailed: return "CalibrationFailed";
        case ErrorKind::AdmissibilityExceeded: return "AdmissibilityExceeded";
        case ErrorKind::Validation: return "ValidationError";
    }
    return "Error";
}

Word inverse_word(const Word& w) {
    Word r(w.rbegin(), w.rend());
    for (int& x : r) x = -x;
    return r;
}

Word free_reduce(const Word& w) {
    Word r;
    r.reserve(w.size());
    for (int x : w) {
        if (!r.empty() && r.back() == -x) r.pop_back();
        else r.push_back(x);
    }
    return r;
}

std::string word_string(const Word& w) {
    std::string s;
    s.reserve(w.size());
    for (int x : w) s.push_back(x > 0 ? char('a' + x - 1) : char('A' - x - 1));
    return s;
}

Word parse_word(const std::string& s) {
    Word w;
    for (char ch : s) {
        if (ch >= 'a' && ch <= 'd') w.push_back(ch - 'a' + 1);
        else if (ch >= 'A' && ch <= 'D') w.push_back(-(ch - 'A' + 1));
        else throw Error(ErrorKind::Validation, std::string("bad letter in word: ") + ch);
    }
    return w;
}

Word canonical_word(const Word& w0) {
    Word w = free_reduce(w0);
    std::size_t i = 0, j = w.size();
    while (j - i >= 2 && w[i] == -w[j - 1]) {
        ++i;
        --j;
    }
    w = Word(w.begin() + i, w.begin() + j);
    if (w.empty()) return w;
    std::string best;
    Word best_w;
    for (const Word& v : {w, inverse_word(w)}) {
        for (std::size_t s = 0; s < v.size(); ++s) {
            Word r(v.begin() + s, v.end());
            r.insert(r.end(), v.begin(), v.begin() + s);
            std::string str = word_string(r);
            if (best_w.empty() || str < best) {
                best = str;
                best_w = r;
            }
        }
    }
    return best_w;
}

namespace {

Mat2 su11_to_sl2r(std::complex<double> alpha, std::complex<double> beta) {
    // C U C^{-1} with C = [[i, i], [-1, 1]].
    using cd = std::complex<double>;
    const cd i(0, 1);
    cd U[2][2] = {{alpha, beta}, {std::conj(beta), std::conj(alpha)}};
    cd C[2][2] = {{i, i}, {-1.0, 1.0}};
    cd dC = C[0][0] * C[1][1] - C[0][1] * C[1][0];
    cd Ci[2][2] = {{C[1][1] / dC, -C[0][1] / dC}, {-C[1][0] / dC, C[0][0] / dC}};
    cd T[2][2], R[2][2];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) T[r][c] = C[r][0] * U[0][c] + C[r][1] * U[1][c];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) R[r][c] = T[r][0] * Ci[0][c] + T[r][1] * Ci[1][c];
    return renormalized(Mat2{R[0][0].real(), R[0][1].real(), R[1][0].real(), R[1][1].real()});
}

// g_k as words in a, b, c, d.
const Word kSideWords[4] = {{-2}, {-1, -2}, {-1, 4}, {-1, 4, 3}};

struct CellKey {
    std::int64_t operator()(double x1, double x2) const {
        auto ix = static_cast<std::int64_t>(std::floor(x1 * 0.5));
        auto iy = static_cast<std::int64_t>(std::floor(x2 * 0.5));
        return (ix << 32) ^ (iy & 0xffffffffLL);
    }
};

// Breadth-first orbit enumeration: left multiplication by side pairings, keeping
// elements with d(o, g o) <= radius.  Distinct orbit points are >= 4.39 apart in the
// spatial coordinates, so a grid of cell size 2 with a 3x3 probe dedupes exactly.
struct OrbitTree {
    std::vector<Mat2> m;
    std::vector<std::int32_t> parent;
    std::vector<std::int8_t> letter;
    std::unordered_map<std::int64_t, std::int32_t> cells;

    std::int32_t find(const Mat2& g) const {
        Vec3 p = orbit_point(g);
        auto bx = static_cast<std::int64_t>(std::floor(p.x1 * 0.5));
        auto by = static_cast<std::int64_t>(std::floor(p.x2 * 0.5));
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                std::int64_t key = ((bx + dx) << 32) ^ ((by + dy) & 0xffffffffLL);
                auto it = cells.find(key);
                if (it == cells.end()) continue;
                Vec3 q = orbit_point(m[it->second]);
                double e = std::abs(q.x1 - p.x1) + std::abs(q.x2 - p.x2);
                if (e < 1.0) return it->second;
            }
        return -1;
    }

    void insert(const Mat2& g, std::int32_t par, std::int8_t let) {
        Vec3 p = orbit_point(g);
        cells.emplace(CellKey{}(p.x1, p.x2), static_cast<std::int32_t>(m.size()));
        m.push_back(g);
        parent.push_back(par);
        letter.push_back(let);
    }

    Word word(std::int32_t i, const std::vector<Word>& side_words) const {
        Word w;
        while (i > 0) {
            const Word& s = side_words[letter[i]];
            w.insert(w.end(), s.begin(), s.end());
            i = parent[i];
        }
        return free_reduce(w);
    }
};

OrbitTree grow(const std::vector<Translate>& sides, double radius, std::size_t budget) {
    OrbitTree t;
    t.insert(Mat2{}, -1, -1);
    double x0max = std::cosh(radius) * (1.0 + 1e-12);
    std::size_t head = 0;
    while (head < t.m.size()) {
        Mat2 g = t.m[head];
        for (int k = 0; k < static_cast<int>(sides.size()); ++k) {
            Mat2 n = renormalized(sides[k].m * g);
            if (orbit_point(n).x0 > x0max) continue;
            if (t.find(n) >= 0) continue;
            if (t.m.size() >= budget)
                throw Error(ErrorKind::ResourceLimit, "orbit enumeration exceeded node budget of " + std::to_string(budget));
            t.insert(n, static_cast<std::int32_t>(head), static_cast<std::int8_t>(k));
        }
        ++head;
    }
    return t;
}

std::vector<Word> side_word_table() {
    std::vector<Word> w;
    for (int k = 0; k < 4; ++k) w.push_back(kSideWords[k]);
    for (int k = 0; k < 4; ++k) w.push_back(inverse_word(kSideWords[k]));
    return w;
}

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) {
        while (p[x] != x) x = p[x] = p[p[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) p[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<MoebiusElement> bolza_group() {
    const double s2 = std::sqrt(2.0);
    const double a = 1.0 + s2, r = std::sqrt(2.0 + 2.0 * s2);
    Mat2 g[4];
    for (int k = 0; k < 4; ++k) g[k] = su11_to_sl2r({a, 0.0}, std::polar(r, k * M_PI / 4.0));
    auto mul = [](Mat2 x, Mat2 y) { return renormalized(x * y); };
    std::vector<MoebiusElement> out(4);
    out[0] = {mul(g[0], inverse(g[1])), {1}};
    out[1] = {inverse(g[0]), {2}};
    out[2] = {mul(inverse(g[2]), g[3]), {3}};
    out[3] = {mul(mul(g[0], inverse(g[1])), g[2]), {4}};
    return out;
}

MoebiusElement multiply(const MoebiusElement& x, const MoebiusElement& y) {
    Word w = x.word;
    w.insert(w.end(), y.word.begin(), y.word.end());
    return {renormalized(x.m * y.m), free_reduce(w)};
}

MoebiusElement evaluate(const std::vector<MoebiusElement>& gens, const Word& w) {
    Mat2 m;
    for (int x : w) {
        const Mat2& g = gens.at(std::abs(x) - 1).m;
        m = renormalized(m * (x > 0 ? g : inverse(g)));
    }
    return {m, w};
}

double class_length(const Mat2& m) {
    double t = std::abs(trace(m));
    if (!(t > 2.0 + 1e-12)) throw Error(ErrorKind::NotHyperbolic, "|trace| = " + std::to_string(t));
    return 2.0 * std::acosh(0.5 * t);
}

std::pair<std::complex<double>, std::complex<double>> axis_of(const Mat2& m0) {
    class_length(m0);
    Mat2 m = trace(m0) < 0 ? Mat2{-m0.a, -m0.b, -m0.c, -m0.d} : m0;
    double tr = trace(m), disc = std::sqrt(tr * tr - 4.0);
    // fixed points of z -> (az+b)/(cz+d) in the upper half plane; the attracting one
    // has |c z + d| < 1.
    std::complex<double> inf(1e300, 0.0);
    std::complex<double> p, q;
    if (std::abs(m.c) < 1e-300) {
        // diagonal-type: fixes infinity and b/(d-a)
        std::complex<double> fin = m.b / (m.d - m.a);
        // attracting point at infinity iff a > d
        if (m.a > m.d) { p = fin; q = inf; }
        else { p = inf; q = fin; }
    } else {
        double z1 = ((m.a - m.d) + disc) / (2.0 * m.c);
        double z2 = ((m.a - m.d) - disc) / (2.0 * m.c);
        if (std::abs(m.c * z1 + m.d) < 1.0) { q = z1; p = z2; }
        else { q = z2; p = z1; }
    }
    auto to_d = [&](std::complex<double> z) {
        if (std::abs(z.real()) >= 1e299) return std::complex<double>(1.0, 0.0);
        return uhp_to_disk(z);
    };
    return {to_d(p), to_d(q)};
}

Vec3 axis_normal(const Mat2& m0) {
    Mat2 m = trace(m0) < 0 ? Mat2{-m0.a, -m0.b, -m0.c, -m0.d} : m0;
    double tr = trace(m);
    double s = 0.5 * std::sqrt(tr * tr - 4.0);
    return {0.5 * (m.b - m.c) / s, 0.5 * (m.b + m.c) / s, 0.5 * (m.d - m.a) / s};
}

Vec3 orbit_point(const Mat2& m) {
    return {0.5 * (m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d), 0.5 * (m.a * m.a + m.b * m.b - m.c * m.c - m.d * m.d),
            m.a * m.c + m.b * m.d};
}

Surface::Surface() : gens_(bolza_group()) {
    auto words = side_word_table();
    for (int k = 0; k < 8; ++k) {
        MoebiusElement e = evaluate(gens_, words[k]);
        sides_.push_back({e.m, lorentz(e.m), e.word});
    }
    for (const auto& s : sides_) centers_.push_back(s.L * kOrigin);
    std::vector<int> order(8);
    std::iota(order.begin(), order.end(), 0);
    auto ang = [&](int k) { return std::arg(to_disk(centers_[k])); };
    std::sort(order.begin(), order.end(), [&](int x, int y) { return ang(x) < ang(y); });
    for (int t = 0; t < 8; ++t) {
        Vec3 A = centers_[order[t]], B = centers_[order[(t + 1) % 8]];
        Vec3 u = kOrigin - A, v = kOrigin - B;
        Vec3 c{u.x1 * v.x2 - u.x2 * v.x1, u.x2 * v.x0 - u.x0 * v.x2, u.x0 * v.x1 - u.x1 * v.x0};
        Vec3 X{-c.x0, c.x1, c.x2};
        if (X.x0 < 0) X = -X;
        verts_.push_back(normalize_point(X));
    }
    auto tree = grow(sides_, 2.0 * octagon_circumradius() + 1e-6, 1'000'000);
    for (std::size_t i = 0; i < tree.m.size(); ++i)
        nbrs_.push_back({tree.m[i], lorentz(tree.m[i]), tree.word(static_cast<std::int32_t>(i), words)});
}

std::pair<Vec3, Mat3> Surface::reduce(Vec3 X) const {
    Mat3 g;
    for (int it = 0; it < 10000; ++it) {
        double best = -mdot(X, kOrigin);
        int bk = -1;
        for (int k = 0; k < 8; ++k) {
            double v = -mdot(X, centers_[k]);
            if (v < best * (1.0 - 1e-14)) {
                best = v;
                bk = k;
            }
        }
        if (bk < 0) return {X, g};
        // sides_[k^4] is the inverse pairing; it maps centers_[k] back to o.
        const Mat3& Li = sides_[bk ^ 4].L;
        X = Li * X;
        g = Li * g;
    }
    throw Error(ErrorKind::NoConvergence, "point reduction did not terminate");
}

bool Surface::in_octagon(Vec3 X, double tol) const {
    double d0 = -mdot(X, kOrigin);
    for (const Vec3& c : centers_)
        if (-mdot(X, c) < d0 - tol * d0) return false;
    return true;
}

std::vector<Translate> Surface::ball(double radius, std::size_t budget) const {
    auto tree = grow(sides_, radius, budget);
    auto words = side_word_table();
    std::vector<Translate> out;
    out.reserve(tree.m.size());
    for (std::size_t i = 0; i < tree.m.size(); ++i)
        out.push_back({tree.m[i], lorentz(tree.m[i]), tree.word(static_cast<std::int32_t>(i), words)});
    return out;
}

const Surface& bolza_surface() {
    static const Surface s;
    return s;
}

BaseSpectrum enumerate_classes(const std::vector<MoebiusElement>& generators, double cutoff_T,
                               const EnumerateOptions& opt) {
    if (!(cutoff_T > 0.0)) throw Error(ErrorKind::Validation, "cutoff_T must be positive");
    if (generators.size() != 4) throw Error(ErrorKind::Validation, "expected 4 generators");
    BaseSpectrum out;
    out.cutoff_T = cutoff_T;

    auto words = side_word_table();
    std::vector<Translate> sides;
    for (int k = 0; k < 8; ++k) {
        MoebiusElement e = evaluate(generators, words[k]);
        sides.push_back({e.m, lorentz(e.m), e.word});
    }
    const Surface& S = bolza_surface();
    const double Rc = octagon_circumradius();
    // a lift whose axis meets the octagon moves o by at most this much
    const double D = 2.0 * std::asinh(std::cosh(Rc) * std::sinh(0.5 * cutoff_T)) + 1e-9;
    OrbitTree tree = grow(sides, D, opt.node_budget);
    out.nodes = tree.m.size();

    std::vector<std::int32_t> E;
    std::vector<Vec3> normal;
    std::vector<double> len;
    std::unordered_map<std::int32_t, int> eidx;
    for (std::size_t i = 1; i < tree.m.size(); ++i) {
        const Mat2& g = tree.m[i];
        double tr = std::abs(trace(g));
        if (tr <= 2.0 + 1e-9) continue;
        double l = 2.0 * std::acosh(0.5 * tr);
        if (l > cutoff_T + 1e-9) continue;
        Vec3 n = axis_normal(g);
        double lo = 1e300, hi = -1e300;
        for (const Vec3& v : S.vertices()) {
            double x = mdot(v, n);
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (lo <= 1e-9 && hi >= -1e-9) {
            eidx.emplace(static_cast<std::int32_t>(i), static_cast<int>(E.size()));
            E.push_back(static_cast<std::int32_t>(i));
            normal.push_back(n);
            len.push_back(l);
        }
    }

    UnionFind uf(static_cast<int>(E.size()));
    auto link = [&](int e, const Mat2& h) {
        std::int32_t j = tree.find(h);
        if (j < 0) return;
        auto it = eidx.find(j);
        if (it != eidx.end()) uf.unite(e, it->second);
    };
    for (int e = 0; e < static_cast<int>(E.size()); ++e) {
        const Mat2& B = tree.m[E[e]];
        link(e, inverse(B));
        for (const auto& t : S.neighbors()) link(e, renormalized(inverse(t.m) * B * t.m));
    }

    std::vector<std::vector<int>> members;
    std::unordered_map<int, int> comp_of_root;
    for (int e = 0; e < static_cast<int>(E.size()); ++e) {
        int r = uf.find(e);
        auto [it, fresh] = comp_of_root.emplace(r, static_cast<int>(members.size()));
        if (fresh) members.emplace_back();
        members[it->second].push_back(e);
    }

    struct Draft {
        ConjugacyClass c;
        std::vector<int> mem;
    };
    std::vector<Draft> drafts;
    for (auto& mem : members) {
        int best = mem[0];
        for (int e : mem) {
            double de = std::abs(normal[e].x0), db = std::abs(normal[best].x0);
            if (de < db - 1e-12 || (std::abs(de - db) <= 1e-12 && E[e] < E[best])) best = e;
        }
        Draft d;
        const Mat2& B = tree.m[E[best]];
        d.c.rep = {B, tree.word(E[best], words)};
        d.c.word = word_string(canonical_word(d.c.rep.word));
        d.c.trace_abs = std::abs(trace(B));
        d.c.base_length = len[best];
        d.c.axis_n = normal[best];
        d.c.axis_dist = std::asinh(std::abs(normal[best].x0));
        d.mem = mem;
        drafts.push_back(std::move(d));
    }
    std::sort(drafts.begin(), drafts.end(), [](const Draft& x, const Draft& y) {
        auto kx = std::llround(x.c.base_length * 1e9), ky = std::llround(y.c.base_length * 1e9);
        if (kx != ky) return kx < ky;
        return x.c.word < y.c.word;
    });

    // An iterate p^k shares its axis with a lift of p.
    const double sys = systole();
    for (std::size_t ci = 0; ci < drafts.size(); ++ci) {
        auto& c = drafts[ci].c;
        c.root = static_cast<int>(ci);
        int kmax = static_cast<int>(std::floor(c.base_length / sys + 1e-9));
        for (int k = kmax; k >= 2 && c.primitive; --k) {
            double target = c.base_length / k;
            for (std::size_t pj = 0; pj < ci && c.primitive; ++pj) {
                if (std::abs(drafts[pj].c.base_length - target) > 1e-7) continue;
                for (int e : drafts[pj].mem) {
                    Vec3 n = normal[e];
                    double dp = std::abs(n.x0 - c.axis_n.x0) + std::abs(n.x1 - c.axis_n.x1) + std::abs(n.x2 - c.axis_n.x2);
                    double dm = std::abs(n.x0 + c.axis_n.x0) + std::abs(n.x1 + c.axis_n.x1) + std::abs(n.x2 + c.axis_n.x2);
                    if (std::min(dp, dm) < 1e-7) {
                        c.primitive = false;
                        c.power = k;
                        c.root = static_cast<int>(pj);
                        break;
                    }
                }
            }
        }
    }
    // a root found above may itself be an iterate only if lengths nest; resolve to the primitive
    for (auto& d : drafts)
        while (!drafts[d.c.root].c.primitive) {
            d.c.power *= drafts[d.c.root].c.power;
            d.c.root = drafts[d.c.root].c.root;
        }

    for (auto& d : drafts) out.classes.push_back(std::move(d.c));
    out.counting_ratio = counting_ratio(out);
    return out;
}

double counting_ratio(const BaseSpectrum& s) {
    if (s.classes.empty()) return 0.0;
    return static_cast<double>(s.classes.size()) * 2.0 * s.cutoff_T * std::exp(-s.cutoff_T);
}

}  // namespace lsep
