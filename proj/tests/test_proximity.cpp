#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "lsep/errors.hpp"
#include "lsep/geodesic_solver.hpp"
#include "lsep/proximity.hpp"
#include "lsep/surface_group.hpp"

using namespace lsep;

namespace {

struct Set {
    BaseSpectrum spec;
    std::vector<std::unique_ptr<Track>> own;
    std::vector<const Track*> all;
    std::vector<double> lengths;
};

const Set& tracks(double T) {
    static std::map<double, std::unique_ptr<Set>> cache;
    auto& s = cache[T];
    if (!s) {
        s = std::make_unique<Set>();
        s->spec = enumerate_classes(bolza_group(), T);
        for (int i = 0; i < static_cast<int>(s->spec.classes.size()); ++i)
            if (s->spec.classes[i].primitive) {
                s->own.push_back(
                    std::make_unique<Track>(relax_class(s->spec, i, ConformalMetric{}), i, injectivity_radius()));
                s->all.push_back(s->own.back().get());
                s->lengths.push_back(s->spec.classes[i].base_length);
            }
    }
    return *s;
}

const double kRm = 0.9 * injectivity_radius() / std::sqrt(1.1);

Track track_of(const std::string& word) {
    auto e = evaluate(bolza_group(), parse_word(word));
    auto c = initial_curve(e.m, ConformalMetric{}, 0.01);
    auto g = relax(c, ConformalMetric{});
    return Track(g, 0, injectivity_radius());
}

// Local minima below eps of s -> d(beta(s), gamma), sampled at beta's nodes: the
// surface distance goes through every tile, independent of the chunked scan.
std::size_t brute_minima(const Track& b, const Track& g, double eps) {
    std::size_t N = b.size(), n = 0;
    std::vector<double> d(N);
    for (std::size_t i = 0; i < N; ++i) d[i] = surface_distance(b, b.node(i), g);
    for (std::size_t i = 0; i < N; ++i) {
        double l = d[(i + N - 1) % N], r = d[(i + 1) % N];
        if (d[i] < eps && d[i] < l && d[i] <= r) ++n;
    }
    return n;
}

}  // namespace

TEST_SUITE("proximity") {
    TEST_CASE("track basics") {
        const auto& s = tracks(6.0);
        for (const Track* t : s.all) {
            CHECK(t->length() == doctest::Approx(s.spec.classes[t->id()].base_length).epsilon(1e-9));
            CHECK(t->arc(0) == 0.0);
            CHECK(t->arc(t->size()) == doctest::Approx(t->length()).epsilon(1e-14));
            CHECK(t->max_spacing() <= 0.0101);
            // one period along the curve is the twist
            for (double x : {0.0, 0.37, 1.9}) {
                CHECK(distance(t->point_at(x + t->length()), t->twist() * t->point_at(x)) < 1e-9);
                CHECK(tnorm(t->tangent_at(x)) == doctest::Approx(1.0).epsilon(1e-9));
            }
            CHECK(distance(t->lifted(static_cast<long>(t->size())), t->twist() * t->node(0)) < 1e-10);
        }
    }

    TEST_CASE("sasaki bounds") {
        Vec3 X = from_disk({0.1, 0.2}), V = project_tangent(X, Vec3{0, 1, 0});
        V = (1.0 / tnorm(V)) * V;
        Vec3 W = project_tangent(X, Vec3{0, 0, 1});
        W = W - mdot(W, V) * V;
        W = (1.0 / tnorm(W)) * W;
        for (double d : {0.0, 0.05, 0.3}) {
            Vec3 Y = exp_map(X, d * W);
            auto b = sasaki_gap(X, V, Y, transport(X, Y, W));
            CHECK(b.lower <= b.value + 1e-15);
            CHECK(b.value <= b.upper + 1e-15);
            CHECK(std::abs(b.d - d) < 1e-12);
            CHECK(b.theta == doctest::Approx(M_PI / 2).epsilon(1e-9));
        }
        auto far = sasaki_gap(X, V, from_disk({-0.8, 0.0}), V);
        CHECK(std::isinf(far.value));
    }

    TEST_CASE("almost-intersections match a brute-force distance profile") {
        const auto& s = tracks(5.0);
        const double eps = 0.05;
        std::size_t compared = 0;
        for (std::size_t a = 0; a < s.all.size(); a += 5)
            for (std::size_t b = 0; b < s.all.size(); b += 3) {
                if (a == b) continue;
                auto ai = almost_intersections(*s.all[a], *s.all[b], eps);
                std::vector<double> ss;
                for (const auto& x : ai) ss.push_back(x.s);
                std::sort(ss.begin(), ss.end());
                ss.erase(std::unique(ss.begin(), ss.end(), [](double u, double v) { return v - u < 1e-6; }), ss.end());
                CHECK(ss.size() == brute_minima(*s.all[a], *s.all[b], eps));
                for (const auto& x : ai) {
                    CHECK(x.distance < eps);
                    CHECK(std::abs(x.distance - surface_distance(*s.all[a], s.all[a]->point_at(x.s), *s.all[b])) <
                          1e-9);
                }
                ++compared;
            }
        CHECK(compared > 20);
    }

    TEST_CASE("almost-intersections are symmetric") {
        const auto& s = tracks(5.0);
        for (std::size_t a = 0; a < 6; ++a)
            for (std::size_t b = a + 1; b < s.all.size(); b += 4) {
                auto ab = almost_intersections(*s.all[a], *s.all[b], 0.05);
                auto ba = almost_intersections(*s.all[b], *s.all[a], 0.05);
                CHECK(ab.size() == ba.size());
                for (const auto& x : ab) {
                    // the partner appears with the roles swapped
                    bool found = std::any_of(ba.begin(), ba.end(), [&](const AlmostIntersection& y) {
                        auto cyc = [](double u, double v, double L) {
                            double d = std::fmod(std::abs(u - v), L);
                            return std::min(d, L - d);
                        };
                        return cyc(y.s, x.t, s.all[b]->length()) < 1e-6 && cyc(y.t, x.s, s.all[a]->length()) < 1e-6;
                    });
                    CHECK(found);
                }
            }
    }

    TEST_CASE("cover count bound and completeness") {
        const auto& s = tracks(6.0);
        const double eps = std::exp(-0.5 * 6.0), bound = 4.0 * (6.0 / kRm) * (6.0 / kRm);
        auto K = make_constants(1.0, kRm, 1.0, 0.5, 6.0);
        for (std::size_t a = 0; a < s.all.size(); a += 7)
            for (std::size_t b = 0; b < s.all.size(); b += 5) {
                if (a == b) continue;
                auto ai = almost_intersections(*s.all[a], *s.all[b], eps, bound);
                auto cv = covering_segments(*s.all[a], *s.all[b], eps, K, ai);
                CHECK(cv.count == ai.size());
                CHECK(cv.max_arc <= 2.0 * kRm + 1e-12);
                for (std::size_t k = 0; k < ai.size(); ++k) {
                    CHECK(cv.arcs[k].lo <= ai[k].s);
                    CHECK(ai[k].s <= cv.arcs[k].hi);
                }
                auto cc = cover_completeness(*s.all[a], *s.all[b], eps, cv, 3000, 17, kRm);
                CHECK(cc.escaped == 0);
            }
    }

    TEST_CASE("count bound violations throw") {
        const auto& s = tracks(5.0);
        CHECK_THROWS_AS(almost_intersections(*s.all[0], *s.all[1], 0.05, 1e-9), Error);
        CHECK_THROWS_AS(almost_intersections(*s.all[0], *s.all[0], 0.05), Error);
        auto K = make_constants(1.0, kRm, 1.0, 0.5, 5.0);
        CHECK_THROWS_AS(covering_segments(*s.all[0], *s.all[1], kRm, K, {}), Error);
    }

    TEST_CASE("figure-eight has one self crossing, simple curves none") {
        auto fig = track_of("ABC");
        CHECK(fig.length() == doctest::Approx(6.67201).epsilon(1e-5));
        auto si = self_intersections(fig, 1e-3, kRm);
        REQUIRE(si.size() == 1);
        CHECK(si[0].distance < 1e-6);
        CHECK(si[0].s < si[0].t);
        const auto& s = tracks(6.0);
        auto K = make_constants(1.0, kRm, 1.0, 0.5, 6.0);
        for (const Track* t : s.all) {
            CHECK(self_intersections(*t, 0.1, kRm).empty());
            auto sc = self_cover(*t, 0.1, K);
            CHECK(sc.count == 0);
            CHECK(sc.arcs.empty());
        }
    }

    TEST_CASE("divergence bound with fitted constants") {
        const auto& s = tracks(6.0);
        auto ph = phase_audit(s.all, s.lengths, 6.0, 1.0);
        REQUIRE(ph.eps0_phase > 0.0);
        auto K = make_constants(1.0, kRm, ph.eps0_phase, 0.5, 6.0);
        DivergenceAudit da;
        for (std::size_t a = 0; a < s.all.size(); a += 3)
            for (std::size_t b = 0; b < s.all.size(); b += 4) {
                if (a == b) continue;
                auto ai = almost_intersections(*s.all[a], *s.all[b], std::exp(-0.5 * 6.0));
                auto cv = covering_segments(*s.all[a], *s.all[b], std::exp(-0.5 * 6.0), K, ai);
                divergence_audit(*s.all[a], *s.all[b], ai, cv, K, da);
            }
        CHECK(da.checks > 1000);
        CHECK(da.violations == 0);
        CHECK(da.arc_violations == 0);
    }

    TEST_CASE("phase audit against brute force on the systoles") {
        const auto& s = tracks(5.0);
        std::vector<const Track*> tp;
        std::vector<double> L;
        for (std::size_t i = 0; i < s.all.size(); ++i)
            if (s.lengths[i] < 3.1) {
                tp.push_back(s.all[i]);
                L.push_back(s.lengths[i]);
            }
        REQUIRE(tp.size() == 12);
        auto ph = phase_audit(tp, L, 5.0, 1.0);
        CHECK(ph.eps0_phase > 0.0);
        CHECK(ph.pairs == 66);
        // node-pair Sasaki gaps over every nearby tile
        auto ball = bolza_surface().ball(2.0 * octagon_circumradius() + 1.5);
        double best = 1e300;
        for (std::size_t a = 0; a < tp.size(); ++a)
            for (std::size_t b = a + 1; b < tp.size(); ++b) {
                const Track &A = *tp[a], &B = *tp[b];
                for (std::size_t i = 0; i < A.size(); ++i) {
                    Vec3 X = A.node(i), V = A.tangent(i);
                    for (const auto& t : ball)
                        for (std::size_t j = 0; j < B.size(); ++j) {
                            Vec3 Y = t.L * B.node(j);
                            if (half_chord_sq(X, Y) > 0.02) continue;
                            Vec3 W = t.L * B.tangent(j);
                            best = std::min({best, sasaki_gap(X, V, Y, W).value, sasaki_gap(X, V, Y, -W).value});
                        }
                }
            }
        best *= std::exp(2.0 * L[0]);
        // nodes only sample the curves, so brute force can only overestimate
        CHECK(ph.eps0_phase <= best * (1.0 + 1e-9));
        CHECK(ph.eps0_phase >= 0.95 * best);
    }

    TEST_CASE("phase constant does not grow with the cutoff") {
        const auto& s = tracks(7.0);
        double prev = 1e300;
        for (double T : {5.0, 6.0, 7.0}) {
            std::vector<const Track*> tp;
            std::vector<double> L;
            for (std::size_t i = 0; i < s.all.size(); ++i)
                if (s.lengths[i] <= T) {
                    tp.push_back(s.all[i]);
                    L.push_back(s.lengths[i]);
                }
            auto ph = phase_audit(tp, L, T, 1.0);
            CHECK(ph.eps0_phase <= prev);
            prev = ph.eps0_phase;
        }
    }

    TEST_CASE("safe points are verified independently") {
        const auto& s = tracks(6.0);
        auto K = make_constants(1.0, kRm, 0.0, 0.5, 6.0);
        for (std::size_t i = 0; i < s.all.size(); i += 6) {
            const Track& b = *s.all[i];
            double eps = s.lengths[i] < 4.0 ? 0.08 : 0.06;
            auto z = safe_point(b, s.all, eps, K);
            CHECK(z.geodesic == b.id());
            CHECK(z.clearance >= eps);
            CHECK(bolza_surface().in_octagon(z.z_reduced, 1e-9));
            for (const Track* o : s.all)
                if (o != &b) CHECK(surface_distance(b, z.z, *o) >= eps);
            // own curve: only the host segment comes close
            CHECK(surface_distance(b, z.z, b, 0.5 * kRm, z.s) >= eps);
        }
        CHECK_THROWS_AS(safe_point(*s.all[0], s.all, 0.5, K), Error);
    }

    TEST_CASE("constants") {
        auto K = make_constants(1.0, 0.8, 0.4, 0.5, 6.0);
        CHECK(K.kappa0 == doctest::Approx(std::sqrt(2.0)));
        CHECK(K.C1 == doctest::Approx(0.1));
        CHECK(K.C2 == doctest::Approx(std::sqrt(2.0) * std::exp(0.4)));
        CHECK(K.C3 == doctest::Approx(20.0 * (1.0 + K.C2)));
        CHECK(std::isinf(make_constants(1.0, 0.8, 0.0, 0.5, 6.0).C3));
    }
}
