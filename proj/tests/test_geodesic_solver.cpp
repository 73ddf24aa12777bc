#include <doctest.h>

#include <cmath>
#include <memory>

#include "lsep/geodesic_solver.hpp"
#include "lsep/proximity.hpp"
#include "lsep/surface_group.hpp"

using namespace lsep;

namespace {

const BaseSpectrum& spectrum6() {
    static const BaseSpectrum s = enumerate_classes(bolza_group(), 6.0);
    return s;
}

// Safe point on class 0 against every primitive class up to 6, clearance 2 r0.
const SafePoint& systole_safe_point(double clearance) {
    static SafePoint sp;
    static double cached = -1.0;
    if (cached != clearance) {
        const auto& s = spectrum6();
        std::vector<std::unique_ptr<Track>> own;
        std::vector<const Track*> all;
        for (int i = 0; i < static_cast<int>(s.classes.size()); ++i)
            if (s.classes[i].primitive) {
                own.push_back(std::make_unique<Track>(relax_class(s, i, ConformalMetric{}), i, injectivity_radius()));
                all.push_back(own.back().get());
            }
        double r_m = 0.9 * injectivity_radius() / std::sqrt(1.1);
        sp = safe_point(*all[0], all, clearance, make_constants(1.0, r_m, 0.0, 0.5, 6.0));
        cached = clearance;
    }
    return sp;
}

}  // namespace

TEST_SUITE("geodesic_solver") {
    TEST_CASE("zero perturbation reproduces the trace formula") {
        const auto& s = spectrum6();
        ConformalMetric g;
        for (int i = 0; i < static_cast<int>(s.classes.size()); ++i) {
            auto r = relax_class(s, i, g);
            CHECK(r.length == doctest::Approx(s.classes[i].base_length).epsilon(1e-10));
            CHECK(r.residual < 1e-7);
        }
    }

    TEST_CASE("initial curve sits on the axis") {
        const auto& c = spectrum6().classes[0];
        auto k = initial_curve(c, ConformalMetric{}, 0.01);
        CHECK(k.period == doctest::Approx(c.base_length).epsilon(1e-12));
        CHECK(k.spacing <= 0.01 + 1e-12);
        for (double u : k.u) CHECK(u == 0.0);
        CHECK(curve_length(k, ConformalMetric{}) == doctest::Approx(c.base_length).epsilon(1e-12));
        // node N is twist(node 0)
        Vec3 P = lorentz(k.twist) * k.node(0);
        CHECK(distance(P, k.frame.point(k.s_next(k.size() - 1), k.u_next(k.size() - 1))) < 1e-10);
    }

    TEST_CASE("iterates are power times the root") {
        auto s = enumerate_classes(bolza_group(), 6.2);
        ConformalMetric g({Bump{from_disk({0.3, 0.1}), 0.2, 1e-3, 1, 1, -1, ""}});
        for (int i = 0; i < static_cast<int>(s.classes.size()); ++i) {
            const auto& c = s.classes[i];
            if (c.primitive) continue;
            auto r = relax_class(s, i, g);
            auto p = relax_class(s, c.root, g);
            CHECK(r.power == c.power);
            CHECK(r.length == doctest::Approx(c.power * p.length).epsilon(1e-12));
        }
    }

    TEST_CASE("bump at a safe point shifts one length by delta") {
        const auto& s = spectrum6();
        const double r0 = 0.04, delta = 1e-4;
        const auto& z = systole_safe_point(2.0 * r0);
        CHECK(z.clearance >= 2.0 * r0);
        Bump b{z.z_reduced, r0, delta, 1, 1, 0, s.classes[0].word};
        ConformalMetric g({b});
        auto r = relax_class(s, 0, g);
        CHECK(std::abs(r.length - s.classes[0].base_length - delta) < 1e-6);
        for (int i = 1; i < static_cast<int>(s.classes.size()); ++i) {
            auto o = relax_class(s, i, g);
            CHECK(std::abs(o.length - s.classes[i].base_length) <= 1e-10);
        }
    }

    TEST_CASE("increment is linear in small delta") {
        const auto& s = spectrum6();
        const auto& z = systole_safe_point(0.08);
        double prev = 0.0;
        for (double delta : {1e-6, 1e-7, 1e-8}) {
            ConformalMetric g({Bump{z.z_reduced, 0.04, delta, 1, 1, 0, ""}});
            double inc = relax_class(s, 0, g).length - s.classes[0].base_length;
            CHECK(inc == doctest::Approx(delta).epsilon(2e-3));
            if (prev) CHECK(prev / inc == doctest::Approx(10.0).epsilon(2e-3));
            prev = inc;
        }
    }

    TEST_CASE("relaxed curves are critical: perturbations only lengthen") {
        const auto& s = spectrum6();
        ConformalMetric g({Bump{from_disk({0.2, 0.2}), 0.3, 5e-3, 1, 1, -1, ""}});
        auto r = relax_class(s, 5, g);
        double L = curve_length(r.curve, g);
        CHECK(L == doctest::Approx(r.length / r.power).epsilon(1e-12));
        for (double eps : {1e-4, -1e-4})
            for (std::size_t k : {std::size_t(0), r.curve.size() / 3}) {
                auto c = r.curve;
                c.u[k] += eps;
                CHECK(curve_length(c, g) >= L - 1e-13);
            }
        CHECK(geodesic_residual(r.curve, g) < 1e-7);
    }

    TEST_CASE("bumps get their own grid, so the coarse spacing does not matter") {
        const auto& s = spectrum6();
        const double delta = 5e-3;
        ConformalMetric g({Bump{from_disk({0.2, 0.2}), 0.3, delta, 1, 1, -1, ""}});
        std::vector<double> L;
        for (double h : {0.08, 0.04, 0.02}) {
            SolverOptions o;
            o.spacing = h;
            auto r = relax_class(s, 1, g, o);
            L.push_back(r.length);
            CHECK(r.quad_error < 1e-4 * delta);
            CHECK(r.quad_error > 0.0);
        }
        CHECK(std::abs(L[0] - L[1]) < 1e-12);
        CHECK(std::abs(L[1] - L[2]) < 1e-12);
        // centred on the axis, so the increment is close to delta
        CHECK(L[2] - s.classes[1].base_length == doctest::Approx(delta).epsilon(1e-4));
    }

    TEST_CASE("unit tangents") {
        const auto& s = spectrum6();
        auto r = relax_class(s, 2, ConformalMetric{});
        auto T = unit_tangents(r.curve, ConformalMetric{});
        REQUIRE(T.size() == r.curve.size());
        for (std::size_t i = 0; i < T.size(); ++i) {
            CHECK(tnorm(T[i]) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(mdot(T[i], r.curve.node(i))) < 1e-12);
        }
    }

    TEST_CASE("geodesic flow expansion bound") {
        auto a = expansion_audit(1000, 3.0, 7);
        CHECK(a.pairs == 1000);
        CHECK(a.checks == 25000);
        CHECK(a.violations == 0);
        CHECK(a.worst_ratio <= a.slack);
    }

    TEST_CASE("sasaki surrogate") {
        Vec3 X = from_disk({0.1, 0.2}), V = project_tangent(X, Vec3{0, 1, 0});
        V = (1.0 / tnorm(V)) * V;
        auto z = sasaki_surrogate(X, V, X, V);
        CHECK(z.value == 0.0);
        auto o = sasaki_surrogate(X, V, X, -V);
        CHECK(o.theta == doctest::Approx(M_PI).epsilon(1e-12));
        Vec3 Y = exp_map(X, 0.3 * V);
        auto m = sasaki_surrogate(X, V, Y, transport(X, Y, V));
        CHECK(m.d == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(m.theta < 1e-7);
    }
}
