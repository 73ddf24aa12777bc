#include <doctest.h>

#include <cmath>

#include "lsep/errors.hpp"
#include "lsep/io.hpp"
#include "lsep/separation_engine.hpp"

using namespace lsep;

namespace {

WindowPlan plan_of(std::vector<double> lengths, double unit) {
    WindowPlan p;
    p.lengths = std::move(lengths);
    p.classes.resize(p.lengths.size());
    p.unit = unit;
    p.required = unit;
    return p;
}

const RunResult& desk_run() {
    static const RunResult r = [] {
        SeparationParams p;
        return run(p);
    }();
    return r;
}

}  // namespace

TEST_SUITE("separation") {
    TEST_CASE("derived constants") {
        // kappa = 1, h = 1 (eps0 = 0), k = 2, eps = 0.1, scale = 1
        auto p = derive_constants(1.0, 1.0, 0.0, 0.1, 2, 1.0);
        CHECK(p.h == 1.0);
        CHECK(p.alpha == doctest::Approx(3.0 + 0.1 / 6.0).epsilon(1e-14));
        CHECK(p.nu == doctest::Approx(1.0 + 3.0 * p.alpha + 0.05).epsilon(1e-14));
        CHECK(p.nu == doctest::Approx(10.1).epsilon(1e-12));
        // the window rate written out: (k+2) h + 2 (k+1) kappa + eps; the headline: (k+2) h + (k+1) kappa + eps
        CHECK(p.nu_unscaled == doctest::Approx(4.0 + 6.0 + 0.1).epsilon(1e-12));
        CHECK(p.nu_headline == doctest::Approx(4.0 + 3.0 + 0.1).epsilon(1e-12));
        CHECK(p.kappa0 == doctest::Approx(std::sqrt(2.0)));
        CHECK(p.r_m < injectivity_radius());

        auto q = derive_constants(1.0, 1.0, 0.1, 4.5, 2, 0.132);
        CHECK(q.h == doctest::Approx(std::sqrt(1.1)).epsilon(1e-14));
        CHECK(q.alpha == doctest::Approx(0.132 * (2.0 + std::sqrt(1.1) + 0.75)).epsilon(1e-14));
        CHECK(q.nu == doctest::Approx(q.h + 3.0 * q.alpha + 2.25).epsilon(1e-14));
        CHECK(q.r_m * std::sqrt(1.1) < injectivity_radius());

        CHECK_THROWS_AS(derive_constants(1.0, 1.0, 0.1, 0.1, 1, 1.0), Error);
        CHECK_THROWS_AS(derive_constants(1.0, 1.0, 0.1, 0.0, 2, 1.0), Error);
        CHECK_THROWS_AS(derive_constants(1.0, 1.0, 0.1, 0.1, 2, 0.0), Error);
        CHECK_THROWS_AS(derive_constants(1.0, 1.0, 0.1, 0.1, 2, 1.5), Error);
    }

    TEST_CASE("schedule with two lengths") {
        auto p = plan_of({4.1, 4.4}, 1e-5);
        schedule(p);
        CHECK(p.m == 1);
        CHECK(p.delta[0] == 1e-5);
        CHECK(p.delta[1] == -1e-5);
    }

    TEST_CASE("schedule signs and magnitudes") {
        std::vector<double> L{4.0, 4.01, 4.02, 4.5, 4.51, 4.52, 4.53};
        auto p = plan_of(L, 1e-4);
        schedule(p);
        const int mu = 7;
        CHECK(p.m == 3);  // widest gap 4.02 -> 4.5
        for (int i = 1; i <= mu; ++i) {
            double expect = i <= p.m ? i * 1e-4 : -(mu - i + 1) * 1e-4;
            CHECK(p.delta[i - 1] == expect);
        }
        // predicted differences: gap + unit off the split, gap - mu unit... at the split
        for (int i = 1; i < mu; ++i) {
            double d = p.predicted[i] - p.predicted[i - 1], g = L[i] - L[i - 1];
            if (i != p.m) CHECK(d == doctest::Approx(g + 1e-4).epsilon(1e-12));
            else CHECK(d >= g - 2.0 * mu * 1e-4);
            CHECK(d >= p.required);
        }
    }

    TEST_CASE("schedule ties go to the smallest split") {
        auto p = plan_of({1.0, 2.0, 3.0}, 1e-3);
        schedule(p);
        CHECK(p.m == 1);
    }

    TEST_CASE("a crowded window shifts everything up") {
        auto p = plan_of({4.0, 4.0 + 1e-9, 4.0 + 2e-9}, 1e-6);
        schedule(p);
        CHECK(p.m == 3);
        CHECK(p.delta == std::vector<double>{1e-6, 2e-6, 3e-6});
    }

    TEST_CASE("schedule refuses a gap it cannot open") {
        auto p = plan_of({4.0, 4.0 + 1e-6}, 1e-6);
        p.required = 3e-6;
        CHECK_THROWS_AS(schedule(p), Error);
    }

    TEST_CASE("empty window") {
        auto p = plan_of({}, 1e-6);
        schedule(p);
        CHECK(p.m == 0);
        CHECK(p.delta.empty());
    }

    TEST_CASE("separation check examples") {
        CHECK(separation_check({3.0, 4.0}, 1.0, 1.0).ok);
        CHECK_FALSE(separation_check({3.0, 3.0 + std::exp(-10.0)}, 1.0, 1.0).ok);
        auto t = separation_check({5.0, 5.0, 6.0}, 1.0, 1.0);
        CHECK_FALSE(t.ok);
        CHECK(t.worst_ratio == 0.0);
        auto r = separation_check({4.0, 3.0, 6.0}, 1.0, 1.0);
        CHECK(r.pairs == 3);
        CHECK(r.l1 == 3.0);
        CHECK(r.l2 == 4.0);
        CHECK(r.measured_C == doctest::Approx(std::exp(4.0)).epsilon(1e-14));
        CHECK(separation_check({4.0, 3.0, 6.0}, 1.0, 1.0, false).pairs == 2);
        CHECK_THROWS_AS(separation_check({1.0, -1.0}, 1.0, 1.0), Error);
        CHECK_THROWS_AS(separation_check({1.0, NAN}, 1.0, 1.0), Error);
    }

    TEST_CASE("window_count = 0 is trivial") {
        SeparationParams p;
        p.window_count = 0;
        auto r = run(p);
        CHECK(r.certificate.windows.empty());
        CHECK(r.certificate.global_verdict);
        CHECK(r.metric.bumps().empty());
    }

    TEST_CASE("empty plan leaves the metric unchanged") {
        SeparationParams prm = derive_constants(1.0, 1.0, 0.1, 4.5, 2, 0.132);
        prm.T0 = 3.5;  // (3.5, 4.5] holds no class
        WorkingSet ws(enumerate_classes(bolza_group(), 6.5), prm.spacing, 1);
        ws.relax_all(ConformalMetric{});
        auto p = plan_window(ws, 1, prm);
        CHECK(p.empty());
        auto before = ws.lengths();
        auto a = apply_window(ConformalMetric{}, p, ws, prm);
        CHECK(a.metric.bumps().empty());
        auto w = verify_window(before, ws, p, a, prm);
        CHECK(w.verdict);
        CHECK(w.fixed_drift == 0.0);
    }

    TEST_CASE("desk run certifies both windows") {
        const auto& r = desk_run();
        const auto& c = r.certificate;
        CHECK_FALSE(c.aborted);
        CHECK(r.params.T0 == 3.0);
        REQUIRE(c.windows.size() == 2);
        for (const auto& w : c.windows) {
            INFO("window " << w.n);
            CHECK(w.verdict);
            CHECK(w.min_gap >= w.required_gap);
            CHECK(w.required_gap == doctest::Approx(std::exp(-r.params.nu * w.T_hi)).epsilon(1e-14));
            CHECK(w.fixed_drift <= 1e-9);
            CHECK(w.next_drift <= 1e-9);
            CHECK(w.admissible);
            CHECK(w.guard);
            CHECK(w.ck_norm < r.params.eps0);
            for (std::size_t i = 0; i < w.scheduled.size(); ++i)
                CHECK(std::abs(w.measured[i] - w.scheduled[i]) <= r.params.cal_tol * std::abs(w.scheduled[i]));
            // safe-point tube radius 2 r0 = e^{-alpha T_{n+1}}
            CHECK(2.0 * w.r0 == doctest::Approx(std::exp(-r.params.alpha * (w.T_hi + 1.0))).epsilon(1e-14));
        }
        // bumps shrink from one window to the next
        CHECK(c.windows[1].step_c0 < c.windows[0].step_c0);
        CHECK(c.spectrum_check.ok);
        CHECK(c.global_verdict);
        // iterates of window classes follow their roots
        const auto& cls = enumerate_classes(bolza_group(), r.params.T0 + 3.0).classes;
        for (std::size_t i = 0; i < cls.size(); ++i)
            if (!cls[i].primitive)
                CHECK(r.final_lengths[i] == doctest::Approx(cls[i].power * r.final_lengths[cls[i].root]).epsilon(1e-12));
    }

    TEST_CASE("replaying the metric reproduces the certificate") {
        const auto& r = desk_run();
        SeparationParams p;
        p.T0 = r.params.T0;
        auto again = run(p, &r.metric);
        CHECK(dump(to_json(again.certificate)) == dump(to_json(r.certificate)));
        CHECK(dump(to_json(again.metric)) == dump(to_json(r.metric)));
    }

    TEST_CASE("threads do not change the result") {
        const auto& r = desk_run();
        SeparationParams p;
        p.threads = 3;
        auto t = run(p);
        CHECK(dump(to_json(t.certificate)) == dump(to_json(r.certificate)));
    }

    TEST_CASE("a mismatched replay aborts with a partial certificate") {
        const auto& r = desk_run();
        std::vector<Bump> bumps;
        for (const auto& b : r.metric.bumps())
            if (b.window == 1) bumps.push_back(b);
        ConformalMetric half(bumps);
        SeparationParams p;
        p.T0 = r.params.T0;
        auto x = run(p, &half);
        CHECK(x.certificate.aborted);
        CHECK(x.certificate.abort_kind == ErrorKind::Validation);
        CHECK(x.certificate.windows.size() == 1);
        CHECK_FALSE(x.certificate.global_verdict);
    }

    TEST_CASE("an over-budget window is refused") {
        SeparationParams p;
        p.eps0 = 1e-3;  // the first window's bumps alone exceed this ball
        auto x = run(p);
        CHECK(x.certificate.aborted);
        CHECK(x.certificate.abort_kind == ErrorKind::AdmissibilityExceeded);
        CHECK_FALSE(x.certificate.global_verdict);
    }
}
