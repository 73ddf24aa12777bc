#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "lsep/errors.hpp"
#include "lsep/surface_group.hpp"

using namespace lsep;

namespace {

const BaseSpectrum& spectrum8() {
    static const BaseSpectrum s = enumerate_classes(bolza_group(), 8.0);
    return s;
}

Word random_word(std::mt19937_64& rng, int len) {
    std::uniform_int_distribution<int> L(1, 4), S(0, 1);
    Word w;
    while (static_cast<int>(w.size()) < len) {
        int x = L(rng) * (S(rng) ? 1 : -1);
        if (!w.empty() && w.back() == -x) continue;
        w.push_back(x);
    }
    return w;
}

// x = m + n sqrt 2 with integers m, n
bool in_z_sqrt2(double x) {
    for (int n = -20000; n <= 20000; ++n) {
        double m = x - n * std::sqrt(2.0);
        if (std::abs(m - std::round(m)) < 1e-6 * std::max(1.0, std::abs(x))) return true;
    }
    return false;
}

}  // namespace

TEST_SUITE("surface_group") {
    TEST_CASE("generators satisfy the surface relation") {
        auto g = bolza_group();
        REQUIRE(g.size() == 4);
        auto r = evaluate(g, parse_word("abABcdCD"));
        double s = r.m.a > 0 ? 1.0 : -1.0;
        CHECK(s * r.m.a == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(r.m.b) < 1e-10);
        CHECK(std::abs(r.m.c) < 1e-10);
        CHECK(s * r.m.d == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& x : g) CHECK(det(x.m) == doctest::Approx(1.0).epsilon(1e-13));
    }

    TEST_CASE("traces lie in Z[sqrt 2]") {
        std::mt19937_64 rng(11);
        auto g = bolza_group();
        for (int i = 0; i < 60; ++i) {
            auto e = evaluate(g, random_word(rng, 1 + i % 6));
            CHECK(in_z_sqrt2(trace(e.m)));
        }
    }

    TEST_CASE("lengths follow the trace formula") {
        std::mt19937_64 rng(12);
        auto g = bolza_group();
        for (int i = 0; i < 60; ++i) {
            auto e = evaluate(g, random_word(rng, 1 + i % 7));
            double t = std::abs(trace(e.m));
            REQUIRE(t > 2.0);
            CHECK(class_length(e) == doctest::Approx(2.0 * std::acosh(0.5 * t)).epsilon(1e-12));
        }
    }

    TEST_CASE("word utilities") {
        CHECK(word_string(parse_word("aBcD")) == "aBcD");
        CHECK(free_reduce(parse_word("abBc")) == parse_word("ac"));
        CHECK(inverse_word(parse_word("abc")) == parse_word("CBA"));
        auto w = parse_word("abCd");
        auto c = canonical_word(w);
        // invariant under cyclic shifts and inversion
        for (std::size_t k = 0; k < w.size(); ++k) {
            Word s(w.begin() + k, w.end());
            s.insert(s.end(), w.begin(), w.begin() + k);
            CHECK(canonical_word(s) == c);
            CHECK(canonical_word(inverse_word(s)) == c);
        }
        CHECK(canonical_word(parse_word("aAbc")) == canonical_word(parse_word("bc")));
        CHECK_THROWS_AS(parse_word("abx"), Error);
    }

    TEST_CASE("octagon geometry") {
        const auto& S = bolza_surface();
        REQUIRE(S.vertices().size() == 8);
        // cosh R = (1 + sqrt 2)^2 = 3 + 2 sqrt 2
        for (const auto& v : S.vertices()) CHECK(v.x0 == doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
        REQUIRE(S.side_pairings().size() == 8);
        // opposite sides are paired by translations through twice the inradius, cosh r = 1 + sqrt 2
        for (const auto& s : S.side_pairings()) {
            CHECK(distance(kOrigin, s.L * kOrigin) == doctest::Approx(systole()).epsilon(1e-12));
            Vec3 p = orbit_point(s.m), q = s.L * kOrigin;
            CHECK(distance(p, q) < 1e-10);
        }
        CHECK(systole() == doctest::Approx(3.0571).epsilon(1e-4));
    }

    TEST_CASE("reduction lands in the octagon by an isometry") {
        const auto& S = bolza_surface();
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int i = 0; i < 200; ++i) {
            Vec3 X = from_disk(std::polar(0.999 * std::sqrt(U(rng)), 2.0 * M_PI * U(rng)));
            auto [Y, g] = S.reduce(X);
            CHECK(S.in_octagon(Y, 1e-9));
            CHECK(distance(g * X, Y) < 1e-8);
        }
    }

    TEST_CASE("orbit counting matches the area") {
        // #{g : d(o, g o) <= R} ~ 2 pi (cosh R - 1) / area, area 4 pi for genus 2
        const auto& S = bolza_surface();
        for (double R : {8.0, 10.0}) {
            double n = static_cast<double>(S.ball(R).size());
            CHECK(n / (0.5 * (std::cosh(R) - 1.0)) == doctest::Approx(1.0).epsilon(0.1));
        }
    }

    TEST_CASE("class counts and multiplicities") {
        const auto& s = spectrum8();
        CHECK(enumerate_classes(bolza_group(), 5.0).classes.size() == 24);
        CHECK(enumerate_classes(bolza_group(), 6.0).classes.size() == 48);
        CHECK(s.classes.size() == 208);
        auto near = [&](double v) {
            return std::count_if(s.classes.begin(), s.classes.end(),
                                 [&](const auto& c) { return std::abs(c.base_length - v) < 1e-3; });
        };
        CHECK(near(3.0571) == 12);
        CHECK(near(4.8969) == 12);
        CHECK(near(5.8281) == 24);
        // the shortest class is the systole
        double lo = 1e9;
        for (const auto& c : s.classes) lo = std::min(lo, c.base_length);
        CHECK(lo == doctest::Approx(systole()).epsilon(1e-10));
        // sorted by length up to rounding, then by word
        for (std::size_t i = 1; i < s.classes.size(); ++i) {
            CHECK(s.classes[i].base_length > s.classes[i - 1].base_length - 1e-12);
            if (std::abs(s.classes[i].base_length - s.classes[i - 1].base_length) < 1e-9)
                CHECK(s.classes[i - 1].word < s.classes[i].word);
        }
    }

    TEST_CASE("classes are distinct, primitive roots resolve") {
        const auto& s = spectrum8();
        std::map<std::string, int> seen;
        for (int i = 0; i < static_cast<int>(s.classes.size()); ++i) {
            const auto& c = s.classes[i];
            CHECK(seen.emplace(c.word, i).second);
            CHECK(c.base_length <= 8.0);
            CHECK(c.base_length == doctest::Approx(class_length(c.rep)).epsilon(1e-12));
            CHECK(word_string(canonical_word(parse_word(c.word))) == c.word);
            REQUIRE(c.root >= 0);
            const auto& r = s.classes[c.root];
            CHECK(r.primitive);
            CHECK(c.base_length == doctest::Approx(c.power * r.base_length).epsilon(1e-10));
            CHECK((c.primitive == (c.power == 1)));
        }
        // the square of a systole shows up once its length fits
        int squares = 0;
        for (const auto& c : s.classes) squares += c.power == 2;
        CHECK(squares == 12);
    }

    TEST_CASE("counting ratio") {
        const auto& s = spectrum8();
        double expect = static_cast<double>(s.classes.size()) * 2.0 * 8.0 * std::exp(-8.0);
        CHECK(s.counting_ratio == doctest::Approx(expect).epsilon(1e-12));
        auto tiny = enumerate_classes(bolza_group(), 0.1);
        CHECK(tiny.classes.empty());
        CHECK(tiny.counting_ratio == 0.0);
    }

    TEST_CASE("axis data") {
        const auto& s = spectrum8();
        for (int i = 0; i < 30; ++i) {
            const auto& c = s.classes[i];
            Mat3 L = lorentz(c.rep.m);
            Vec3 n = axis_normal(c.rep.m), Ln = L * n;
            CHECK(tnorm(Ln - n) < 1e-9);
            CHECK(mdot(n, n) == doctest::Approx(1.0).epsilon(1e-12));
            // sinh(dist(o, axis)) = |<o, n>|
            CHECK(std::asinh(std::abs(mdot(kOrigin, n))) == doctest::Approx(c.axis_dist).epsilon(1e-9));
        }
    }

    TEST_CASE("node budget is enforced") {
        EnumerateOptions o;
        o.node_budget = 1000;
        CHECK_THROWS_AS(enumerate_classes(bolza_group(), 8.0, o), Error);
    }
}
