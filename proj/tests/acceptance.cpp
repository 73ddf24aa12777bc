// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>

#include "lsep/audit.hpp"
#include "lsep/config.hpp"
#include "lsep/conformal_metric.hpp"
#include "lsep/geodesic_solver.hpp"
#include "lsep/io.hpp"
#include "lsep/parallel.hpp"
#include "lsep/proximity.hpp"
#include "lsep/separation_engine.hpp"
#include "lsep/surface_group.hpp"

using namespace lsep;

namespace {

int failures = 0;

void report(int n, const char* name, const std::function<std::pair<bool, std::string>()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
        std::tie(ok, detail) = f();
    } catch (const std::exception& e) {
        detail = std::string("threw ") + e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", n, name, detail.c_str(), s);
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, auto... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

RunConfig desk() {
    auto c = load_config(LSEP_SOURCE_DIR "/configs/desk.conf");
    validate(c);
    return c;
}

}  // namespace

int main() {
    const RunConfig cfg = desk();
    const int threads = cfg.sep.threads;

    report(1, "trace formula", [&] {
        auto s = enumerate_classes(bolza_group(), 8.0);
        std::vector<double> err(s.classes.size());
        parallel_for(s.classes.size(), threads, [&](std::size_t i) {
            double L = relax_class(s, static_cast<int>(i), ConformalMetric{}).length;
            double ref = 2.0 * std::acosh(0.5 * s.classes[i].trace_abs);
            err[i] = std::abs(L - ref) / ref;
        });
        double worst = *std::max_element(err.begin(), err.end());
        return std::pair{worst <= 1e-6, fmt("%zu classes up to 8, worst relative error %.2e", s.classes.size(), worst)};
    });

    report(2, "counting", [&] {
        auto s10 = enumerate_classes(bolza_group(), 10.0);
        auto s12 = enumerate_classes(bolza_group(), 12.0);
        double r10 = s10.counting_ratio, r12 = s12.counting_ratio;
        bool ok = r10 >= 0.5 && r10 <= 2.0 && std::abs(r12 - 1.0) < std::abs(r10 - 1.0);
        return std::pair{ok, fmt("N(10) = %zu ratio %.6f, N(12) = %zu ratio %.6f", s10.classes.size(), r10,
                                 s12.classes.size(), r12)};
    });

    report(3, "conformal dilation", [&] {
        const double r0 = 0.04, delta = 1e-4;
        auto s = enumerate_classes(bolza_group(), 6.0);
        std::vector<std::unique_ptr<Track>> own;
        std::vector<const Track*> all;
        for (int i = 0; i < static_cast<int>(s.classes.size()); ++i)
            if (s.classes[i].primitive) {
                own.push_back(std::make_unique<Track>(relax_class(s, i, ConformalMetric{}), i, injectivity_radius()));
                all.push_back(own.back().get());
            }
        double r_m = 0.9 * injectivity_radius() / std::sqrt(1.0 + cfg.sep.eps0);
        auto z = safe_point(*all[0], all, 2.0 * r0, make_constants(1.0, r_m, 0.0, 0.5, 6.0));
        ConformalMetric g({Bump{z.z_reduced, r0, delta, 1, 1, 0, s.classes[0].word}});
        std::vector<double> L(s.classes.size());
        parallel_for(s.classes.size(), threads,
                     [&](std::size_t i) { L[i] = relax_class(s, static_cast<int>(i), g).length; });
        double err = std::abs(L[0] - s.classes[0].base_length - delta), drift = 0.0;
        for (std::size_t i = 1; i < L.size(); ++i) drift = std::max(drift, std::abs(L[i] - s.classes[i].base_length));
        return std::pair{err <= 1e-6 && drift <= 1e-10,
                         fmt("class %s at clearance %.3f: increment error %.2e, max drift of %zu others %.2e",
                             s.classes[0].word.c_str(), z.clearance, err, L.size() - 1, drift)};
    });

    report(4, "C^k budget scaling", [&] {
        const int k = 2;
        std::vector<double> r0s{0.02, 0.01, 0.005}, norms;
        for (double r0 : r0s) {
            Bump b{from_disk({0.2, 0.1}), r0, 1e-9, 1, 1, -1, ""};
            norms.push_back(admissibility(ConformalMetric({b}), cfg.sep.eps0, k).norm);
        }
        // norm r0^{k+1} should be constant
        double worst = 0.0, c0 = norms[0] * std::pow(r0s[0], k + 1);
        std::string s;
        for (std::size_t i = 0; i < r0s.size(); ++i) {
            double c = norms[i] * std::pow(r0s[i], k + 1);
            worst = std::max(worst, std::abs(c / c0 - 1.0));
            s += fmt("%s%g: %.4e", i ? ", " : "", r0s[i], norms[i]);
        }
        return std::pair{worst <= 0.1, s + fmt("; max deviation from r0^-3 %.2e", worst)};
    });

    RunResult first;
    report(5, "window certificate", [&] {
        first = run(cfg.sep);
        const auto& c = first.certificate;
        bool ok = c.global_verdict && !c.aborted && c.windows.size() == 2;
        std::string s = fmt("scale %g, T0 %g, working set %zu classes to %g", first.params.scale, first.params.T0,
                            c.working_set, first.params.T0 + 3.0);
        for (const auto& w : c.windows) {
            ok = ok && w.min_gap >= w.required_gap && w.fixed_drift <= 1e-9;
            s += fmt("; window %d: %zu classes, gap %.3e >= %.3e, drift %.1e", w.n, w.classes.size(), w.min_gap,
                     w.required_gap, w.fixed_drift);
        }
        return std::pair{ok, s + fmt("; global_verdict %s", c.global_verdict ? "true" : "false")};
    });

    AuditOptions ao = audit_options(cfg, first.params.alpha > 0 ? first.params.alpha : 0.5);
    ao.T = 6.0;
    ao.phase_T_max = 8.0;

    report(6, "proximity bounds", [&] {
        auto p = proximity_audit(ao);
        bool ok = p.count_violations == 0 && p.divergence.violations == 0 && p.divergence.arc_violations == 0 &&
                  p.cover_mismatches == 0 && p.cover.escaped == 0;
        return std::pair{ok, fmt("T 6, %zu ordered pairs, max count %zu vs 4(T/r_m)^2 = %.1f, divergence %zu/%zu "
                                 "violations, arcs %zu/%zu, escaped samples %zu",
                                 p.pairs, p.max_count, p.count_bound, p.divergence.violations, p.divergence.checks,
                                 p.divergence.arc_violations, p.divergence.arc_checks, p.cover.escaped)};
    });

    report(7, "phase-space separation", [&] {
        auto ph = phase_series(ao);
        bool ok = !ph.empty() && ph.front().eps0_phase > 0.0;
        std::string s;
        for (std::size_t i = 0; i < ph.size(); ++i) {
            if (i) ok = ok && ph[i].eps0_phase <= ph[i - 1].eps0_phase;
            s += fmt("%sT %g: %.6g", i ? ", " : "", ph[i].T, ph[i].eps0_phase);
        }
        return std::pair{ok, s};
    });

    report(8, "expansion", [&] {
        auto a = expansion_audit(std::max<std::size_t>(ao.expansion_pairs, 1000), 3.0, ao.seed);
        return std::pair{a.violations == 0 && a.pairs >= 1000,
                         fmt("%zu pairs, %zu checks over |t| <= 3, %zu violations, worst ratio %.4f", a.pairs,
                             a.checks, a.violations, a.worst_ratio)};
    });

    report(9, "determinism", [&] {
        auto second = run(cfg.sep);
        auto a = dump(strip_timestamp(artifact("certificate", cfg, {{"certificate", to_json(first.certificate)}})));
        auto b = dump(strip_timestamp(artifact("certificate", cfg, {{"certificate", to_json(second.certificate)}})));
        auto ma = dump(to_json(first.metric)), mb = dump(to_json(second.metric));
        return std::pair{a == b && ma == mb, fmt("certificate %zu bytes, metric %zu bytes, %s", a.size(), ma.size(),
                                                 a == b && ma == mb ? "identical" : "DIFFERENT")};
    });

    return failures;
}
