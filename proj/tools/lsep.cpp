// lsep: batch front-end.  Exit codes: 0 ok, 1 negative verdict or numerical failure,
// 2 invalid input, 3 resource limit.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lsep/audit.hpp"
#include "lsep/config.hpp"
#include "lsep/errors.hpp"
#include "lsep/io.hpp"
#include "lsep/kernels.hpp"
#include "lsep/separation_engine.hpp"
#include "lsep/surface_group.hpp"

using namespace lsep;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Validation: return 2;
        case ErrorKind::ResourceLimit: return 3;
        default: return 1;
    }
}

std::string in_out(const RunConfig& c, const std::string& name) { return (std::filesystem::path(c.out) / name).string(); }

void put(const RunConfig& c, const std::string& name, const std::string& content) {
    write_atomic(in_out(c, name), content);
    std::printf("wrote %s\n", in_out(c, name).c_str());
}

int cmd_enumerate(const RunConfig& c) {
    EnumerateOptions opt;
    opt.threads = c.sep.threads;
    auto s = enumerate_classes(bolza_group(), c.T, opt);
    put(c, "spectrum.csv", spectrum_csv(s));
    put(c, "counting.csv", counting_csv(s));
    put(c, "enumerate.json", dump(artifact("enumerate", c, {{"spectrum", to_json(s)}})));
    std::printf("T %s: %zu classes, N(T) 2T e^-T = %.6f\n", format_double(c.T).c_str(), s.classes.size(),
                s.counting_ratio);
    return 0;
}

int cmd_separate(const RunConfig& c, const std::string& metric_file) {
    SeparationParams prm = c.sep;
    ConformalMetric replay;
    if (!metric_file.empty()) {
        auto j = read_json(metric_file);
        replay = metric_from_json(j);
        // the plan depends on T0, so the replay must start where the original did
        if (j.contains("T0")) prm.T0 = j.at("T0").get<double>();
    }
    auto r = run(prm, metric_file.empty() ? nullptr : &replay);
    const auto& cert = r.certificate;
    put(c, "metric.json", dump(artifact("metric", c, {{"T0", r.params.T0}, {"metric", to_json(r.metric)}})));
    put(c, "certificate.json", dump(artifact("certificate", c, {{"certificate", to_json(cert)}})));
    put(c, "gaps.csv", gap_histogram_csv(r));
    put(c, "drift.csv", drift_table_csv(r));
    for (const auto& w : cert.windows)
        std::printf("window %d (%g, %g]: %zu classes, min gap %.4e >= %.4e %s, drift %.2e, C^k %.4f\n", w.n, w.T_lo,
                    w.T_hi, w.classes.size(), w.min_gap, w.required_gap, w.gaps_ok ? "yes" : "NO", w.fixed_drift,
                    w.ck_norm);
    std::printf("T0 %g alpha %.6f nu %.6f measured C %.4e global_verdict %s\n", r.params.T0, r.params.alpha,
                r.params.nu, cert.spectrum_check.measured_C, cert.global_verdict ? "true" : "false");
    if (cert.aborted) {
        std::fprintf(stderr, "aborted: %s\n", cert.abort_message.c_str());
        return exit_code(cert.abort_kind);
    }
    return cert.global_verdict ? 0 : 1;
}

int cmd_audit(const RunConfig& c) {
    auto prm = derive_constants(1.0, c.sep.h_top, c.sep.eps0, c.sep.eps, c.sep.k, c.sep.scale, c.sep);
    auto a = run_audit(audit_options(c, prm.alpha));
    put(c, "audit.json", dump(artifact("audit", c, {{"audit", to_json(a)}})));
    const auto& p = a.proximity;
    std::printf("proximity T %g eps %.4f: %zu pairs, max count %zu (bound %.1f), divergence violations %zu/%zu, "
                "escaped %zu\n",
                p.T, p.eps, p.pairs, p.max_count, p.count_bound, p.divergence.violations, p.divergence.checks,
                p.cover.escaped);
    for (const auto& ph : a.phase) std::printf("phase T %g eps0_phase %.6g\n", ph.T, ph.eps0_phase);
    std::printf("expansion: %zu checks, %zu violations, worst ratio %.4f\n", a.expansion.checks,
                a.expansion.violations, a.expansion.worst_ratio);
    std::printf("audit %s\n", a.ok() ? "ok" : "FAILED");
    return a.ok() ? 0 : 1;
}

int cmd_check(const RunConfig& c) {
    if (c.lengths.empty()) throw Error(ErrorKind::Validation, "check needs lengths = FILE");
    auto v = read_lengths(c.lengths);
    auto s = separation_check(v, c.check_nu, c.check_C, c.check_all_pairs);
    put(c, "check.json", dump(artifact("check", c, {{"count", v.size()}, {"check", to_json(s)}})));
    std::printf("%zu lengths, %zu pairs, worst ratio %.6g at (%.12g, %.12g): %s\n", v.size(), s.pairs, s.worst_ratio,
                s.l1, s.l2, s.ok ? "separated" : "NOT separated");
    return s.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential length-spectrum separation on the Bolza surface"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file, out, metric_file;
    int threads = 0;
    bool quick = false, list_keys = false;
    std::vector<std::string> sets;
    app.add_option("--config", config_file, "key = value config file");
    app.add_option("--out", out, "output directory");
    app.add_option("--threads", threads, "worker threads");
    app.add_flag("--quick", quick, "adjacent pairs only in the final separation check");
    app.add_option("--set", sets, "override, key=value (repeatable)");
    app.add_flag("--keys", list_keys, "list config keys and exit");

    auto* en = app.add_subcommand("enumerate", "closed geodesics of the base metric up to T");
    auto* sep = app.add_subcommand("separate", "run the window construction");
    sep->add_option("--metric", metric_file, "replay the bumps of a metric.json instead of placing them");
    auto* au = app.add_subcommand("audit", "proximity, phase and expansion audits of the base metric");
    auto* ch = app.add_subcommand("check", "separation check on a lengths file");
    app.add_subcommand("keys", "list config keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (list_keys || app.got_subcommand("keys")) {
        for (const auto& k : config_keys()) std::printf("%-18s %s\n", k.name.c_str(), k.help.c_str());
        return 0;
    }

    try {
        RunConfig c;
        if (!config_file.empty()) c = load_config(config_file);
        for (const auto& s : sets) apply_override(c, s);
        if (!out.empty()) c.out = out;
        if (threads) c.sep.threads = threads;
        if (quick) c.sep.quick = true;
        validate(c);
        std::printf("%s, kernels %s\n", version_string().c_str(), kernels::isa_name(kernels::active_isa()));

        if (en->parsed()) return cmd_enumerate(c);
        if (sep->parsed()) return cmd_separate(c, metric_file);
        if (au->parsed()) return cmd_audit(c);
        if (ch->parsed()) return cmd_check(c);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
