#include "lsep/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsep/errors.hpp"

namespace lsep {

std::string version_string() { return std::string("lsep ") + LSEP_VERSION; }

namespace {

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// nlohmann writes inf/nan as null; keep them readable instead
json num(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

json vec3(Vec3 v) { return json::array({v.x0, v.x1, v.x2}); }

}  // namespace

json artifact(const std::string& kind, const RunConfig& c, json body) {
    json j;
    j["kind"] = kind;
    j["version"] = version_string();
    json cfg;
    // where the file lands is not part of the run
    for (const auto& [k, v] : resolved(c))
        if (k != "out") cfg[k] = v;
    j["config"] = cfg;
    j["metadata"] = {{"timestamp", utc_now()}};
    for (auto& [k, v] : body.items()) j[k] = v;
    return j;
}

json strip_timestamp(json j) {
    if (j.contains("metadata")) j["metadata"].erase("timestamp");
    return j;
}

json to_json(const SeparationParams& p) {
    return {{"k", p.k},
            {"eps", p.eps},
            {"eps0", p.eps0},
            {"scale", p.scale},
            {"kappa", p.kappa},
            {"kappa0", p.kappa0},
            {"h_top", p.h_top},
            {"h", p.h},
            {"alpha", p.alpha},
            {"nu", p.nu},
            {"alpha_unscaled", p.alpha_unscaled},
            {"nu_unscaled", p.nu_unscaled},
            {"nu_headline", p.nu_headline},
            {"r_m", p.r_m},
            {"T0", p.T0},
            {"window_count", p.window_count},
            {"margin", p.margin},
            {"cal_tol", p.cal_tol},
            {"cal_rounds", p.cal_rounds},
            {"drift_tol", p.drift_tol},
            {"spacing", p.spacing},
            {"quick", p.quick}};
}

json to_json(const WindowCertificate& w) {
    return {{"n", w.n},
            {"T_range", {w.T_lo, w.T_hi}},
            {"classes", w.classes},
            {"lengths_before", nums(w.lengths_before)},
            {"lengths_after", nums(w.lengths_after)},
            {"scheduled", nums(w.scheduled)},
            {"amplitudes", nums(w.amplitudes)},
            {"measured", nums(w.measured)},
            {"centers", w.centers},
            {"split", w.split},
            {"unit", w.unit},
            {"r0", w.r0},
            {"min_gap", num(w.min_gap)},
            {"required_gap", w.required_gap},
            {"fixed_drift", w.fixed_drift},
            {"next_drift", w.next_drift},
            {"iterate_error", w.iterate_error},
            {"ck_norm", w.ck_norm},
            {"ck_budget", w.ck_budget},
            {"step_c0", w.step_c0},
            {"distortion", w.distortion},
            {"K_range", {w.K_min, w.K_max}},
            {"admissible", w.admissible},
            {"guard", w.guard},
            {"gaps_ok", w.gaps_ok},
            {"fixed_ok", w.fixed_ok},
            {"next_ok", w.next_ok},
            {"verdict", w.verdict}};
}

json to_json(const SeparationCheck& s) {
    return {{"ok", s.ok},
            {"worst_ratio", num(s.worst_ratio)},
            {"worst_pair", {s.l1, s.l2}},
            {"measured_C", num(s.measured_C)},
            {"pairs", s.pairs}};
}

json to_json(const SeparationCertificate& c) {
    json w = json::array();
    for (const auto& x : c.windows) w.push_back(to_json(x));
    return {{"params", to_json(c.params)},
            {"working_set", c.working_set},
            {"windows", w},
            {"spectrum_check", to_json(c.spectrum_check)},
            {"global_verdict", c.global_verdict},
            {"aborted", c.aborted ? json{{"kind", to_string(c.abort_kind)}, {"message", c.abort_message}} : json()}};
}

json to_json(const ConformalMetric& g) {
    json b = json::array();
    for (const auto& x : g.bumps())
        b.push_back({{"window", x.window},
                     {"index", x.index},
                     {"class", x.word},
                     {"class_index", x.class_index},
                     {"center", vec3(x.center)},
                     {"r0", x.r0},
                     {"delta", x.delta}});
    return {{"log_scale", g.log_scale()}, {"bumps", b}};
}

ConformalMetric metric_from_json(const json& j) {
    try {
        const json& m = j.contains("metric") ? j.at("metric") : j;
        std::vector<Bump> bumps;
        for (const auto& x : m.at("bumps")) {
            Bump b;
            auto c = x.at("center");
            b.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
            b.r0 = x.at("r0").get<double>();
            b.delta = x.at("delta").get<double>();
            b.window = x.at("window").get<int>();
            b.index = x.at("index").get<int>();
            b.class_index = x.at("class_index").get<int>();
            b.word = x.at("class").get<std::string>();
            if (!(b.r0 > 0.0) || !std::isfinite(b.delta))
                throw Error(ErrorKind::Validation, "bump with r0 <= 0 or non-finite delta");
            bumps.push_back(b);
        }
        return ConformalMetric(bumps, m.value("log_scale", 0.0));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("malformed metric: ") + e.what());
    }
}

json to_json(const CkNormReport& r) {
    json w = json::array();
    for (const auto& x : r.windows) w.push_back({{"window", x.window}, {"norm", x.norm}, {"budget", x.budget}});
    return {{"k", r.k},
            {"eps0", r.eps0},
            {"norm", r.norm},
            {"norm_F", r.norm_F},
            {"norm_phi", r.norm_phi},
            {"budget", r.budget},
            {"K_range", {r.K_min, r.K_max}},
            {"c0_distortion", r.c0_distortion},
            {"samples", r.samples},
            {"windows", w},
            {"admissible", r.admissible}};
}

json to_json(const AuditReport& a) {
    const auto& p = a.proximity;
    json phase = json::array();
    for (const auto& x : a.phase)
        phase.push_back({{"T", x.T},
                         {"eps0_phase", num(x.eps0_phase)},
                         {"min_gap", num(x.min_gap)},
                         {"pair", {x.arg_a, x.arg_b}},
                         {"pairs", x.pairs},
                         {"pairs_scanned", x.pairs_scanned}});
    return {{"proximity",
             {{"T", p.T},
              {"eps", p.eps},
              {"r_m", p.r_m},
              {"eps0_phase", num(p.eps0_phase)},
              {"tracks", p.tracks},
              {"pairs", p.pairs},
              {"almost_intersections", p.almost_intersections},
              {"max_count", p.max_count},
              {"count_bound", p.count_bound},
              {"count_violations", p.count_violations},
              {"cover_mismatches", p.cover_mismatches},
              {"self_pairs", p.self_pairs},
              {"divergence",
               {{"checks", p.divergence.checks},
                {"violations", p.divergence.violations},
                {"worst_margin", num(p.divergence.worst_margin)},
                {"arc_checks", p.divergence.arc_checks},
                {"arc_violations", p.divergence.arc_violations}}},
              {"cover", {{"samples", p.cover.samples}, {"near", p.cover.near}, {"escaped", p.cover.escaped}}}}},
            {"phase", phase},
            {"phase_positive", a.phase_positive},
            {"phase_monotone", a.phase_monotone},
            {"expansion",
             {{"pairs", a.expansion.pairs},
              {"checks", a.expansion.checks},
              {"violations", a.expansion.violations},
              {"worst_ratio", a.expansion.worst_ratio},
              {"kappa", a.expansion.kappa},
              {"kappa0", a.expansion.kappa0},
              {"slack", a.expansion.slack}}},
            {"ok", a.ok()}};
}

json to_json(const BaseSpectrum& s) {
    std::size_t prim = 0;
    for (const auto& c : s.classes) prim += c.primitive;
    return {{"cutoff_T", s.cutoff_T},
            {"classes", s.classes.size()},
            {"primitive", prim},
            {"counting_ratio", s.counting_ratio},
            {"nodes", s.nodes}};
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Validation, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::Validation, "write failed for " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, path + ": " + e.what());
    }
}

std::vector<double> read_lengths(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
    std::vector<double> v;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        // first comma-separated field, so a spectrum CSV also works
        if (auto c = line.find(','); c != std::string::npos) line.resize(c);
        std::istringstream ls(line);
        double x;
        if (!(ls >> x)) {
            std::string rest;
            if (std::istringstream(line) >> rest && n > 1)
                throw Error(ErrorKind::Validation, path + ":" + std::to_string(n) + ": not a number");
            continue;  // blank line or header
        }
        if (!(std::isfinite(x) && x > 0.0))
            throw Error(ErrorKind::Validation, path + ":" + std::to_string(n) + ": length must be finite and positive");
        v.push_back(x);
    }
    return v;
}

std::string spectrum_csv(const BaseSpectrum& s) {
    std::vector<std::size_t> order(s.classes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return s.classes[a].base_length < s.classes[b].base_length;
    });
    std::string out = "length,word,trace_abs,primitive,power\n";
    for (auto i : order) {
        const auto& c = s.classes[i];
        out += format_double(c.base_length) + "," + c.word + "," + format_double(c.trace_abs) + "," +
               (c.primitive ? "1" : "0") + "," + std::to_string(c.power) + "\n";
    }
    return out;
}

std::string counting_csv(const BaseSpectrum& s, double step) {
    std::vector<double> L;
    for (const auto& c : s.classes) L.push_back(c.base_length);
    std::sort(L.begin(), L.end());
    std::string out = "T,count,ratio\n";
    for (int i = 1; i * step <= s.cutoff_T + 1e-12; ++i) {
        double T = i * step;
        auto n = std::upper_bound(L.begin(), L.end(), T) - L.begin();
        out += format_double(T) + "," + std::to_string(n) + "," +
               format_double(static_cast<double>(n) * 2.0 * T * std::exp(-T)) + "\n";
    }
    return out;
}

std::string gap_histogram_csv(const RunResult& r, int bins) {
    const auto& p = r.params;
    std::vector<double> v;
    for (std::size_t c = 0; c < r.final_lengths.size(); ++c)
        if (r.base_lengths[c] > p.T0 && r.base_lengths[c] <= p.T0 + p.window_count) v.push_back(r.final_lengths[c]);
    std::sort(v.begin(), v.end());
    std::vector<double> x;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        double g = v[i + 1] - v[i];
        x.push_back(g > 0.0 ? std::log10(g * std::exp(p.nu * v[i + 1])) : -HUGE_VAL);
    }
    std::string out = "lo,hi,count\n";
    std::vector<double> fin;
    for (double y : x)
        if (std::isfinite(y)) fin.push_back(y);
    std::size_t zero = x.size() - fin.size();
    if (zero) out += "-inf,-inf," + std::to_string(zero) + "\n";
    if (fin.empty()) return out;
    double lo = std::floor(*std::min_element(fin.begin(), fin.end()));
    double hi = std::ceil(*std::max_element(fin.begin(), fin.end()));
    if (hi <= lo) hi = lo + 1.0;
    double w = (hi - lo) / bins;
    std::vector<std::size_t> count(bins, 0);
    for (double y : fin) ++count[std::min<int>(bins - 1, static_cast<int>((y - lo) / w))];
    for (int b = 0; b < bins; ++b)
        out += format_double(lo + (hi - lo) * b / bins) + "," + format_double(lo + (hi - lo) * (b + 1) / bins) + "," +
               std::to_string(count[b]) + "\n";
    return out;
}

std::string drift_table_csv(const RunResult& r) {
    std::vector<int> bumped_in(r.words.size(), 0);
    for (const auto& b : r.metric.bumps())
        if (b.class_index >= 0 && b.class_index < static_cast<int>(bumped_in.size())) bumped_in[b.class_index] = b.window;
    std::string out = "word,base_length,final_length,change,bump_window\n";
    std::vector<std::size_t> order(r.words.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.base_lengths[a] < r.base_lengths[b]; });
    for (auto c : order)
        out += r.words[c] + "," + format_double(r.base_lengths[c]) + "," + format_double(r.final_lengths[c]) + "," +
               format_double(r.final_lengths[c] - r.base_lengths[c]) + "," + std::to_string(bumped_in[c]) + "\n";
    return out;
}

}  // namespace lsep
