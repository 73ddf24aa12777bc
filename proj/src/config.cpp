#include "lsep/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "lsep/errors.hpp"

namespace lsep {

std::string format_double(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad(const std::string& key, std::string_view v, const char* what) {
    throw Error(ErrorKind::Validation, "'" + key + "': '" + std::string(v) + "' is not " + what);
}

double to_double(const std::string& key, std::string_view v) {
    double x = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(x)) bad(key, v, "a finite number");
    return x;
}

long to_long(const std::string& key, std::string_view v) {
    long x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad(key, v, "an integer");
    return x;
}

bool to_bool(const std::string& key, std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad(key, v, "true or false");
}

struct Entry {
    ConfigKey key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class M>
Entry num(const char* name, const char* help, M member) {
    std::string n = name;
    return {{name, help},
            [n, member](RunConfig& c, std::string_view v) {
                auto& f = member(c);
                using T = std::remove_reference_t<decltype(f)>;
                if constexpr (std::is_same_v<T, double>) f = to_double(n, v);
                else if constexpr (std::is_same_v<T, bool>) f = to_bool(n, v);
                else if constexpr (std::is_same_v<T, std::string>) f = std::string(v);
                else {
                    long x = to_long(n, v);
                    if (x < 0 && std::is_unsigned_v<T>) bad(n, v, "non-negative");
                    f = static_cast<T>(x);
                }
            },
            [member](const RunConfig& c) {
                auto& f = member(const_cast<RunConfig&>(c));
                using T = std::remove_cvref_t<decltype(f)>;
                if constexpr (std::is_same_v<T, double>) return format_double(f);
                else if constexpr (std::is_same_v<T, bool>) return std::string(f ? "true" : "false");
                else if constexpr (std::is_same_v<T, std::string>) return f;
                else return std::to_string(f);
            }};
}

#define FIELD(expr) [](RunConfig& c) -> auto& { return expr; }

const std::vector<Entry>& table() {
    static const std::vector<Entry> t = {
        num("surface", "surface id; only bolza", FIELD(c.surface)),
        num("T", "enumerate: length cutoff", FIELD(c.T)),
        num("k", "smoothness order, >= 2", FIELD(c.sep.k)),
        num("eps", "exponent slack, > 0", FIELD(c.sep.eps)),
        num("eps0", "metric ball radius", FIELD(c.sep.eps0)),
        num("scale", "factor on alpha, in (0, 1]", FIELD(c.sep.scale)),
        num("h_top", "entropy of the base metric", FIELD(c.sep.h_top)),
        num("T0", "first window start; 0 searches t0_min..t0_max", FIELD(c.sep.T0)),
        num("t0_min", "T0 search start", FIELD(c.sep.t0_min)),
        num("t0_step", "T0 search step", FIELD(c.sep.t0_step)),
        num("t0_max", "T0 search end", FIELD(c.sep.t0_max)),
        num("windows", "number of unit windows", FIELD(c.sep.window_count)),
        num("r_m_fraction", "r_m as a fraction of r_inj / sqrt(1 + eps0)", FIELD(c.sep.r_m_fraction)),
        num("margin", "schedule unit over e^{-nu T_n}, >= 1", FIELD(c.sep.margin)),
        num("cal_tol", "relative calibration tolerance", FIELD(c.sep.cal_tol)),
        num("cal_rounds", "amplitude correction rounds", FIELD(c.sep.cal_rounds)),
        num("drift_tol", "allowed drift of fixed lengths", FIELD(c.sep.drift_tol)),
        num("spacing", "target node spacing of relaxed curves", FIELD(c.sep.spacing)),
        num("quick", "adjacent pairs only in the final check", FIELD(c.sep.quick)),
        num("seed", "audit sampling seed", FIELD(c.sep.seed)),
        num("threads", "worker threads", FIELD(c.sep.threads)),
        num("audit_T", "proximity audit cutoff", FIELD(c.audit.T)),
        num("phase_T_max", "phase audit last cutoff", FIELD(c.audit.phase_T_max)),
        num("phase_T_step", "phase audit cutoff step", FIELD(c.audit.phase_T_step)),
        num("audit_alpha", "audit tube exponent; 0 uses the derived alpha", FIELD(c.audit.alpha)),
        num("expansion_pairs", "sampled tangent pairs", FIELD(c.audit.expansion_pairs)),
        num("expansion_tmax", "flow time bound", FIELD(c.audit.expansion_tmax)),
        num("cover_samples", "cover completeness samples per pair", FIELD(c.audit.cover_samples)),
        num("check_nu", "check: exponent", FIELD(c.check_nu)),
        num("check_C", "check: constant", FIELD(c.check_C)),
        num("check_all_pairs", "check: all pairs rather than neighbours", FIELD(c.check_all_pairs)),
        num("lengths", "check: input file, one length per line", FIELD(c.lengths)),
        num("out", "output directory", FIELD(c.out)),
    };
    return t;
}

#undef FIELD

const Entry& find(std::string_view key) {
    for (const auto& e : table())
        if (e.key.name == key) return e;
    throw Error(ErrorKind::Validation, "unknown key '" + std::string(key) + "'");
}

void set_kv(RunConfig& c, std::string_view line, const std::string& where) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::Validation, where + "expected key = value");
    auto key = trim(line.substr(0, eq));
    auto val = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Validation, where + "empty key");
    try {
        find(key).set(c, val);
    } catch (const Error& e) {
        throw Error(ErrorKind::Validation, where + e.what());
    }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        for (const auto& e : table()) k.push_back(e.key);
        return k;
    }();
    return keys;
}

RunConfig parse_config(std::string_view text, RunConfig c) {
    std::set<std::string> seen;
    std::size_t lineno = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++lineno;
        if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty()) continue;
        std::string where = "line " + std::to_string(lineno) + ": ";
        auto key = std::string(trim(line.substr(0, line.find('='))));
        if (!seen.insert(key).second) throw Error(ErrorKind::Validation, where + "repeated key '" + key + "'");
        set_kv(c, line, where);
    }
    return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Validation, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), std::move(base));
    } catch (const Error& e) {
        throw Error(ErrorKind::Validation, path + ": " + e.what());
    }
}

void apply_override(RunConfig& c, std::string_view kv) { set_kv(c, kv, "--set " + std::string(kv) + ": "); }

void validate(const RunConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw Error(ErrorKind::Validation, msg);
    };
    const auto& s = c.sep;
    need(c.surface == "bolza", "surface must be bolza");
    need(c.T >= 0.0 && c.T <= 14.0, "T must lie in [0, 14]");
    need(s.k >= 2 && s.k <= 4, "k must lie in [2, 4]");
    need(s.eps > 0.0, "eps must be positive");
    need(s.eps0 > 0.0 && s.eps0 < 1.0, "eps0 must lie in (0, 1)");
    need(s.scale > 0.0 && s.scale <= 1.0, "scale must lie in (0, 1]");
    need(s.h_top > 0.0, "h_top must be positive");
    need(s.T0 == 0.0 || (s.T0 >= 1.0 && s.T0 <= 10.0), "T0 must be 0 or lie in [1, 10]");
    need(s.t0_min >= 1.0 && s.t0_step > 0.0 && s.t0_max >= s.t0_min && s.t0_max <= 10.0,
         "T0 search range must satisfy 1 <= t0_min <= t0_max <= 10 with t0_step > 0");
    need(s.window_count >= 0 && s.window_count <= 4, "windows must lie in [0, 4]");
    need(s.r_m_fraction > 0.0 && s.r_m_fraction < 1.0, "r_m_fraction must lie in (0, 1)");
    need(s.margin >= 1.0, "margin must be at least 1");
    need(s.cal_tol > 0.0 && s.cal_tol < 1.0, "cal_tol must lie in (0, 1)");
    need(s.cal_rounds >= 0 && s.cal_rounds <= 10, "cal_rounds must lie in [0, 10]");
    need(s.drift_tol > 0.0, "drift_tol must be positive");
    need(s.spacing >= 1e-3 && s.spacing <= 0.1, "spacing must lie in [1e-3, 0.1]");
    need(s.threads >= 1 && s.threads <= 256, "threads must lie in [1, 256]");
    const auto& a = c.audit;
    need(a.T > 0.0 && a.T <= 9.0, "audit_T must lie in (0, 9]");
    need(a.phase_T_max >= a.T && a.phase_T_max <= 9.0, "phase_T_max must lie in [audit_T, 9]");
    need(a.phase_T_step > 0.0, "phase_T_step must be positive");
    need(a.alpha >= 0.0, "audit_alpha must be non-negative");
    need(a.expansion_tmax > 0.0, "expansion_tmax must be positive");
    need(c.check_nu > 0.0 && c.check_C > 0.0, "check_nu and check_C must be positive");
    need(!c.out.empty(), "out must not be empty");
}

std::vector<std::pair<std::string, std::string>> resolved(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : table()) out.emplace_back(e.key.name, e.get(c));
    return out;
}

AuditOptions audit_options(const RunConfig& c, double alpha) {
    AuditOptions a = c.audit;
    if (a.alpha == 0.0) a.alpha = alpha;
    a.seed = c.sep.seed;
    a.threads = c.sep.threads;
    a.eps0 = c.sep.eps0;
    return a;
}

std::string format_config(const RunConfig& c) {
    std::string s;
    for (const auto& [k, v] : resolved(c)) s += k + " = " + v + "\n";
    return s;
}

}  // namespace lsep
