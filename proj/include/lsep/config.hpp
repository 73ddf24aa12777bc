#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsep/audit.hpp"
#include "lsep/separation_engine.hpp"

namespace lsep {

// Plain-text run configuration.  Grammar, one entry per line:
//   key = value      # comment
// Blank lines and lines starting with '#' are ignored.  Keys are the names listed by
// config_keys(); an unknown key or a repeated key is an error.  Booleans are true/false.
struct RunConfig {
    std::string surface = "bolza";
    double T = 8.0;  // enumerate cutoff
    SeparationParams sep;
    AuditOptions audit = [] {
        AuditOptions a;
        a.alpha = 0.0;
        return a;
    }();
    double check_nu = 1.0;
    double check_C = 1.0;
    bool check_all_pairs = true;
    std::string lengths;  // input file for `check`
    std::string out = "out";
};

struct ConfigKey {
    std::string name;
    std::string help;
};
const std::vector<ConfigKey>& config_keys();

// Throws Error(Validation) with the offending line number.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
// "key=value"
void apply_override(RunConfig& c, std::string_view kv);
// Range checks; called before any computation.
void validate(const RunConfig& c);
// Every key with its resolved value, in config_keys() order.
std::vector<std::pair<std::string, std::string>> resolved(const RunConfig& c);
std::string format_config(const RunConfig& c);
// Audit options with the shared seed, threads and eps0 filled in; alpha = 0 takes `alpha`.
AuditOptions audit_options(const RunConfig& c, double alpha);

// Shortest decimal that round-trips.
std::string format_double(double x);

}  // namespace lsep
