#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lsep/audit.hpp"
#include "lsep/config.hpp"
#include "lsep/separation_engine.hpp"
#include "lsep/surface_group.hpp"

namespace lsep {

using json = nlohmann::ordered_json;

std::string version_string();

// {kind, version, config, metadata: {timestamp}, ...body}
json artifact(const std::string& kind, const RunConfig& c, json body);
// Drops metadata.timestamp, the only field allowed to differ between identical runs.
json strip_timestamp(json j);

json to_json(const SeparationParams& p);
json to_json(const WindowCertificate& w);
json to_json(const SeparationCheck& s);
json to_json(const SeparationCertificate& c);
json to_json(const ConformalMetric& g);
json to_json(const AuditReport& a);
json to_json(const CkNormReport& r);
json to_json(const BaseSpectrum& s);
ConformalMetric metric_from_json(const json& j);

// Write to path.tmp, then rename over path.
void write_atomic(const std::string& path, const std::string& content);
std::string dump(const json& j);
json read_json(const std::string& path);
std::vector<double> read_lengths(const std::string& path);

std::string spectrum_csv(const BaseSpectrum& s);
// counted classes and N(T) 2T e^{-T} at T = step, 2 step, ..., cutoff
std::string counting_csv(const BaseSpectrum& s, double step = 0.25);
// adjacent gaps of the final window lengths, log10(gap / e^{-nu max}) histogram
std::string gap_histogram_csv(const RunResult& r, int bins = 20);
std::string drift_table_csv(const RunResult& r);

}  // namespace lsep
