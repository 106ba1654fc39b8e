#pragma once

// Config-driven experiment runs and record aggregation.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ldtv {

/// A flat key=value configuration. `values` holds canonical text forms
/// after normalize_config, so two equal configs serialize identically.
struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_real(const std::string& key) const;
  std::vector<double> get_reals(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// ortho-verify, binom-tv, ldlr, sym-tv, cf-verify, subgraph-tv, sweep.
const std::vector<std::string>& experiment_kinds();
/// One "key type default  help" line per field.
std::string describe_schema(const std::string& kind);

/// Parses "key = value" lines ('#' comments, blank lines). An `experiment`
/// key sets the kind. Throws InvalidArgument on syntax errors.
ExperimentConfig parse_config(std::string_view text);
/// Checks every key and value against the schema of the kind, fills
/// defaults and rewrites values canonically. Throws InvalidArgument.
ExperimentConfig normalize_config(ExperimentConfig cfg);
/// Sorted "key = value" lines, experiment first.
std::string serialize_config(const ExperimentConfig& cfg);

struct ResultValue {
  std::string name;
  double value = 0.0;
  double std_err = 0.0;
  long long n = -1;       // -1 when not applicable
  double eps = -1.0;      // -1 when not applicable
};

struct ResultRecord {
  ExperimentConfig config;
  std::vector<ResultValue> results;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  bool checks_passed = true;
  std::vector<std::string> failures;
  double wall_time_s = 0.0;
  std::string version;
};

/// Runs one normalized (or normalizable) config. Module errors propagate
/// with the experiment name prefixed.
ResultRecord run_experiment(const ExperimentConfig& cfg);

std::string record_json(const ResultRecord& rec);
/// The table payload alone; deterministic for a fixed config.
std::string record_csv(const ResultRecord& rec);
/// Stable file stem: <experiment>-<16 hex digits of the serialized config>.
std::string record_stem(const ExperimentConfig& cfg);

struct ReportRow {
  std::string experiment;
  long long n = -1;
  double eps = -1.0;
  std::string name;
  double value = 0.0;
  double std_err = 0.0;
  std::string source;
};

struct Report {
  std::vector<ReportRow> rows;  // sorted by (experiment, n, eps, source, name)
  std::vector<std::string> malformed;
};

/// Reads JSON records; files that fail to parse are listed, not fatal.
Report build_report(const std::vector<std::string>& paths);
std::string report_table(const Report& r);
std::string report_csv(const Report& r);

std::string tool_version();

}  // namespace ldtv
