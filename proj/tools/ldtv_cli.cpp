// ldtv: run one configured experiment, or aggregate records.
//
//   ldtv binom-tv --config runs/binom.cfg --seed 7 --out results/
//   ldtv report 'results/*.json'
//
// exit: 0 ok, 2 a property check failed, 3 config error, 4 budget exceeded

#include <glob.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ldtv/core/error.hpp"
#include "ldtv/experiment.hpp"

namespace {

struct RunFlags {
  std::string config_path, out_dir, format = "csv";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int threads = 0;
  bool schema = false;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ldtv::InvalidArgument("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int run(const std::string& kind, const RunFlags& f, const CLI::App& sub) {
  if (f.schema) {
    std::cout << ldtv::describe_schema(kind);
    return 0;
  }
  ldtv::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = ldtv::parse_config(slurp(f.config_path));
  if (!cfg.experiment.empty() && cfg.experiment != kind)
    throw ldtv::InvalidArgument("config is for '" + cfg.experiment + "', not '" + kind + "'");
  cfg.experiment = kind;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ldtv::InvalidArgument("--set expects key=value, got '" + s + "'");
    cfg.values[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (sub.count("--seed")) cfg.values["seed"] = std::to_string(f.seed);
  if (sub.count("--threads")) cfg.values["threads"] = std::to_string(f.threads);
  cfg = ldtv::normalize_config(cfg);

  const auto rec = ldtv::run_experiment(cfg);
  const std::string js = ldtv::record_json(rec), csv = ldtv::record_csv(rec);
  if (!f.out_dir.empty()) {
    std::filesystem::create_directories(f.out_dir);
    const auto stem = std::filesystem::path(f.out_dir) / ldtv::record_stem(cfg);
    write_file(stem.string() + ".json", js);
    write_file(stem.string() + ".csv", csv);
    write_file(stem.string() + ".cfg", ldtv::serialize_config(cfg));
  }
  std::cout << (f.format == "json" ? js : csv);
  for (const auto& msg : rec.failures) std::cerr << "check failed: " << msg << '\n';
  return rec.checks_passed ? 0 : 2;
}

int report(const std::vector<std::string>& patterns, const std::string& out_dir,
           const std::string& format) {
  std::vector<std::string> paths;
  for (const auto& pat : patterns) {
    glob_t g{};
    if (::glob(pat.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  const auto rep = ldtv::build_report(paths);
  const std::string csv = ldtv::report_csv(rep);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "report.csv", csv);
  }
  std::cout << (format == "csv" ? csv : ldtv::report_table(rep));
  for (const auto& m : rep.malformed) std::cerr << "malformed record: " << m << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-degree to total-variation experiments"};
  app.set_version_flag("--version", ldtv::tool_version());
  app.require_subcommand(1);

  std::vector<std::pair<std::string, CLI::App*>> subs;
  RunFlags flags;
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"ortho-verify", "orthonormality checks for the Krawtchouk and Hermite families"},
      {"binom-tv", "certified TV bound against exact TV for a symmetric Boolean law"},
      {"ldlr", "degree-D advantage of a planted model"},
      {"sym-tv", "TV between noisy power-sum statistics of null and planted vectors"},
      {"cf-verify", "characteristic-function regime bounds for Gaussian polynomials"},
      {"subgraph-tv", "TV of signed subgraph counts in the spiked Wigner model"},
      {"sweep", "repeat an experiment over one field"}};
  for (const auto& [name, help] : kinds) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", flags.config_path, "key = value config file");
    s->add_option("--seed", flags.seed, "override the config seed");
    s->add_option("--threads", flags.threads, "worker threads");
    s->add_option("--out", flags.out_dir, "directory for the .json/.csv/.cfg record");
    s->add_option("--format", flags.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--set", flags.sets, "key=value override (repeatable)");
    s->add_flag("--schema", flags.schema, "print the config fields and exit");
    subs.emplace_back(name, s);
  }
  std::vector<std::string> patterns;
  std::string rep_out, rep_format = "table";
  auto* rep = app.add_subcommand("report", "aggregate JSON records into a table");
  rep->add_option("records", patterns, "record files or glob patterns");
  rep->add_option("--out", rep_out, "directory for report.csv");
  rep->add_option("--format", rep_format, "stdout format")->check(CLI::IsMember({"table", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }
  try {
    if (rep->parsed()) return report(patterns, rep_out, rep_format);
    for (const auto& [name, s] : subs)
      if (s->parsed()) return run(name, flags, *s);
  } catch (const ldtv::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const ldtv::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 3;
}
