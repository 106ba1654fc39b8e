#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "ldtv/core/error.hpp"
#include "ldtv/experiment.hpp"

using namespace ldtv;

namespace {

ExperimentConfig make(const std::string& text) { return normalize_config(parse_config(text)); }

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ldtv_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config: parse, defaults, round trip") {
  auto c = make("# comment\nexperiment = binom-tv\nn = 64   # trailing\neps_grid = 0.5, 0.25\n");
  CHECK(c.experiment == "binom-tv");
  CHECK(c.get_int("n") == 64);
  CHECK(c.get_reals("eps_grid") == std::vector<double>{0.5, 0.25});
  CHECK(c.get_string("eps_grid") == "0.5,0.25");
  CHECK(c.get_uint("seed") == 1);
  CHECK(std::isnan(c.get_real("tau")));
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(normalize_config(parse_config(serialize_config(c))) == c);

  for (const auto& kind : experiment_kinds()) {
    ExperimentConfig d;
    d.experiment = kind;
    auto n = normalize_config(d);
    CHECK(normalize_config(parse_config(serialize_config(n))) == n);
    CHECK_FALSE(describe_schema(kind).empty());
  }
  // canonical text makes equal values compare equal
  CHECK(make("experiment = binom-tv\ngamma = 0.30") == make("experiment=binom-tv\ngamma=3e-1"));
}

TEST_CASE("config: schema violations") {
  CHECK_THROWS_AS(make("experiment = nope"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = binom-tv\nbogus = 1"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = binom-tv\nn = 1.5"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = binom-tv\nmodel = other"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = binom-tv\neps_grid = 0.1,x"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = binom-tv\nseed = -1"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("experiment = binom-tv\njust a line"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("n = 1\nn = 2"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = sweep\nbase = binom-tv\nkey = nothing"), InvalidArgument);
  CHECK_THROWS_AS(make("experiment = sweep\nbase = binom-tv\nkey = n\nvalues = a,b"), InvalidArgument);
  // module errors carry the experiment name
  try {
    run_experiment(make("experiment = binom-tv\nn = 16\nD = 40"));
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).rfind("binom-tv:", 0) == 0);
  }
}

TEST_CASE("run: binom-tv soundness and record contents") {
  auto rec = run_experiment(make("experiment = binom-tv\nn = 64\neps_grid = 0.2,0.5\n"));
  CHECK(rec.checks_passed);
  REQUIRE(rec.rows.size() == 2);
  CHECK(rec.columns.front() == "n");
  const auto j = nlohmann::json::parse(record_json(rec));
  CHECK(j["experiment"] == "binom-tv");
  CHECK(j["config"]["n"] == "64");
  CHECK(j["table"]["rows"].size() == 2);
  CHECK(j["version"] == tool_version());
  CHECK(record_stem(rec.config).rfind("binom-tv-", 0) == 0);
}

TEST_CASE("run: determinism across thread counts") {
  for (const char* text :
       {"experiment = binom-tv\nn = 64\n", "experiment = subgraph-tv\nn = 40\nsamples = 600\n",
        "experiment = sym-tv\nn = 30\nsamples = 3000\n", "experiment = ldlr\nsamples = 4000\n"}) {
    auto c1 = make(std::string(text) + "threads = 1\n");
    auto c3 = make(std::string(text) + "threads = 3\n");
    const auto a = record_csv(run_experiment(c1));
    const auto b = record_csv(run_experiment(c1));
    const auto c = record_csv(run_experiment(c3));
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a.size() > 20);
  }
}

TEST_CASE("run: failing property check is reported") {
  // an absurd tolerance makes ortho-verify fail
  auto rec = run_experiment(make("experiment = ortho-verify\nn_list = 10\ntol = 0\n"));
  CHECK_FALSE(rec.checks_passed);
  CHECK_FALSE(rec.failures.empty());
  auto ok = run_experiment(make("experiment = ortho-verify\n"));
  CHECK(ok.checks_passed);
}

TEST_CASE("run: sweep") {
  auto rec = run_experiment(
      make("experiment = sweep\nbase = binom-tv\nkey = gamma\nvalues = 0.3,0.5\nn = 32\neps_grid = 0.5\n"));
  REQUIRE(rec.rows.size() == 2);
  CHECK(rec.columns.front() == "n");  // gamma is already a column
  CHECK(rec.rows[0][1] == "0.3");
  CHECK(rec.rows[1][1] == "0.5");
  auto byn = run_experiment(
      make("experiment = sweep\nbase = ldlr\nkey = lambda\nvalues = 0.5,1\nsamples = 2000\n"));
  CHECK(byn.columns.front() == "lambda");
}

TEST_CASE("report: ordering, verbatim fields, malformed files") {
  const auto dir = scratch("report");
  CHECK(build_report({}).rows.empty());
  CHECK(report_table(build_report({})).rfind("experiment", 0) == 0);

  auto write = [&](const std::string& name, const ResultRecord& r) {
    std::ofstream((dir / name).string()) << record_json(r);
    return (dir / name).string();
  };
  auto one = run_experiment(make("experiment = binom-tv\nn = 32\neps_grid = 0.5\n"));
  const auto p1 = write("a.json", one);
  auto single = build_report({p1});
  REQUIRE(single.rows.size() == one.results.size());
  for (const auto& res : one.results) {
    int hits = 0;
    for (const auto& row : single.rows)
      hits += row.name == res.name && row.eps == res.eps && row.value == res.value &&
              row.std_err == res.std_err;
    CHECK(hits == 1);
  }

  auto two = run_experiment(make("experiment = binom-tv\nn = 16\neps_grid = 0.9,0.1\n"));
  const auto p2 = write("b.json", two);
  std::ofstream((dir / "bad.json").string()) << "{ not json";
  auto rep = build_report({p1, p2, (dir / "bad.json").string(), (dir / "missing.json").string()});
  CHECK(rep.malformed.size() == 2);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    CHECK((a.experiment < b.experiment || (a.experiment == b.experiment && (a.n < b.n || (a.n == b.n && a.eps <= b.eps)))));
  }
  CHECK(report_csv(rep).rfind("experiment,n,eps,name,value,stderr,source\n", 0) == 0);
}
