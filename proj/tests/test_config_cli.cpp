#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "collapse/commands.hpp"
#include "collapse/config.hpp"
#include "doctest.h"

using namespace collapse;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "strategy": "accumulate", "dim": 10, "samples_per_iter": 100, "noise_std": 1.0,
  "iterations": 10, "trials": 200, "root_seed": 42
})";

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("collapse_lab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

template <class E>
std::string error_key(std::string_view text) {
  try {
    parse_config(text);
  } catch (const E& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("parse_config: defaults") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.strategy == Strategy::Accumulate);
  CHECK(c.dim == 10);
  CHECK(c.samples_per_iter == 100);
  CHECK(c.iterations == 10);
  CHECK(c.trials == 200);
  CHECK(c.root_seed == 42);
  CHECK(std::holds_alternative<IsotropicCov>(c.covariance));
  CHECK(c.execution_mode == ExecutionMode::SufficientStats);
  CHECK_FALSE(c.fresh_covariates);
  CHECK_FALSE(c.ridge_lambda.has_value());
  CHECK(c.sigma_threshold == 4.0);
}

TEST_CASE("parse_config: covariance kinds") {
  const auto diag = parse_config(R"({"strategy": "replace", "dim": 2, "samples_per_iter": 10,
    "noise_std": 0.5, "iterations": 3, "trials": 5, "root_seed": 1,
    "covariance": {"kind": "diagonal", "diagonal": [1.0, 2.0]}})");
  REQUIRE(std::holds_alternative<DiagonalCov>(diag.covariance));
  const Vector& d = std::get<DiagonalCov>(diag.covariance).diagonal;
  CHECK(d.size() == 2);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 2.0);

  const auto full = parse_config(R"({"strategy": "replace", "dim": 2, "samples_per_iter": 10,
    "noise_std": 0.5, "iterations": 3, "trials": 5, "root_seed": 1,
    "covariance": {"kind": "full", "matrix": [[2.0, 0.5], [0.5, 1.0]]}})");
  CHECK(std::holds_alternative<FullCov>(full.covariance));
}

TEST_CASE("parse_config: errors name the offending key") {
  CHECK(error_key<SchemaError>(R"({"strategy": "halfway", "dim": 10, "samples_per_iter": 100,
    "noise_std": 1.0, "iterations": 10, "trials": 200, "root_seed": 42})") == "strategy");
  CHECK(error_key<SchemaError>(R"({"strategy": "replace", "dim": 10, "samples_per_iter": 100,
    "noise_std": 1.0, "iterations": 10, "trials": 200, "root_seed": 42, "colour": 1})") == "colour");
  CHECK(error_key<SchemaError>(R"({"strategy": "replace", "dim": 10, "samples_per_iter": 100,
    "noise_std": 1.0, "iterations": 10, "trials": 200})") == "root_seed");
  CHECK(error_key<SchemaError>(R"({"strategy": "replace", "dim": "ten", "samples_per_iter": 100,
    "noise_std": 1.0, "iterations": 10, "trials": 200, "root_seed": 1})") == "dim");
  CHECK(error_key<ConstraintError>(R"({"strategy": "replace", "dim": 10, "samples_per_iter": 100,
    "noise_std": -1.0, "iterations": 10, "trials": 200, "root_seed": 1})") == "noise_std");
  CHECK_THROWS_AS(parse_config("{\"strategy\": "), ParseError);

  try {
    parse_config(R"({"strategy": "halfway", "dim": 10, "samples_per_iter": 100,
      "noise_std": 1.0, "iterations": 10, "trials": 200, "root_seed": 42})");
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("replace") != std::string::npos);
    CHECK(msg.find("accumulate") != std::string::npos);
    CHECK(msg.find("replace_multiple") != std::string::npos);
  }
}

TEST_CASE("require_analytic_comparison") {
  ExperimentConfig c = parse_config(kMinimal);
  CHECK_NOTHROW(require_analytic_comparison(c));
  c.samples_per_iter = 11;  // T = d + 1
  try {
    require_analytic_comparison(c);
    FAIL("expected ConstraintError");
  } catch (const ConstraintError& e) {
    CHECK(e.key() == "samples_per_iter");
    CHECK(std::string(e.what()).find("T >= d + 2") != std::string::npos);
  }
}

TEST_CASE("to_json round-trips") {
  ExperimentConfig c = parse_config(kMinimal);
  c.covariance = FullCov{Matrix{{2.0, 0.5}, {0.5, 1.0}}};
  c.dim = 2;
  c.ridge_lambda = 0.25;
  c.execution_mode = ExecutionMode::Materialized;
  c.fresh_covariates = true;
  c.sigma_threshold = 3.5;
  CHECK(parse_config(to_json(c).dump()) == c);
  CHECK(to_json(parse_config(to_json(c).dump())) == to_json(c));

  const auto ng = parse_ngram_config(R"({"strategy": ["replace", "accumulate"], "root_seed": 5})");
  CHECK(ng.strategies.size() == 2);
  CHECK(ng.experiment.alphabet_size == 8);
  CHECK(parse_ngram_config(to_json(ng).dump()) == ng);
}

TEST_CASE("cli: exit codes") {
  const fs::path dir = scratch("exit");
  std::string err;

  const fs::path bad = write_config(dir, R"({"strategy": "replace", "dim": 10,
    "samples_per_iter": 11, "noise_std": 1.0, "iterations": 5, "trials": 10, "root_seed": 1})");
  CHECK(run({"analytic", "--config", bad.string(), "--out", (dir / "a").string()}, &err) == kExitConfig);
  CHECK(err.find("samples_per_iter") != std::string::npos);
  CHECK(run({"compare", "--config", bad.string(), "--out", (dir / "a").string()}) == kExitConfig);

  CHECK(run({"simulate"}) == kExitConfig);
  CHECK(run({"frobnicate", "--config", bad.string()}) == kExitConfig);
  CHECK(run({"simulate", "--config", (dir / "missing.json").string()}) == kExitConfig);

  const fs::path good = write_config(dir, kMinimal);
  CHECK(run({"compare", "--config", good.string(), "--out", (dir / "b").string()}) == kExitOk);
  CHECK(fs::exists(dir / "b" / "deviation.csv"));
  CHECK(fs::exists(dir / "b" / "analytic.csv"));
  CHECK(parse_config(slurp(dir / "b" / "manifest.json")) == parse_config(kMinimal));

  const fs::path singular = write_config(dir, R"({"strategy": "replace", "dim": 2,
    "samples_per_iter": 10, "noise_std": 1.0, "iterations": 2, "trials": 2, "root_seed": 1,
    "covariance": {"kind": "diagonal", "diagonal": [1.0, 1e-16]}})");
  CHECK(run({"simulate", "--config", singular.string(), "--out", (dir / "c").string()}) == kExitNumerical);
}

TEST_CASE("cli: output is independent of --threads and repeat runs") {
  const fs::path dir = scratch("determinism");
  const fs::path cfg = write_config(dir, kMinimal);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "one").string()}) == kExitOk);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "two").string()}) == kExitOk);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "four").string(),
               "--threads", "4"}) == kExitOk);
  const std::string a = slurp(dir / "one" / "curve.csv");
  CHECK(a.rfind("iteration,strategy,mean_test_error,stderr,analytic,trials\n", 0) == 0);
  CHECK(a.find('\r') == std::string::npos);
  CHECK(a == slurp(dir / "two" / "curve.csv"));
  CHECK(a == slurp(dir / "four" / "curve.csv"));
  CHECK(slurp(dir / "one" / "manifest.json") == slurp(dir / "four" / "manifest.json"));
}

TEST_CASE("cli: output directory from the environment") {
  const fs::path dir = scratch("env");
  const fs::path cfg = write_config(dir, kMinimal);
  ::setenv(kOutputDirEnv, (dir / "from_env").string().c_str(), 1);
  const int code = run({"analytic", "--config", cfg.string()});
  ::unsetenv(kOutputDirEnv);
  CHECK(code == kExitOk);
  CHECK(fs::exists(dir / "from_env" / "analytic.csv"));
  CHECK(fs::exists(dir / "from_env" / "manifest.json"));
}
