#include "collapse/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "collapse/analytics.hpp"
#include "collapse/config.hpp"
#include "collapse/csv.hpp"
#include "collapse/montecarlo.hpp"
#include "collapse/ngram.hpp"

namespace collapse {

namespace fs = std::filesystem;

namespace {

// Relative tolerance for lemma-check (trace and entries, the latter measured
// against the largest closed-form entry).
constexpr double kLemmaTolerance = 0.02;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("--config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) throw std::runtime_error("cannot write " + path.string());
  outf << content;
}

struct Invocation {
  std::string command;
  fs::path config;
  fs::path out_dir;
  std::size_t threads = 1;
};

void write_manifest(const Invocation& inv, const nlohmann::json& resolved) {
  write_file(inv.out_dir / "manifest.json", resolved.dump(2) + "\n");
}

int simulate(const Invocation& inv, std::ostream& out, bool compare) {
  const ExperimentConfig config = parse_config(read_file(inv.config));
  if (compare) require_analytic_comparison(config);
  fs::create_directories(inv.out_dir);
  write_manifest(inv, to_json(config));

  const CurveAggregate agg = run_experiment(config, inv.threads);
  write_file(inv.out_dir / "curve.csv", curve_csv(agg));
  out << "wrote " << (inv.out_dir / "curve.csv").string() << " (" << agg.trials << " trials, "
      << agg.per_iteration_mean.size() << " iterations)\n";
  if (!compare) return kExitOk;

  const AnalyticCurve& curve = *agg.analytic;
  const DeviationReport report = compare_to_analytic(agg, curve, config.sigma_threshold);
  write_file(inv.out_dir / "analytic.csv", analytic_csv(curve));
  write_file(inv.out_dir / "deviation.csv", deviation_csv(agg, curve, report));
  out << "max deviation " << format_real(report.max_sigma) << " standard errors (threshold "
      << format_real(report.threshold) << "): " << (report.pass ? "PASS" : "FAIL") << "\n";
  return report.pass ? kExitOk : kExitComparison;
}

int analytic(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = parse_config(read_file(inv.config));
  require_analytic_comparison(config);
  fs::create_directories(inv.out_dir);
  write_manifest(inv, to_json(config));
  const AnalyticCurve curve = analytic_curve(config.strategy, config.noise_std, config.dim,
                                             config.samples_per_iter, config.iterations);
  write_file(inv.out_dir / "analytic.csv", analytic_csv(curve));
  out << "wrote " << (inv.out_dir / "analytic.csv").string() << "\n";
  return kExitOk;
}

int lemma_check(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = parse_config(read_file(inv.config));
  if (config.samples_per_iter < config.dim + 2) {
    throw ConstraintError("samples_per_iter", "the inverse-Gram identity requires T >= d + 2");
  }
  fs::create_directories(inv.out_dir);
  write_manifest(inv, to_json(config));

  const CovarianceMatrix cov = make_covariance(config.covariance);
  const RngStream rng(config.root_seed, 0);
  const Lemma1Estimate est =
      lemma1_mc_estimate(config.dim, config.samples_per_iter, cov, config.trials, rng, inv.threads);
  const Matrix expected = lemma1_expected_inverse(cov, config.samples_per_iter);
  write_file(inv.out_dir / "lemma1.csv", lemma1_csv(est, expected));

  const double trace_rel = std::abs(est.trace_mean - expected.trace()) / expected.trace();
  const double entry_abs = (est.mean_inverse - expected).cwiseAbs().maxCoeff();
  const double entry_rel = entry_abs / expected.cwiseAbs().maxCoeff();
  const bool pass = trace_rel <= kLemmaTolerance && entry_rel <= kLemmaTolerance;
  out << "trace " << format_real(est.trace_mean) << " vs " << format_real(expected.trace())
      << " (rel error " << format_real(trace_rel) << "), max entry error " << format_real(entry_rel)
      << " relative: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitComparison;
}

int ngram(const Invocation& inv, std::ostream& out) {
  const NgramRunConfig config = parse_ngram_config(read_file(inv.config));
  fs::create_directories(inv.out_dir);
  write_manifest(inv, to_json(config));
  std::vector<CurveAggregate> runs;
  for (Strategy s : config.strategies) {
    NgramExperiment e = config.experiment;
    e.strategy = s;
    runs.push_back(run_ngram_experiment(e, inv.threads));
  }
  write_file(inv.out_dir / "ngram.csv", ngram_csv(runs));
  out << "wrote " << (inv.out_dir / "ngram.csv").string() << "\n";
  return kExitOk;
}

fs::path default_out_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-data feedback loop laboratory", "collapse-lab"};
  app.require_subcommand(1);
  Invocation inv;
  std::string config_path;
  std::string out_path;
  const std::pair<const char*, const char*> subcommands[] = {
      {"simulate", "Monte Carlo test-error curve (curve.csv)"},
      {"analytic", "closed-form curve (analytic.csv)"},
      {"compare", "simulate and check every iteration against the closed form"},
      {"lemma-check", "Monte Carlo check of the expected inverse Gram matrix"},
      {"ngram", "held-out cross-entropy of the bigram feedback loop"},
  };
  for (const auto& [name, description] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_path, "output directory");
    sub->add_option("--threads", inv.threads, "worker threads (does not change results)")
        ->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  inv.command = app.get_subcommands().front()->get_name();
  inv.config = config_path;
  inv.out_dir = out_path.empty() ? default_out_dir() : fs::path(out_path);

  try {
    if (inv.command == "simulate") return simulate(inv, out, false);
    if (inv.command == "compare") return simulate(inv, out, true);
    if (inv.command == "analytic") return analytic(inv, out);
    if (inv.command == "lemma-check") return lemma_check(inv, out);
    return ngram(inv, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace collapse
