#include "collapse/config.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace collapse {

using nlohmann::json;

namespace {

std::string type_name(const json& v) { return v.type_name(); }

// Type-checked access to one JSON object; remembers which keys were read so
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& doc, std::string prefix) : doc_(doc), prefix_(std::move(prefix)) {
    if (!doc_.is_object()) {
      throw SchemaError(prefix_, "expected a JSON object, got " + type_name(doc_));
    }
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!doc_.contains(key)) throw SchemaError(path(key), "missing required key");
    return doc_.at(key);
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw SchemaError(path(key), "expected a string, got " + type_name(v));
    return v.get<std::string>();
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      throw ConstraintError(path(key), "must be nonnegative, got " + v.dump());
    }
    throw SchemaError(path(key), "expected an integer, got " + type_name(v));
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw SchemaError(path(key), "expected a number, got " + type_name(v));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConstraintError(path(key), "must be finite");
    return x;
  }

  bool boolean(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_boolean()) throw SchemaError(path(key), "expected a boolean, got " + type_name(v));
    return v.get<bool>();
  }

  void reject_unknown() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.contains(item.key())) throw SchemaError(path(item.key()), "unknown key");
    }
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

 private:
  const json& doc_;
  std::string prefix_;
  std::set<std::string> seen_;
};

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
}

Vector number_array(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw SchemaError(key, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw SchemaError(key, "entry " + std::to_string(i) + " is not a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

CovarianceSpec parse_covariance(const json& doc, std::size_t dim) {
  ObjectReader r(doc, "covariance");
  const std::string kind = r.string("kind");
  CovarianceSpec spec;
  if (kind == "isotropic") {
    spec = IsotropicCov{dim};
  } else if (kind == "diagonal") {
    Vector diag = number_array(r.raw("diagonal"), r.path("diagonal"));
    if (static_cast<std::size_t>(diag.size()) != dim) {
      throw ConstraintError(r.path("diagonal"), "length must equal dim");
    }
    if ((diag.array() <= 0.0).any()) {
      throw ConstraintError(r.path("diagonal"), "entries must be strictly positive");
    }
    spec = DiagonalCov{std::move(diag)};
  } else if (kind == "full") {
    const json& rows = r.raw("matrix");
    const std::string key = r.path("matrix");
    if (!rows.is_array() || rows.size() != dim) {
      throw ConstraintError(key, "must be a dim x dim array of arrays");
    }
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      Vector row = number_array(rows[i], key);
      if (static_cast<std::size_t>(row.size()) != dim) {
        throw ConstraintError(key, "row " + std::to_string(i) + " must have dim entries");
      }
      m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    spec = FullCov{std::move(m)};
  } else {
    throw SchemaError(r.path("kind"), "unknown covariance kind '" + kind +
                                          "', allowed values {isotropic, diagonal, full}");
  }
  r.reject_unknown();
  return spec;
}

std::size_t positive(ObjectReader& r, const std::string& key) {
  const std::uint64_t v = r.unsigned_int(key);
  if (v == 0) throw ConstraintError(key, "must be >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

Strategy parse_strategy(std::string_view name, const std::string& key) {
  if (name == "replace") return Strategy::Replace;
  if (name == "accumulate") return Strategy::Accumulate;
  if (name == "replace_multiple") return Strategy::ReplaceMultiple;
  throw SchemaError(key, "unknown strategy '" + std::string(name) +
                             "', allowed values {replace, accumulate, replace_multiple}");
}

ExperimentConfig parse_config(std::string_view text) { return parse_config_document(parse_text(text)); }

ExperimentConfig parse_config_document(const json& doc) {
  ObjectReader r(doc, "");
  ExperimentConfig c;
  c.strategy = parse_strategy(r.string("strategy"), "strategy");
  c.dim = positive(r, "dim");
  c.samples_per_iter = positive(r, "samples_per_iter");
  c.noise_std = r.number("noise_std");
  c.iterations = positive(r, "iterations");
  c.trials = positive(r, "trials");
  c.root_seed = r.unsigned_int("root_seed");

  if (c.noise_std < 0.0) throw ConstraintError("noise_std", "must be nonnegative");
  if (c.samples_per_iter < c.dim) {
    throw ConstraintError("samples_per_iter", "must be >= dim (" + std::to_string(c.dim) +
                                                  "), got " + std::to_string(c.samples_per_iter));
  }

  c.covariance = r.has("covariance") ? parse_covariance(r.raw("covariance"), c.dim)
                                     : CovarianceSpec{IsotropicCov{c.dim}};
  if (r.has("execution_mode")) {
    const std::string mode = r.string("execution_mode");
    if (mode == "sufficient_stats") {
      c.execution_mode = ExecutionMode::SufficientStats;
    } else if (mode == "materialized") {
      c.execution_mode = ExecutionMode::Materialized;
    } else {
      throw SchemaError("execution_mode", "unknown mode '" + mode +
                                              "', allowed values {sufficient_stats, materialized}");
    }
  }
  if (r.has("fresh_covariates")) c.fresh_covariates = r.boolean("fresh_covariates");
  if (r.has("ridge_lambda") && !r.raw("ridge_lambda").is_null()) {
    c.ridge_lambda = r.number("ridge_lambda");
    if (!(*c.ridge_lambda > 0.0)) throw ConstraintError("ridge_lambda", "must be > 0");
  }
  if (r.has("sigma_threshold")) {
    c.sigma_threshold = r.number("sigma_threshold");
    if (!(c.sigma_threshold > 0.0)) throw ConstraintError("sigma_threshold", "must be > 0");
  }
  r.reject_unknown();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["strategy"] = std::string(to_string(c.strategy));
  doc["dim"] = c.dim;
  doc["samples_per_iter"] = c.samples_per_iter;
  doc["noise_std"] = c.noise_std;
  doc["iterations"] = c.iterations;
  doc["trials"] = c.trials;
  doc["root_seed"] = c.root_seed;
  json cov;
  if (std::holds_alternative<IsotropicCov>(c.covariance)) {
    cov["kind"] = "isotropic";
  } else if (const auto* d = std::get_if<DiagonalCov>(&c.covariance)) {
    cov["kind"] = "diagonal";
    cov["diagonal"] = std::vector<double>(d->diagonal.begin(), d->diagonal.end());
  } else {
    const auto& m = std::get<FullCov>(c.covariance).entries;
    cov["kind"] = "full";
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    cov["matrix"] = rows;
  }
  doc["covariance"] = cov;
  doc["execution_mode"] = std::string(to_string(c.execution_mode));
  doc["fresh_covariates"] = c.fresh_covariates;
  doc["ridge_lambda"] = c.ridge_lambda ? json(*c.ridge_lambda) : json(nullptr);
  doc["sigma_threshold"] = c.sigma_threshold;
  return doc;
}

void require_analytic_comparison(const ExperimentConfig& c) {
  if (c.samples_per_iter < c.dim + 2) {
    throw ConstraintError("samples_per_iter",
                          "the closed-form test error requires T >= d + 2 (T = " +
                              std::to_string(c.samples_per_iter) +
                              ", d = " + std::to_string(c.dim) + ")");
  }
  if (!std::holds_alternative<IsotropicCov>(c.covariance)) {
    throw ConstraintError("covariance", "the closed-form test error requires isotropic covariance");
  }
  if (c.fresh_covariates) {
    throw ConstraintError("fresh_covariates", "must be false for an analytic comparison");
  }
  if (c.ridge_lambda) {
    throw ConstraintError("ridge_lambda", "must be absent for an analytic comparison");
  }
}

NgramRunConfig parse_ngram_config(std::string_view text) {
  return parse_ngram_config_document(parse_text(text));
}

NgramRunConfig parse_ngram_config_document(const json& doc) {
  ObjectReader r(doc, "");
  NgramRunConfig c;
  const json& strategy = r.raw("strategy");
  if (strategy.is_string()) {
    c.strategies.push_back(parse_strategy(strategy.get<std::string>(), "strategy"));
  } else if (strategy.is_array() && !strategy.empty()) {
    for (const auto& s : strategy) {
      if (!s.is_string()) throw SchemaError("strategy", "list entries must be strings");
      c.strategies.push_back(parse_strategy(s.get<std::string>(), "strategy"));
    }
  } else {
    throw SchemaError("strategy", "expected a string or a non-empty list of strings");
  }
  NgramExperiment& e = c.experiment;
  e.strategy = c.strategies.front();
  e.root_seed = r.unsigned_int("root_seed");
  if (r.has("alphabet_size")) e.alphabet_size = positive(r, "alphabet_size");
  if (r.has("order")) {
    const auto order = r.unsigned_int("order");
    if (order != 1 && order != 2) throw ConstraintError("order", "must be 1 or 2");
    e.order = static_cast<int>(order);
  }
  if (r.has("tokens_per_iter")) e.tokens_per_iter = positive(r, "tokens_per_iter");
  if (r.has("iterations")) e.iterations = positive(r, "iterations");
  if (r.has("seeds")) e.seeds = positive(r, "seeds");
  if (r.has("alpha")) {
    e.alpha = r.number("alpha");
    if (!(e.alpha > 0.0)) throw ConstraintError("alpha", "must be > 0");
  }
  if (r.has("heldout_tokens")) e.heldout_tokens = positive(r, "heldout_tokens");
  if (r.has("source_concentration")) {
    e.source_concentration = r.number("source_concentration");
    if (!(e.source_concentration > 0.0)) {
      throw ConstraintError("source_concentration", "must be > 0");
    }
  }
  if (e.tokens_per_iter < static_cast<std::size_t>(e.order)) {
    throw ConstraintError("tokens_per_iter", "must be >= order");
  }
  r.reject_unknown();
  return c;
}

json to_json(const NgramRunConfig& c) {
  json doc;
  json strategies = json::array();
  for (Strategy s : c.strategies) strategies.push_back(std::string(to_string(s)));
  doc["strategy"] = strategies;
  const NgramExperiment& e = c.experiment;
  doc["root_seed"] = e.root_seed;
  doc["alphabet_size"] = e.alphabet_size;
  doc["order"] = e.order;
  doc["tokens_per_iter"] = e.tokens_per_iter;
  doc["iterations"] = e.iterations;
  doc["seeds"] = e.seeds;
  doc["alpha"] = e.alpha;
  doc["heldout_tokens"] = e.heldout_tokens;
  doc["source_concentration"] = e.source_concentration;
  return doc;
}

}  // namespace collapse
