#include "collapse/ngram.hpp"

#include <cmath>
#include <random>
#include <string>

#include "collapse/parallel.hpp"

namespace collapse {

namespace {

constexpr double kRowTolerance = 1e-12;

void require_order(int order) {
  if (order != 1 && order != 2) {
    throw UnsupportedOrder("n-gram order must be 1 or 2, got " + std::to_string(order));
  }
}

Token draw(const double* row, std::size_t k, double u) {
  double cumulative = 0.0;
  for (std::size_t t = 0; t + 1 < k; ++t) {
    cumulative += row[t];
    if (u < cumulative) return static_cast<Token>(t);
  }
  return static_cast<Token>(k - 1);
}

}  // namespace

Corpus::Corpus(std::size_t alphabet_size, std::vector<Token> tokens)
    : alphabet_size_(alphabet_size), tokens_(std::move(tokens)) {
  if (alphabet_size_ == 0) throw InvalidArgument("alphabet size must be >= 1");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] >= alphabet_size_) {
      throw InvalidArgument("token " + std::to_string(tokens_[i]) + " at position " +
                            std::to_string(i) + " is outside the alphabet");
    }
  }
}

NgramModel::NgramModel(int order, Matrix probs, double smoothing_alpha, std::optional<Vector> initial)
    : order_(order), probs_(std::move(probs)), alpha_(smoothing_alpha) {
  require_order(order);
  const Eigen::Index k = probs_.cols();
  if (k == 0) throw InvalidArgument("model alphabet is empty");
  const Eigen::Index expected_rows = order == 2 ? k : 1;
  if (probs_.rows() != expected_rows) {
    throw DimensionMismatch("order-" + std::to_string(order) + " model needs " +
                            std::to_string(expected_rows) + " rows, got " +
                            std::to_string(probs_.rows()));
  }
  if (!(alpha_ >= 0.0)) throw InvalidArgument("smoothing alpha must be nonnegative");
  if ((probs_.array() < 0.0).any() || !probs_.allFinite()) {
    throw InvalidArgument("probabilities must be finite and nonnegative");
  }
  for (Eigen::Index r = 0; r < probs_.rows(); ++r) {
    if (std::abs(probs_.row(r).sum() - 1.0) > kRowTolerance) {
      throw InvalidArgument("row " + std::to_string(r) + " does not sum to 1");
    }
  }
  if (initial) {
    initial_ = std::move(*initial);
  } else if (order == 1) {
    initial_ = probs_.row(0).transpose();
  } else {
    initial_ = stationary_distribution(probs_);
  }
  if (initial_.size() != k || std::abs(initial_.sum() - 1.0) > 1e-9 ||
      (initial_.array() < 0.0).any()) {
    throw InvalidArgument("initial distribution must be a probability vector of length k");
  }
}

double NgramModel::prob(Token context, Token token) const {
  return order_ == 2 ? probs_(context, token) : probs_(0, token);
}

NgramCounts::NgramCounts(int order_in, std::size_t alphabet_size) : order(order_in) {
  require_order(order_in);
  const auto k = static_cast<Eigen::Index>(alphabet_size);
  transitions = Matrix::Zero(order_in == 2 ? k : 1, k);
  unigrams = Vector::Zero(k);
}

void NgramCounts::add(const Corpus& corpus) {
  if (corpus.alphabet_size() != alphabet_size()) {
    throw DimensionMismatch("corpus alphabet does not match counts");
  }
  const auto& tok = corpus.tokens();
  for (std::size_t i = 0; i < tok.size(); ++i) {
    unigrams[tok[i]] += 1.0;
    if (order == 1) {
      transitions(0, tok[i]) += 1.0;
    } else if (i > 0) {
      transitions(tok[i - 1], tok[i]) += 1.0;
    }
  }
}

NgramCounts& NgramCounts::operator+=(const NgramCounts& other) {
  if (other.order != order || other.alphabet_size() != alphabet_size()) {
    throw DimensionMismatch("cannot add counts of different shape");
  }
  transitions += other.transitions;
  unigrams += other.unigrams;
  return *this;
}

NgramCounts count_ngrams(const Corpus& corpus, int order) {
  NgramCounts counts(order, corpus.alphabet_size());
  counts.add(corpus);
  return counts;
}

NgramCounts expected_counts(const NgramModel& model, double n_tokens) {
  NgramCounts counts(model.order(), model.alphabet_size());
  counts.unigrams = n_tokens * model.initial();
  if (model.order() == 1) {
    counts.transitions = n_tokens * model.probs();
  } else {
    counts.transitions = n_tokens * (model.initial().asDiagonal() * model.probs());
  }
  return counts;
}

NgramModel fit_from_counts(const NgramCounts& counts, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("smoothing alpha must be nonnegative");
  const Eigen::Index k = counts.transitions.cols();
  const double kd = static_cast<double>(k);
  Matrix probs(counts.transitions.rows(), k);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double total = counts.transitions.row(r).sum() + alpha * kd;
    if (total > 0.0) {
      probs.row(r) = (counts.transitions.row(r).array() + alpha) / total;
    } else {
      probs.row(r).setConstant(1.0 / kd);
    }
  }
  Vector initial(k);
  const double unigram_total = counts.unigrams.sum() + alpha * kd;
  if (unigram_total > 0.0) {
    initial = (counts.unigrams.array() + alpha) / unigram_total;
  } else {
    initial.setConstant(1.0 / kd);
  }
  return NgramModel(counts.order, std::move(probs), alpha, std::move(initial));
}

NgramModel fit_categorical(const Corpus& corpus, int order, double alpha) {
  require_order(order);
  if (corpus.size() < static_cast<std::size_t>(order)) {
    throw EmptyCorpus("corpus has " + std::to_string(corpus.size()) + " tokens, order " +
                      std::to_string(order) + " needs at least " + std::to_string(order));
  }
  return fit_from_counts(count_ngrams(corpus, order), alpha);
}

Corpus sample_corpus(const NgramModel& model, std::size_t n_tokens, RngStream& rng) {
  if (n_tokens == 0) throw InvalidArgument("n_tokens must be >= 1");
  const std::size_t k = model.alphabet_size();
  // Row-major copy so each context row is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = model.probs();
  std::vector<Token> tokens(n_tokens);
  tokens[0] = draw(model.initial().data(), k, rng.uniform());
  for (std::size_t i = 1; i < n_tokens; ++i) {
    const Eigen::Index context = model.order() == 2 ? tokens[i - 1] : 0;
    tokens[i] = draw(rows.row(context).data(), k, rng.uniform());
  }
  return Corpus(k, std::move(tokens));
}

double cross_entropy(const NgramModel& model, const Corpus& corpus) {
  if (corpus.size() == 0) throw EmptyCorpus("cannot score an empty corpus");
  if (corpus.alphabet_size() != model.alphabet_size()) {
    throw DimensionMismatch("corpus alphabet does not match model");
  }
  const auto& tok = corpus.tokens();
  double total = 0.0;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    const double p = i == 0 ? model.initial()[tok[0]] : model.prob(tok[i - 1], tok[i]);
    if (!(p > 0.0)) {
      throw ZeroProbabilityEvent("token " + std::to_string(tok[i]) + " at position " +
                                 std::to_string(i) + " has zero probability");
    }
    total -= std::log(p);
  }
  return total / static_cast<double>(tok.size());
}

Vector stationary_distribution(const Matrix& transition) {
  const Eigen::Index k = transition.rows();
  Matrix system(k + 1, k);
  system.topRows(k) = transition.transpose() - Matrix::Identity(k, k);
  system.row(k).setOnes();
  Vector rhs = Vector::Zero(k + 1);
  rhs[k] = 1.0;
  Vector pi = system.colPivHouseholderQr().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

NgramModel random_source_model(std::size_t alphabet_size, int order, double concentration,
                               RngStream& rng) {
  require_order(order);
  if (alphabet_size == 0) throw InvalidArgument("alphabet size must be >= 1");
  if (!(concentration > 0.0)) throw InvalidArgument("concentration must be positive");
  const auto k = static_cast<Eigen::Index>(alphabet_size);
  Matrix probs(order == 2 ? k : 1, k);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::mt19937_64 engine(rng.next_u64());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index t = 0; t < k; ++t) {
      // A row of all-zero gamma draws is astronomically unlikely; floor it anyway.
      probs(r, t) = std::max(gamma(engine), 1e-300);
      sum += probs(r, t);
    }
    probs.row(r) /= sum;
  }
  return NgramModel(order, std::move(probs), 0.0);
}

std::vector<double> run_ngram_loop(const NgramModel& true_model, Strategy strategy,
                                   std::size_t tokens_per_iter, std::size_t n, double alpha,
                                   const Corpus& heldout, RngStream& rng) {
  if (!(alpha > 0.0)) throw InvalidArgument("the loop requires alpha > 0");
  if (n == 0) throw InvalidArgument("n must be >= 1");
  if (tokens_per_iter < static_cast<std::size_t>(true_model.order())) {
    throw EmptyCorpus("tokens_per_iter is below the model order");
  }
  const int order = true_model.order();
  std::vector<double> ce;
  ce.reserve(n);

  NgramCounts counts = count_ngrams(sample_corpus(true_model, tokens_per_iter, rng), order);
  NgramModel model = fit_from_counts(counts, alpha);
  ce.push_back(cross_entropy(model, heldout));

  for (std::size_t i = 2; i <= n; ++i) {
    const std::size_t draw_tokens =
        strategy == Strategy::ReplaceMultiple ? i * tokens_per_iter : tokens_per_iter;
    NgramCounts fresh = count_ngrams(sample_corpus(model, draw_tokens, rng), order);
    if (strategy == Strategy::Accumulate) {
      counts += fresh;
    } else {
      counts = std::move(fresh);
    }
    model = fit_from_counts(counts, alpha);
    ce.push_back(cross_entropy(model, heldout));
  }
  return ce;
}

NgramSetup make_ngram_setup(const NgramExperiment& e) {
  RngStream base(e.root_seed, ~std::uint64_t{0});
  RngStream source_rng = base.split(0);
  RngStream heldout_rng = base.split(1);
  NgramModel source = random_source_model(e.alphabet_size, e.order, e.source_concentration, source_rng);
  Corpus heldout = sample_corpus(source, e.heldout_tokens, heldout_rng);
  return NgramSetup{std::move(source), std::move(heldout)};
}

CurveAggregate run_ngram_experiment(const NgramExperiment& e, std::size_t threads) {
  if (e.seeds == 0) throw InvalidArgument("seeds must be >= 1");
  const NgramSetup setup = make_ngram_setup(e);
  std::vector<TrialResult> runs(e.seeds);
  parallel_for(e.seeds, threads, [&](std::size_t s) {
    RngStream rng(e.root_seed, s);
    runs[s].strategy = e.strategy;
    runs[s].per_iteration_error = run_ngram_loop(setup.source, e.strategy, e.tokens_per_iter,
                                                 e.iterations, e.alpha, setup.heldout, rng);
  });
  return aggregate(runs);
}

}  // namespace collapse
