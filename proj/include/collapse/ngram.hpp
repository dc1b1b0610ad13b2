#pragma once

#include <cstdint>
#include <vector>

#include "collapse/experiment.hpp"
#include "collapse/model_core.hpp"
#include "collapse/montecarlo.hpp"
#include "collapse/rng.hpp"

namespace collapse {

using Token = std::uint32_t;

class Corpus {
 public:
  Corpus(std::size_t alphabet_size, std::vector<Token> tokens);

  std::size_t alphabet_size() const { return alphabet_size_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::size_t alphabet_size_;
  std::vector<Token> tokens_;
};

// Unigram (order 1) or bigram (order 2) categorical model. probs() has one row
// per context (k rows for bigrams, a single row for unigrams); initial() is the
// distribution of the first token of a sequence.
class NgramModel {
 public:
  // Validates shape and row-stochasticity (1e-12). For bigrams with no explicit
  // initial distribution, the stationary distribution of the chain is used.
  NgramModel(int order, Matrix probs, double smoothing_alpha, std::optional<Vector> initial = {});

  int order() const { return order_; }
  std::size_t alphabet_size() const { return static_cast<std::size_t>(probs_.cols()); }
  const Matrix& probs() const { return probs_; }
  const Vector& initial() const { return initial_; }
  double smoothing_alpha() const { return alpha_; }

  double prob(Token context, Token token) const;

 private:
  int order_;
  Matrix probs_;
  Vector initial_;
  double alpha_;
};

// Raw (possibly fractional) transition and unigram counts. Adding two corpora
// counts them as separate documents: no transition joins their boundary.
struct NgramCounts {
  int order = 2;
  Matrix transitions;  // contexts x k
  Vector unigrams;     // k

  NgramCounts(int order, std::size_t alphabet_size);
  void add(const Corpus& corpus);
  NgramCounts& operator+=(const NgramCounts& other);
  std::size_t alphabet_size() const { return static_cast<std::size_t>(unigrams.size()); }
};

NgramCounts count_ngrams(const Corpus& corpus, int order);

// Counts an infinitely long sample would have, scaled to n_tokens: n * pi_c * P[c][t].
NgramCounts expected_counts(const NgramModel& model, double n_tokens);

// probs[c][t] = (count(c, t) + alpha) / (count(c, .) + alpha k). A context
// that never occurs with alpha == 0 gets the uniform row.
NgramModel fit_from_counts(const NgramCounts& counts, double alpha);

// Throws UnsupportedOrder or EmptyCorpus (fewer than `order` tokens).
NgramModel fit_categorical(const Corpus& corpus, int order, double alpha);

// Ancestral sampling at temperature 1.
Corpus sample_corpus(const NgramModel& model, std::size_t n_tokens, RngStream& rng);

// -(1/N) sum log p(token | context) in nats; the first token is scored under
// initial(). Throws ZeroProbabilityEvent on an unsupported event.
double cross_entropy(const NgramModel& model, const Corpus& corpus);

// Stationary distribution of a row-stochastic matrix (least-squares solve of
// pi^T (P - I) = 0, sum pi = 1).
Vector stationary_distribution(const Matrix& transition);

// Source model with Dirichlet(concentration) rows and no smoothing.
NgramModel random_source_model(std::size_t alphabet_size, int order, double concentration,
                               RngStream& rng);

// One self-consuming run. Iteration 1 fits a corpus drawn from the source;
// later iterations sample from the previous fit and replace or concatenate per
// strategy (Replace-Multiple draws i * tokens_per_iter tokens at iteration i).
// Returns the held-out cross-entropy after each fit.
std::vector<double> run_ngram_loop(const NgramModel& true_model, Strategy strategy,
                                   std::size_t tokens_per_iter, std::size_t n, double alpha,
                                   const Corpus& heldout, RngStream& rng);

struct NgramExperiment {
  Strategy strategy = Strategy::Replace;
  std::size_t alphabet_size = 8;
  int order = 2;
  std::size_t tokens_per_iter = 500;
  std::size_t iterations = 20;
  std::size_t seeds = 200;
  double alpha = 0.1;
  std::size_t heldout_tokens = 20000;
  double source_concentration = 1.0;
  std::uint64_t root_seed = 0;

  bool operator==(const NgramExperiment&) const = default;
};

// Source model and held-out corpus for an experiment. Both depend only on
// root_seed, alphabet_size, order and concentration, so runs that differ only
// in strategy share them.
struct NgramSetup {
  NgramModel source;
  Corpus heldout;
};
NgramSetup make_ngram_setup(const NgramExperiment& experiment);

// Seed s runs on stream (root_seed, s); aggregation is the same fixed tree used
// for regression trials.
CurveAggregate run_ngram_experiment(const NgramExperiment& experiment, std::size_t threads = 1);

}  // namespace collapse
