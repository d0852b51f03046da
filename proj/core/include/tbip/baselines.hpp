#pragma once

// Text-scaling baselines.
//
// Wordfish: counts pooled per author follow
//   y_sv ~ Poisson(exp(alpha_s + psi_v + b_v * x_s))
// with standard normal priors and Gaussian variational families.
//
// Wordshoal: an independent wordfish per debate gives a position for every
// author who spoke in it; a one-dimensional factor model
//   p_sj ~ N(a_j + b_j * x_s, sigma^2)
// over those positions yields one ideal point per author.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbip/corpus.hpp"
#include "tbip/fit_io.hpp"
#include "tbip/grad_engine.hpp"
#include "tbip/matrix.hpp"

namespace tbip::baselines {

// Author x term count matrix with the documents of each author pooled.
Matrix aggregate_by_author(const corpus::SparseCorpus& corpus);

double wordfish_rate(double alpha, double psi, double b, double x);

inline constexpr std::size_t kAlpha = 0;
inline constexpr std::size_t kPsi = 1;
inline constexpr std::size_t kB = 2;
inline constexpr std::size_t kX = 3;

// Poisson log-likelihood over rows of a dense count matrix; the units are authors.
class WordfishLikelihood final : public vi::LikelihoodModel {
 public:
  explicit WordfishLikelihood(const Matrix& counts);
  std::size_t num_units() const override { return counts_->rows(); }
  double log_likelihood(const vi::BlockArrays& samples, std::span<const std::size_t> batch,
                        vi::BlockArrays* d_samples) const override;

 private:
  const Matrix* counts_;
  std::vector<double> log_factorials_;  // per row
};

struct WordfishFit {
  std::vector<double> x;      // S
  std::vector<double> alpha;  // S
  std::vector<double> psi;    // V
  std::vector<double> b;      // V
  std::vector<vi::TracePoint> elbo_trace;
  std::vector<std::string> author_names;
  nlohmann::json config;
};

// Locations start at the independence fit alpha_s + psi_v = log(row_s col_v / total);
// b and x locations at N(0, 0.1^2). Gradients are always full batch.
WordfishFit train_wordfish(const Matrix& counts, std::vector<std::string> author_names,
                           const vi::TrainConfig& cfg);
WordfishFit train_wordfish(const corpus::SparseCorpus& corpus, const vi::TrainConfig& cfg);

struct DebateLabeledCorpus {
  corpus::SparseCorpus corpus;
  std::vector<std::string> debate_of;  // one label per document
};

struct FactorFit {
  std::vector<double> x;  // S
  std::vector<double> a;  // J
  std::vector<double> b;  // J
  double sigma2 = 1.0;
  std::vector<vi::TracePoint> elbo_trace;
};

// Fits the factor model to an S x J matrix of positions in which NaN marks an
// author absent from a debate. Each column is first standardized over its
// observed entries, so the fit is invariant to positive affine maps of a
// column. After stochastic gradient training q(x) receives one exact
// coordinate-ascent update given q(a), q(b) and q(sigma^2).
FactorFit fit_factor_model(const Matrix& positions, const vi::TrainConfig& cfg);

struct WordshoalFit {
  std::vector<double> x;  // S
  std::vector<std::string> debates;  // sorted labels, column order of `positions`
  Matrix positions;                  // S x J stage-one positions, NaN when absent
  FactorFit factor;
  std::vector<std::string> author_names;
  nlohmann::json config;
};

// Every debate needs >= 2 authors and >= 2 terms with nonzero counts;
// otherwise DebateTooSmall lists all offending labels. Each debate's wordfish
// is seeded from cfg.seed and its label, so results do not depend on the
// order debates are processed in; cfg.threads debates are fitted concurrently.
WordshoalFit train_wordshoal(const DebateLabeledCorpus& data, const vi::TrainConfig& cfg);

io::FitBundle to_bundle(const WordfishFit& fit);
io::FitBundle to_bundle(const WordshoalFit& fit);

}  // namespace tbip::baselines
