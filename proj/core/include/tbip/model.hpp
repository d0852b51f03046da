#pragma once

// The text-based ideal point model. Counts follow
//
//   y_dv ~ Poisson(w_{a_d} * sum_k theta_dk * beta_kv * exp(x_{a_d} * eta_kv))
//
// with theta, beta ~ Gamma(a, b) and eta, x ~ N(0, 1). Inference is mean-field
// variational with lognormal factors on theta and beta and Gaussian factors on
// eta and x, trained by reparameterization gradients and Adam.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbip/corpus.hpp"
#include "tbip/grad_engine.hpp"
#include "tbip/matrix.hpp"

namespace tbip::model {

struct PriorConfig {
  double a = 0.3;  // Gamma shape
  double b = 0.3;  // Gamma rate

  void validate() const;
};

// Block order of the variational state.
inline constexpr std::size_t kTheta = 0;
inline constexpr std::size_t kBeta = 1;
inline constexpr std::size_t kEta = 2;
inline constexpr std::size_t kX = 3;

struct FitResult {
  Matrix theta;  // D x K, lognormal means
  Matrix beta;   // K x V, lognormal means
  Matrix eta;    // K x V, Gaussian means
  std::vector<double> x;  // S
  Matrix eta_sigma;       // K x V variational scales of eta
  std::vector<double> weights;  // verbosity weight per author
  std::vector<std::string> author_names;
  std::vector<vi::TracePoint> elbo_trace;
  nlohmann::json config;
};

struct Initialization {
  Matrix theta;  // D x K, strictly positive
  Matrix beta;   // K x V, strictly positive
};

// lambda_v = w * sum_k theta_k * beta_kv * exp(x * eta_kv). Throws
// NumericError when a rate overflows; no clamping is applied.
std::vector<double> tbip_rate(std::span<const double> theta_d, const Matrix& beta,
                              const Matrix& eta, double x, double w);

// sum_v [y_v log lambda_v - lambda_v - log y_v!] over all V terms.
double log_likelihood_doc(const corpus::SparseCorpus& corpus, std::size_t doc,
                          std::span<const double> rate);

// Minibatch log-likelihood over documents with exact derivatives. The work is
// organized per author: exp(x_s * eta) is formed once per author in the batch
// and the zero-count part of each document collapses to sum_k theta_dk B_sk
// with B_sk = sum_v beta_kv exp(x_s eta_kv). With threads > 1 author groups are
// split into contiguous chunks whose partial sums are merged in chunk order,
// so results are reproducible for a fixed thread count.
class TbipLikelihood final : public vi::LikelihoodModel {
 public:
  TbipLikelihood(const corpus::SparseCorpus& corpus, std::vector<double> weights,
                 std::size_t num_topics, std::size_t threads = 1);

  std::size_t num_units() const override { return corpus_->num_docs(); }
  double log_likelihood(const vi::BlockArrays& samples, std::span<const std::size_t> batch,
                        vi::BlockArrays* d_samples) const override;

 private:
  struct Partial {
    double ll = 0.0;
    std::vector<double> d_beta;
    std::vector<double> d_eta;
  };
  void author_group(const vi::BlockArrays& samples, std::size_t author,
                    std::span<const std::size_t> docs, vi::BlockArrays* d_samples,
                    Partial& partial) const;

  const corpus::SparseCorpus* corpus_;
  std::vector<double> weights_;
  std::vector<double> log_factorials_;  // per document sum of log y!
  std::size_t num_topics_;
  std::size_t threads_;
};

// Locations of theta and beta are log(init); eta and x locations are drawn
// from N(0, 0.1^2); every scale starts at 0.1.
vi::VariationalState make_state(const Initialization& init, std::size_t num_authors,
                                const PriorConfig& priors, vi::Rng& rng);

// theta, beta as exp(mu + sigma^2 / 2); eta and x as their locations.
FitResult posterior_means(const vi::VariationalState& state, std::size_t num_topics);

// Applies the log-count transform when cfg.use_log_transform is set,
// pretrains Poisson factorization unless `init` is given, computes verbosity
// weights and runs stochastic gradient ascent for cfg.max_steps steps.
FitResult train_tbip(const corpus::SparseCorpus& corpus, const vi::TrainConfig& cfg,
                     const PriorConfig& priors, std::optional<Initialization> init = std::nullopt);

}  // namespace tbip::model
