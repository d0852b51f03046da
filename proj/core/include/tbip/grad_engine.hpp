#pragma once

// Reparameterized Monte Carlo ELBO estimation for mean-field Gaussian and
// lognormal families, exact gradients of the single-draw estimate, Adam, and
// the stochastic-gradient training loop shared by every model in the library.
//
// A variational state is a list of named latent blocks. Each block is a flat
// array of independent scalars with one family (Gaussian or lognormal), one
// prior, and unconstrained parameters (mu, log_sigma). A model only supplies
// the log-likelihood of a batch of its units and the derivative of that
// log-likelihood with respect to the sampled latents; the engine adds the
// prior and entropy terms and applies the chain rule through the
// reparameterization.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tbip::vi {

using Rng = std::mt19937_64;

enum class FamilyKind { gaussian, lognormal };

struct Family {
  FamilyKind kind = FamilyKind::gaussian;
  std::vector<double> mu;
  std::vector<double> log_sigma;

  std::size_t size() const noexcept { return mu.size(); }
  double sigma(std::size_t i) const;
  // Gaussian: mu. Lognormal: exp(mu + sigma^2 / 2).
  std::vector<double> mean() const;
};

Family gaussian_family(std::vector<double> mu, std::vector<double> log_sigma);
Family lognormal_family(std::vector<double> mu, std::vector<double> log_sigma);

class Prior {
 public:
  enum class Kind { normal, gamma };

  static Prior normal(double location, double scale);
  static Prior gamma(double shape, double rate);

  Kind kind() const noexcept { return kind_; }
  // Throws NumericError for a nonpositive argument under a gamma prior.
  double log_density(double x) const;
  double d_log_density(double x) const;

 private:
  Prior(Kind kind, double p1, double p2);
  Kind kind_;
  double p1_;  // location or shape
  double p2_;  // scale or rate
  double log_norm_;
};

struct LatentBlock {
  std::string name;
  Family family;
  Prior prior;
};

// Per-block arrays (noise, samples, derivatives) laid out like the state.
using BlockArrays = std::vector<std::vector<double>>;

struct VariationalState {
  std::vector<LatentBlock> blocks;

  std::size_t index_of(std::string_view name) const;
  LatentBlock& block(std::string_view name) { return blocks[index_of(name)]; }
  const LatentBlock& block(std::string_view name) const { return blocks[index_of(name)]; }
  std::size_t num_parameters() const;
  BlockArrays zeros() const;
};

struct NoiseDraw {
  BlockArrays z;
};

NoiseDraw draw_noise(const VariationalState& state, Rng& rng);

// Gaussian: z * sigma + mu. Lognormal: exp(z * sigma + mu).
std::vector<double> reparameterize(const Family& family, std::span<const double> z);
BlockArrays reparameterize(const VariationalState& state, const NoiseDraw& noise);

struct PriorAndEntropy {
  double log_prior = 0.0;
  double log_q = 0.0;
};

// log p and log q of a full sample; lognormal log q includes the -log(x)
// Jacobian term.
PriorAndEntropy entropy_and_prior(const VariationalState& state, const BlockArrays& samples);

class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;

  // Number of exchangeable units (documents, bills, authors) the data term
  // sums over; minibatches are subsets of 0..num_units()-1.
  virtual std::size_t num_units() const = 0;

  // Log-likelihood of the units in `batch` given latent samples. When
  // `d_samples` is non-null it is zero-initialized with the layout of
  // `samples` and must receive the derivative of the returned value.
  virtual double log_likelihood(const BlockArrays& samples,
                                std::span<const std::size_t> batch,
                                BlockArrays* d_samples) const = 0;
};

struct Gradient {
  BlockArrays d_mu;
  BlockArrays d_log_sigma;
};

struct ElboTerms {
  double log_prior = 0.0;
  double log_likelihood = 0.0;  // already scaled by N / |batch|
  double log_q = 0.0;
  double elbo = 0.0;
};

// log p(sample) + (N / |batch|) * sum_{d in batch} log p(y_d | sample) - log q(sample)
// for the single draw z. Fills `grad` with the exact derivative of that value
// with respect to every mu and log_sigma when non-null.
ElboTerms evaluate(const VariationalState& state, std::span<const std::size_t> batch,
                   const LikelihoodModel& model, double num_units, const NoiseDraw& noise,
                   Gradient* grad);

double elbo_estimate(const VariationalState& state, std::span<const std::size_t> batch,
                     const LikelihoodModel& model, double num_units, const NoiseDraw& noise);

Gradient gradient(const VariationalState& state, std::span<const std::size_t> batch,
                  const LikelihoodModel& model, double num_units, const NoiseDraw& noise);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(std::size_t size, AdamConfig cfg)
      : config(cfg), m(size, 0.0), v(size, 0.0) {}
};

// Bias-corrected Adam ascent step: params += lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& adam, std::span<double> params, std::span<const double> grads);

// Adam over every mu and log_sigma array of a variational state.
class Optimizer {
 public:
  Optimizer(const VariationalState& state, AdamConfig cfg);
  void step(VariationalState& state, const Gradient& grad);

 private:
  std::vector<AdamState> mu_;
  std::vector<AdamState> log_sigma_;
};

struct TrainConfig {
  std::size_t num_topics = 50;
  std::size_t batch_size = 512;
  std::size_t max_steps = 50000;
  std::uint64_t seed = 0;
  AdamConfig adam;
  std::size_t mc_samples = 1;
  bool use_log_transform = true;
  std::size_t elbo_report_interval = 100;
  std::size_t threads = 1;
  // Coordinate-ascent sweeps for Poisson factorization pretraining.
  std::size_t pretrain_sweeps = 200;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct TracePoint {
  std::size_t step = 0;
  double elbo = 0.0;
  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

// Draws a batch of min(batch_size, N) distinct units, sorted ascending.
class BatchSampler {
 public:
  BatchSampler(std::size_t num_units, std::size_t batch_size);
  std::span<const std::size_t> next(Rng& rng);

 private:
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> batch_;
  std::size_t batch_size_;
};

// Stochastic gradient ascent on the ELBO: per step, sample a batch, draw
// `mc_samples` noise draws, average their gradients and take an Adam step.
// The single-step estimate is recorded every `elbo_report_interval` steps and
// at the last step. Throws NonFiniteElbo with the failing step index.
std::vector<TracePoint> fit(VariationalState& state, const LikelihoodModel& model,
                            const TrainConfig& cfg, Rng& rng);

}  // namespace tbip::vi
