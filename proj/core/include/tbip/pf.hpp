#pragma once

// Gamma-Poisson matrix factorization fitted by coordinate-ascent variational
// inference (auxiliary multinomial allocation of each count to topics). Used
// to initialize the text-based ideal point model.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tbip/corpus.hpp"
#include "tbip/matrix.hpp"

namespace tbip::pf {

struct GammaFamily {
  Matrix shape;
  Matrix rate;

  Matrix mean() const;      // shape / rate
  Matrix mean_log() const;  // digamma(shape) - log(rate)
};

struct PFState {
  GammaFamily q_theta;  // D x K
  GammaFamily q_beta;   // K x V
  double a = 0.3;
  double b = 0.3;

  std::size_t num_topics() const noexcept { return q_theta.shape.cols(); }
};

// Seeded initialization: shape = a + U(0,1), rate = b + U(0,1).
PFState init_state(std::size_t num_docs, std::size_t num_terms, std::size_t num_topics,
                   double a, double b, std::uint64_t seed);

// Allocation probabilities phi_k ∝ exp(E[log theta_dk] + E[log beta_kv]).
std::vector<double> allocation(const Matrix& mean_log_theta, const Matrix& mean_log_beta,
                               std::size_t doc, std::size_t term);

// One sweep: update q_theta given q_beta, then q_beta given the new q_theta.
PFState cavi_step(const PFState& state, const corpus::SparseCorpus& corpus);

// ELBO of the augmented model with the allocations at their optimum.
double pf_elbo(const PFState& state, const corpus::SparseCorpus& corpus);

// lambda_v = sum_k theta_k beta_kv.
std::vector<double> rate(std::span<const double> theta_d, const Matrix& beta);

struct PretrainResult {
  Matrix theta;  // D x K posterior means
  Matrix beta;   // K x V posterior means
  std::vector<double> elbo_trace;
  std::size_t sweeps = 0;
};

// Runs sweeps until the relative ELBO change drops below `tolerance` or the
// sweep budget is exhausted.
PretrainResult pretrain(const corpus::SparseCorpus& corpus, std::size_t num_topics, double a,
                        double b, std::size_t max_sweeps, std::uint64_t seed,
                        double tolerance = 1e-6);

}  // namespace tbip::pf
