#include "tbip/pf.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "tbip/error.hpp"

namespace tbip::pf {

namespace {

using boost::math::digamma;

// E_q[log p(x)] - E_q[log q(x)] for prior Gamma(a, b) and q = Gamma(shape, rate).
double gamma_kl_term(double a, double b, double shape, double rate) {
  const double e_log = digamma(shape) - std::log(rate);
  const double e_x = shape / rate;
  const double log_p = a * std::log(b) - std::lgamma(a) + (a - 1.0) * e_log - b * e_x;
  const double log_q = shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * e_log - shape;
  return log_p - log_q;
}

void check_dims(const PFState& s, const corpus::SparseCorpus& c) {
  if (s.q_theta.shape.rows() != c.num_docs() || s.q_beta.shape.cols() != c.num_terms() ||
      s.q_theta.shape.cols() != s.q_beta.shape.rows()) {
    throw ValidationError("Poisson factorization state does not match the corpus");
  }
}

// Accumulates y * phi into the rows of `target_shape`; `by_doc` selects
// whether the target is indexed by document (theta) or by term (beta).
void accumulate_allocations(const Matrix& elog_theta, const Matrix& elog_beta,
                            const corpus::SparseCorpus& corpus, bool by_doc, Matrix& target) {
  const std::size_t k_count = elog_theta.cols();
  std::vector<double> phi(k_count);
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    for (auto* e = corpus.row_begin(d); e != corpus.row_end(d); ++e) {
      double max_l = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_count; ++k) {
        phi[k] = elog_theta(d, k) + elog_beta(k, e->term);
        max_l = std::max(max_l, phi[k]);
      }
      double norm = 0.0;
      for (auto& p : phi) norm += (p = std::exp(p - max_l));
      for (std::size_t k = 0; k < k_count; ++k) {
        const double add = e->count * phi[k] / norm;
        if (by_doc) {
          target(d, k) += add;
        } else {
          target(k, e->term) += add;
        }
      }
    }
  }
}

}  // namespace

Matrix GammaFamily::mean() const {
  Matrix out(shape.rows(), shape.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = shape.data()[i] / rate.data()[i];
  return out;
}

Matrix GammaFamily::mean_log() const {
  Matrix out(shape.rows(), shape.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = digamma(shape.data()[i]) - std::log(rate.data()[i]);
  }
  return out;
}

PFState init_state(std::size_t num_docs, std::size_t num_terms, std::size_t num_topics,
                   double a, double b, std::uint64_t seed) {
  if (num_topics < 1) throw ValidationError("number of topics must be >= 1");
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("gamma prior parameters must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PFState s;
  s.a = a;
  s.b = b;
  auto fill = [&](std::size_t rows, std::size_t cols) {
    GammaFamily g{Matrix(rows, cols), Matrix(rows, cols)};
    for (auto& v : g.shape.data()) v = a + unif(rng);
    for (auto& v : g.rate.data()) v = b + unif(rng);
    return g;
  };
  s.q_theta = fill(num_docs, num_topics);
  s.q_beta = fill(num_topics, num_terms);
  return s;
}

std::vector<double> allocation(const Matrix& mean_log_theta, const Matrix& mean_log_beta,
                               std::size_t doc, std::size_t term) {
  const std::size_t k_count = mean_log_theta.cols();
  std::vector<double> phi(k_count);
  double max_l = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    phi[k] = mean_log_theta(doc, k) + mean_log_beta(k, term);
    max_l = std::max(max_l, phi[k]);
  }
  double norm = 0.0;
  for (auto& p : phi) norm += (p = std::exp(p - max_l));
  for (auto& p : phi) p /= norm;
  return phi;
}

PFState cavi_step(const PFState& state, const corpus::SparseCorpus& corpus) {
  check_dims(state, corpus);
  const std::size_t D = corpus.num_docs();
  const std::size_t V = corpus.num_terms();
  const std::size_t K = state.num_topics();
  PFState next = state;

  // q(theta) given q(beta).
  {
    const Matrix elog_theta = state.q_theta.mean_log();
    const Matrix elog_beta = state.q_beta.mean_log();
    const Matrix e_beta = state.q_beta.mean();
    next.q_theta.shape = Matrix(D, K, state.a);
    accumulate_allocations(elog_theta, elog_beta, corpus, true, next.q_theta.shape);
    std::vector<double> beta_sum(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t v = 0; v < V; ++v) beta_sum[k] += e_beta(k, v);
    }
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t k = 0; k < K; ++k) next.q_theta.rate(d, k) = state.b + beta_sum[k];
    }
  }
  // q(beta) given the updated q(theta).
  {
    const Matrix elog_theta = next.q_theta.mean_log();
    const Matrix elog_beta = state.q_beta.mean_log();
    const Matrix e_theta = next.q_theta.mean();
    next.q_beta.shape = Matrix(K, V, state.a);
    accumulate_allocations(elog_theta, elog_beta, corpus, false, next.q_beta.shape);
    std::vector<double> theta_sum(K, 0.0);
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t k = 0; k < K; ++k) theta_sum[k] += e_theta(d, k);
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t v = 0; v < V; ++v) next.q_beta.rate(k, v) = state.b + theta_sum[k];
    }
  }
  return next;
}

double pf_elbo(const PFState& state, const corpus::SparseCorpus& corpus) {
  check_dims(state, corpus);
  const std::size_t K = state.num_topics();
  const Matrix elog_theta = state.q_theta.mean_log();
  const Matrix elog_beta = state.q_beta.mean_log();
  const Matrix e_theta = state.q_theta.mean();
  const Matrix e_beta = state.q_beta.mean();

  double elbo = 0.0;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    for (auto* e = corpus.row_begin(d); e != corpus.row_end(d); ++e) {
      double max_l = -std::numeric_limits<double>::infinity();
      std::vector<double> l(K);
      for (std::size_t k = 0; k < K; ++k) {
        l[k] = elog_theta(d, k) + elog_beta(k, e->term);
        max_l = std::max(max_l, l[k]);
      }
      double sum = 0.0;
      for (double x : l) sum += std::exp(x - max_l);
      elbo += e->count * (max_l + std::log(sum)) - std::lgamma(e->count + 1.0);
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    double theta_sum = 0.0;
    double beta_sum = 0.0;
    for (std::size_t d = 0; d < e_theta.rows(); ++d) theta_sum += e_theta(d, k);
    for (std::size_t v = 0; v < e_beta.cols(); ++v) beta_sum += e_beta(k, v);
    elbo -= theta_sum * beta_sum;
  }
  for (std::size_t i = 0; i < e_theta.size(); ++i) {
    elbo += gamma_kl_term(state.a, state.b, state.q_theta.shape.data()[i],
                          state.q_theta.rate.data()[i]);
  }
  for (std::size_t i = 0; i < e_beta.size(); ++i) {
    elbo += gamma_kl_term(state.a, state.b, state.q_beta.shape.data()[i],
                          state.q_beta.rate.data()[i]);
  }
  return elbo;
}

std::vector<double> rate(std::span<const double> theta_d, const Matrix& beta) {
  if (theta_d.size() != beta.rows()) throw ValidationError("theta row and beta disagree on K");
  std::vector<double> out(beta.cols(), 0.0);
  for (std::size_t v = 0; v < beta.cols(); ++v) {
    double sum = 0.0;
    for (std::size_t k = 0; k < theta_d.size(); ++k) sum += theta_d[k] * beta(k, v);
    out[v] = sum;
  }
  return out;
}

PretrainResult pretrain(const corpus::SparseCorpus& corpus, std::size_t num_topics, double a,
                        double b, std::size_t max_sweeps, std::uint64_t seed, double tolerance) {
  if (max_sweeps < 1) throw ValidationError("pretraining needs at least one sweep");
  PFState state = init_state(corpus.num_docs(), corpus.num_terms(), num_topics, a, b, seed);
  PretrainResult out;
  double previous = pf_elbo(state, corpus);
  out.elbo_trace.push_back(previous);
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    state = cavi_step(state, corpus);
    const double current = pf_elbo(state, corpus);
    out.elbo_trace.push_back(current);
    out.sweeps = sweep;
    if (std::abs(current - previous) < tolerance * std::abs(previous)) break;
    previous = current;
  }
  out.theta = state.q_theta.mean();
  out.beta = state.q_beta.mean();
  return out;
}

}  // namespace tbip::pf
