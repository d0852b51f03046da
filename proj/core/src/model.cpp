#include "tbip/model.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "tbip/error.hpp"
#include "tbip/pf.hpp"

namespace tbip::model {

namespace {

constexpr double kInitScale = 0.1;

}  // namespace

void PriorConfig::validate() const {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("gamma prior parameters must be positive");
}

std::vector<double> tbip_rate(std::span<const double> theta_d, const Matrix& beta,
                              const Matrix& eta, double x, double w) {
  const std::size_t K = theta_d.size();
  if (beta.rows() != K || eta.rows() != K || eta.cols() != beta.cols()) {
    throw ValidationError("tbip_rate: theta, beta and eta shapes disagree");
  }
  if (!(w > 0.0)) throw ValidationError("tbip_rate: weight must be positive");
  std::vector<double> rate(beta.cols());
  for (std::size_t v = 0; v < beta.cols(); ++v) {
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += theta_d[k] * beta(k, v) * std::exp(x * eta(k, v));
    rate[v] = sum * w;
    if (!std::isfinite(rate[v])) throw NumericError("tbip_rate: rate overflow");
  }
  return rate;
}

double log_likelihood_doc(const corpus::SparseCorpus& corpus, std::size_t doc,
                          std::span<const double> rate) {
  if (rate.size() != corpus.num_terms()) throw ValidationError("rate length must equal V");
  double ll = 0.0;
  for (double lambda : rate) ll -= lambda;
  for (auto* e = corpus.row_begin(doc); e != corpus.row_end(doc); ++e) {
    ll += e->count * std::log(rate[e->term]) - std::lgamma(e->count + 1.0);
  }
  return ll;
}

TbipLikelihood::TbipLikelihood(const corpus::SparseCorpus& corpus, std::vector<double> weights,
                               std::size_t num_topics, std::size_t threads)
    : corpus_(&corpus),
      weights_(std::move(weights)),
      num_topics_(num_topics),
      threads_(std::max<std::size_t>(1, threads)) {
  if (weights_.size() != corpus.num_authors()) {
    throw ValidationError("one verbosity weight per author is required");
  }
  log_factorials_.resize(corpus.num_docs());
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    double s = 0.0;
    for (auto* e = corpus.row_begin(d); e != corpus.row_end(d); ++e) s += std::lgamma(e->count + 1.0);
    log_factorials_[d] = s;
  }
}

void TbipLikelihood::author_group(const vi::BlockArrays& samples, std::size_t author,
                                  std::span<const std::size_t> docs, vi::BlockArrays* d_samples,
                                  Partial& partial) const {
  const std::size_t K = num_topics_;
  const std::size_t V = corpus_->num_terms();
  const auto& theta = samples[kTheta];
  const auto& beta = samples[kBeta];
  const auto& eta = samples[kEta];
  const double x = samples[kX][author];
  const double w = weights_[author];

  // ideological factor exp(x * eta_kv), beta_kv exp(x eta_kv) stored term-major,
  // and B_k = sum_v beta_kv exp(x eta_kv)
  std::vector<double> factor(K * V);
  std::vector<double> bf(V * K);
  std::vector<double> b_sum(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < V; ++v) {
      const double f = std::exp(x * eta[k * V + v]);
      if (!std::isfinite(f)) throw NumericError("rate overflow in exp(x * eta)");
      factor[k * V + v] = f;
      bf[v * K + k] = beta[k * V + v] * f;
      b_sum[k] += bf[v * K + k];
    }
  }

  const bool want_grad = d_samples != nullptr;
  std::vector<double> g;  // sum over docs of (y / lambda) * w * theta_dk, term-major
  std::vector<double> t_sum(K, 0.0);
  if (want_grad) g.assign(V * K, 0.0);

  double ll = 0.0;
  for (std::size_t d : docs) {
    const double* th = theta.data() + d * K;
    double expected = 0.0;
    for (std::size_t k = 0; k < K; ++k) expected += th[k] * b_sum[k];
    ll -= w * expected;
    ll -= log_factorials_[d];
    double* d_th = want_grad ? (*d_samples)[kTheta].data() + d * K : nullptr;
    for (auto* e = corpus_->row_begin(d); e != corpus_->row_end(d); ++e) {
      const double* bfv = bf.data() + std::size_t{e->term} * K;
      double lambda = 0.0;
      for (std::size_t k = 0; k < K; ++k) lambda += th[k] * bfv[k];
      lambda *= w;
      ll += e->count * std::log(lambda);
      if (want_grad) {
        const double r = e->count / lambda * w;
        double* gv = g.data() + std::size_t{e->term} * K;
        for (std::size_t k = 0; k < K; ++k) {
          d_th[k] += r * bfv[k];
          gv[k] += r * th[k];
        }
      }
    }
    if (want_grad) {
      for (std::size_t k = 0; k < K; ++k) {
        d_th[k] -= w * b_sum[k];
        t_sum[k] += w * th[k];
      }
    }
  }
  partial.ll += ll;

  if (want_grad) {
    double d_x = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t v = 0; v < V; ++v) {
        const std::size_t i = k * V + v;
        const double c = g[v * K + k] - t_sum[k];
        const double be = bf[v * K + k];
        partial.d_beta[i] += c * factor[i];
        partial.d_eta[i] += c * be * x;
        d_x += c * be * eta[i];
      }
    }
    (*d_samples)[kX][author] += d_x;
  }
}

double TbipLikelihood::log_likelihood(const vi::BlockArrays& samples,
                                      std::span<const std::size_t> batch,
                                      vi::BlockArrays* d_samples) const {
  if (batch.empty()) return 0.0;
  // Group the batch by author, preserving document order within an author.
  std::vector<std::size_t> order(batch.begin(), batch.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return corpus_->author_of(l) < corpus_->author_of(r);
  });
  struct Group {
    std::size_t author;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    const std::size_t a = corpus_->author_of(order[i]);
    while (j < order.size() && corpus_->author_of(order[j]) == a) ++j;
    groups.push_back({a, i, j});
    i = j;
  }

  const std::size_t KV = num_topics_ * corpus_->num_terms();
  const std::size_t chunks = std::min(threads_, groups.size());
  std::vector<Partial> partials(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    // Chunk 0 accumulates straight into the output arrays.
    if (d_samples && c > 0) {
      partials[c].d_beta.assign(KV, 0.0);
      partials[c].d_eta.assign(KV, 0.0);
    }
  }
  if (d_samples) {
    partials[0].d_beta = std::move((*d_samples)[kBeta]);
    partials[0].d_eta = std::move((*d_samples)[kEta]);
  }

  auto run_chunk = [&](std::size_t c) {
    const std::size_t first = groups.size() * c / chunks;
    const std::size_t last = groups.size() * (c + 1) / chunks;
    for (std::size_t gi = first; gi < last; ++gi) {
      const auto& grp = groups[gi];
      author_group(samples, grp.author,
                   std::span<const std::size_t>(order.data() + grp.begin, grp.end - grp.begin),
                   d_samples, partials[c]);
    }
  };

  if (chunks <= 1) {
    run_chunk(0);
  } else {
    std::vector<std::exception_ptr> errors(chunks);
    {
      std::vector<std::jthread> workers;
      for (std::size_t c = 1; c < chunks; ++c) {
        workers.emplace_back([&, c] {
          try {
            run_chunk(c);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        });
      }
      try {
        run_chunk(0);
      } catch (...) {
        errors[0] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  double ll = 0.0;
  for (const auto& p : partials) ll += p.ll;
  if (d_samples) {
    (*d_samples)[kBeta] = std::move(partials[0].d_beta);
    (*d_samples)[kEta] = std::move(partials[0].d_eta);
    for (std::size_t c = 1; c < chunks; ++c) {
      for (std::size_t i = 0; i < KV; ++i) {
        (*d_samples)[kBeta][i] += partials[c].d_beta[i];
        (*d_samples)[kEta][i] += partials[c].d_eta[i];
      }
    }
  }
  return ll;
}

vi::VariationalState make_state(const Initialization& init, std::size_t num_authors,
                                const PriorConfig& priors, vi::Rng& rng) {
  priors.validate();
  const std::size_t K = init.theta.cols();
  if (init.beta.rows() != K) throw ValidationError("initial theta and beta disagree on K");
  auto log_of = [](const Matrix& m) {
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!(m.data()[i] > 0.0)) throw ValidationError("initial theta and beta must be positive");
      out[i] = std::log(m.data()[i]);
    }
    return out;
  };
  std::normal_distribution<double> normal(0.0, kInitScale);
  auto random_locations = [&](std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = normal(rng);
    return out;
  };
  const double log_scale = std::log(kInitScale);
  const std::size_t KV = init.beta.size();

  vi::VariationalState state;
  state.blocks.push_back({"theta",
                          vi::lognormal_family(log_of(init.theta),
                                               std::vector<double>(init.theta.size(), log_scale)),
                          vi::Prior::gamma(priors.a, priors.b)});
  state.blocks.push_back({"beta",
                          vi::lognormal_family(log_of(init.beta), std::vector<double>(KV, log_scale)),
                          vi::Prior::gamma(priors.a, priors.b)});
  state.blocks.push_back({"eta",
                          vi::gaussian_family(random_locations(KV), std::vector<double>(KV, log_scale)),
                          vi::Prior::normal(0.0, 1.0)});
  state.blocks.push_back({"x",
                          vi::gaussian_family(random_locations(num_authors),
                                              std::vector<double>(num_authors, log_scale)),
                          vi::Prior::normal(0.0, 1.0)});
  return state;
}

FitResult posterior_means(const vi::VariationalState& state, std::size_t num_topics) {
  const auto& theta = state.blocks.at(kTheta).family;
  const auto& beta = state.blocks.at(kBeta).family;
  const auto& eta = state.blocks.at(kEta).family;
  const std::size_t K = num_topics;
  if (K == 0 || theta.size() % K != 0 || beta.size() % K != 0 || eta.size() != beta.size()) {
    throw ValidationError("variational state does not match the topic count");
  }
  const std::size_t D = theta.size() / K;
  const std::size_t V = beta.size() / K;
  FitResult out;
  out.theta = Matrix(D, K, theta.mean());
  out.beta = Matrix(K, V, beta.mean());
  out.eta = Matrix(K, V, eta.mean());
  out.eta_sigma = Matrix(K, V);
  for (std::size_t i = 0; i < eta.size(); ++i) out.eta_sigma.data()[i] = eta.sigma(i);
  out.x = state.blocks.at(kX).family.mean();
  return out;
}

FitResult train_tbip(const corpus::SparseCorpus& input, const vi::TrainConfig& cfg,
                     const PriorConfig& priors, std::optional<Initialization> init) {
  cfg.validate();
  priors.validate();
  if (input.num_docs() == 0 || input.num_terms() == 0 || input.num_authors() == 0) {
    throw ValidationError("corpus must have at least one document, term and author");
  }
  const corpus::SparseCorpus corpus =
      cfg.use_log_transform ? corpus::log_transform(input) : input;
  const std::size_t D = corpus.num_docs();
  const std::size_t V = corpus.num_terms();
  const std::size_t K = cfg.num_topics;

  if (!init) {
    auto pre = pf::pretrain(corpus, K, priors.a, priors.b, cfg.pretrain_sweeps, cfg.seed);
    init = Initialization{std::move(pre.theta), std::move(pre.beta)};
  }
  if (init->theta.rows() != D || init->theta.cols() != K || init->beta.rows() != K ||
      init->beta.cols() != V) {
    throw ValidationError("initial theta/beta shapes do not match the corpus and K");
  }

  std::vector<double> weights = corpus::compute_weights(corpus);
  vi::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  vi::VariationalState state = make_state(*init, corpus.num_authors(), priors, rng);
  TbipLikelihood likelihood(corpus, weights, K, cfg.threads);
  auto trace = vi::fit(state, likelihood, cfg, rng);

  FitResult out = posterior_means(state, K);
  out.weights = std::move(weights);
  out.author_names = corpus.author_names();
  out.elbo_trace = std::move(trace);
  out.config = nlohmann::json{{"model", "tbip"},
                              {"train", cfg},
                              {"prior_a", priors.a},
                              {"prior_b", priors.b}};
  return out;
}

}  // namespace tbip::model
