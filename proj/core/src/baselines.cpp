#include "tbip/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "tbip/error.hpp"
#include "tbip/run_manifest.hpp"

namespace tbip::baselines {

namespace {

constexpr double kInitScale = 0.1;
constexpr double kLog2Pi = 1.8378770664093454836;

std::vector<double> small_normals(std::size_t n, vi::Rng& rng) {
  std::normal_distribution<double> normal(0.0, kInitScale);
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

vi::LatentBlock gaussian_block(const char* name, std::vector<double> mu) {
  const std::size_t n = mu.size();
  return {name, vi::gaussian_family(std::move(mu), std::vector<double>(n, std::log(kInitScale))),
          vi::Prior::normal(0.0, 1.0)};
}

vi::TrainConfig full_batch(vi::TrainConfig cfg, std::size_t units) {
  cfg.batch_size = std::max<std::size_t>(units, 1);
  return cfg;
}

}  // namespace

Matrix aggregate_by_author(const corpus::SparseCorpus& corpus) {
  Matrix counts(corpus.num_authors(), corpus.num_terms());
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    const std::size_t s = corpus.author_of(d);
    for (auto* e = corpus.row_begin(d); e != corpus.row_end(d); ++e) counts(s, e->term) += e->count;
  }
  return counts;
}

double wordfish_rate(double alpha, double psi, double b, double x) {
  return std::exp(alpha + psi + b * x);
}

WordfishLikelihood::WordfishLikelihood(const Matrix& counts)
    : counts_(&counts), log_factorials_(counts.rows(), 0.0) {
  for (std::size_t s = 0; s < counts.rows(); ++s) {
    for (double y : counts.row(s)) log_factorials_[s] += std::lgamma(y + 1.0);
  }
}

double WordfishLikelihood::log_likelihood(const vi::BlockArrays& samples,
                                          std::span<const std::size_t> batch,
                                          vi::BlockArrays* d_samples) const {
  const auto& alpha = samples[kAlpha];
  const auto& psi = samples[kPsi];
  const auto& b = samples[kB];
  const auto& x = samples[kX];
  const std::size_t V = counts_->cols();
  double ll = 0.0;
  for (std::size_t s : batch) {
    auto y = counts_->row(s);
    double d_alpha = 0.0;
    double d_x = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      const double log_rate = alpha[s] + psi[v] + b[v] * x[s];
      const double rate = std::exp(log_rate);
      ll += y[v] * log_rate - rate;
      if (d_samples) {
        const double r = y[v] - rate;
        d_alpha += r;
        d_x += r * b[v];
        (*d_samples)[kPsi][v] += r;
        (*d_samples)[kB][v] += r * x[s];
      }
    }
    ll -= log_factorials_[s];
    if (d_samples) {
      (*d_samples)[kAlpha][s] += d_alpha;
      (*d_samples)[kX][s] += d_x;
    }
  }
  return ll;
}

WordfishFit train_wordfish(const Matrix& counts, std::vector<std::string> author_names,
                           const vi::TrainConfig& cfg) {
  cfg.validate();
  const std::size_t S = counts.rows();
  const std::size_t V = counts.cols();
  if (S < 2 || V < 2) throw ValidationError("wordfish needs at least 2 authors and 2 terms");
  if (author_names.size() != S) throw ValidationError("one author name per count row required");

  std::vector<double> row_total(S, 0.0);
  std::vector<double> col_total(V, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t v = 0; v < V; ++v) {
      row_total[s] += counts(s, v);
      col_total[v] += counts(s, v);
    }
  }
  const double total = std::accumulate(row_total.begin(), row_total.end(), 0.0);
  std::vector<double> alpha(S);
  for (std::size_t s = 0; s < S; ++s) alpha[s] = std::log(row_total[s] + 0.5);
  const double shift = std::accumulate(alpha.begin(), alpha.end(), 0.0) / static_cast<double>(S);
  for (auto& a : alpha) a -= shift;
  std::vector<double> psi(V);
  for (std::size_t v = 0; v < V; ++v) psi[v] = std::log((col_total[v] + 0.5) / (total + 0.5)) + shift;

  vi::Rng rng(cfg.seed);
  vi::VariationalState state;
  state.blocks.push_back(gaussian_block("alpha", std::move(alpha)));
  state.blocks.push_back(gaussian_block("psi", std::move(psi)));
  state.blocks.push_back(gaussian_block("b", small_normals(V, rng)));
  state.blocks.push_back(gaussian_block("x", small_normals(S, rng)));

  WordfishLikelihood likelihood(counts);
  WordfishFit fit;
  fit.elbo_trace = vi::fit(state, likelihood, full_batch(cfg, S), rng);
  fit.alpha = state.blocks[kAlpha].family.mu;
  fit.psi = state.blocks[kPsi].family.mu;
  fit.b = state.blocks[kB].family.mu;
  fit.x = state.blocks[kX].family.mu;
  fit.author_names = std::move(author_names);
  fit.config = nlohmann::json{{"model", "wordfish"}, {"train", cfg}};
  return fit;
}

WordfishFit train_wordfish(const corpus::SparseCorpus& corpus, const vi::TrainConfig& cfg) {
  return train_wordfish(aggregate_by_author(corpus), corpus.author_names(), cfg);
}

namespace {

inline constexpr std::size_t kFx = 0;
inline constexpr std::size_t kFa = 1;
inline constexpr std::size_t kFb = 2;
inline constexpr std::size_t kFsigma2 = 3;

class FactorLikelihood final : public vi::LikelihoodModel {
 public:
  explicit FactorLikelihood(const Matrix& z) : z_(&z) {}
  std::size_t num_units() const override { return z_->cols(); }

  double log_likelihood(const vi::BlockArrays& samples, std::span<const std::size_t> batch,
                        vi::BlockArrays* d_samples) const override {
    const auto& x = samples[kFx];
    const auto& a = samples[kFa];
    const auto& b = samples[kFb];
    const double sigma2 = samples[kFsigma2][0];
    double ll = 0.0;
    for (std::size_t j : batch) {
      for (std::size_t s = 0; s < z_->rows(); ++s) {
        const double z = (*z_)(s, j);
        if (std::isnan(z)) continue;
        const double resid = z - (a[j] + b[j] * x[s]);
        ll -= 0.5 * (kLog2Pi + std::log(sigma2) + resid * resid / sigma2);
        if (d_samples) {
          const double r = resid / sigma2;
          (*d_samples)[kFa][j] += r;
          (*d_samples)[kFb][j] += r * x[s];
          (*d_samples)[kFx][s] += r * b[j];
          (*d_samples)[kFsigma2][0] += -0.5 / sigma2 + 0.5 * resid * resid / (sigma2 * sigma2);
        }
      }
    }
    return ll;
  }

 private:
  const Matrix* z_;
};

}  // namespace

FactorFit fit_factor_model(const Matrix& positions, const vi::TrainConfig& cfg) {
  cfg.validate();
  const std::size_t S = positions.rows();
  const std::size_t J = positions.cols();
  if (S < 2 || J < 1) throw ValidationError("factor model needs >= 2 authors and >= 1 debate");

  Matrix z = positions;
  for (std::size_t j = 0; j < J; ++j) {
    double n = 0.0, sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      if (!std::isnan(z(s, j))) {
        n += 1.0;
        sum += z(s, j);
      }
    }
    if (n < 2.0) throw ValidationError("every debate needs at least two observed positions");
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      if (!std::isnan(z(s, j))) ss += (z(s, j) - mean) * (z(s, j) - mean);
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) throw ZeroVariance("debate positions");
    for (std::size_t s = 0; s < S; ++s) {
      if (!std::isnan(z(s, j))) z(s, j) = (z(s, j) - mean) / sd;
    }
  }

  vi::Rng rng(cfg.seed);
  vi::VariationalState state;
  state.blocks.push_back(gaussian_block("x", small_normals(S, rng)));
  state.blocks.push_back(gaussian_block("a", small_normals(J, rng)));
  state.blocks.push_back(gaussian_block("b", small_normals(J, rng)));
  state.blocks.push_back({"sigma2",
                          vi::lognormal_family({std::log(0.5)}, {std::log(kInitScale)}),
                          vi::Prior::gamma(1.0, 1.0)});

  FactorLikelihood likelihood(z);
  FactorFit fit;
  fit.elbo_trace = vi::fit(state, likelihood, full_batch(cfg, J), rng);

  // Optimal Gaussian q(x_s) given the remaining factors.
  const auto& qa = state.blocks[kFa].family;
  const auto& qb = state.blocks[kFb].family;
  const auto& qs = state.blocks[kFsigma2].family;
  const double inv_sigma2 = std::exp(-qs.mu[0] + 0.5 * qs.sigma(0) * qs.sigma(0));
  auto& qx = state.blocks[kFx].family;
  for (std::size_t s = 0; s < S; ++s) {
    double precision = 1.0;
    double shift = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      if (std::isnan(z(s, j))) continue;
      const double sb = qb.sigma(j);
      precision += inv_sigma2 * (qb.mu[j] * qb.mu[j] + sb * sb);
      shift += inv_sigma2 * qb.mu[j] * (z(s, j) - qa.mu[j]);
    }
    qx.mu[s] = shift / precision;
    qx.log_sigma[s] = -0.5 * std::log(precision);
  }

  fit.x = qx.mu;
  fit.a = qa.mu;
  fit.b = qb.mu;
  fit.sigma2 = qs.mean()[0];
  return fit;
}

WordshoalFit train_wordshoal(const DebateLabeledCorpus& data, const vi::TrainConfig& cfg) {
  cfg.validate();
  const auto& corpus = data.corpus;
  if (data.debate_of.size() != corpus.num_docs()) {
    throw ValidationError("every document needs a debate label");
  }
  std::map<std::string, std::vector<std::size_t>> docs_by_debate;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    if (data.debate_of[d].empty()) throw ValidationError("document " + std::to_string(d) + " has no debate label");
    docs_by_debate[data.debate_of[d]].push_back(d);
  }

  struct Stage1 {
    std::string label;
    std::vector<std::size_t> authors;  // global indices, ascending
    Matrix counts;
  };
  std::vector<Stage1> jobs;
  std::vector<std::string> too_small;
  for (const auto& [label, docs] : docs_by_debate) {
    std::map<std::size_t, std::size_t> author_row;
    for (std::size_t d : docs) author_row.emplace(corpus.author_of(d), 0);
    std::map<std::size_t, std::size_t> term_col;
    for (std::size_t d : docs) {
      for (auto* e = corpus.row_begin(d); e != corpus.row_end(d); ++e) term_col.emplace(e->term, 0);
    }
    if (author_row.size() < 2 || term_col.size() < 2) {
      too_small.push_back(label);
      continue;
    }
    Stage1 job{label, {}, Matrix(author_row.size(), term_col.size())};
    for (auto& [author, row] : author_row) {
      row = job.authors.size();
      job.authors.push_back(author);
    }
    std::size_t next = 0;
    for (auto& [term, col] : term_col) col = next++;
    for (std::size_t d : docs) {
      const std::size_t r = author_row.at(corpus.author_of(d));
      for (auto* e = corpus.row_begin(d); e != corpus.row_end(d); ++e) {
        job.counts(r, term_col.at(e->term)) += e->count;
      }
    }
    jobs.push_back(std::move(job));
  }
  if (!too_small.empty()) throw DebateTooSmall(std::move(too_small));

  std::vector<std::vector<double>> stage1(jobs.size());
  std::atomic<std::size_t> next_job{0};
  auto worker = [&] {
    for (std::size_t j; (j = next_job.fetch_add(1)) < jobs.size();) {
      vi::TrainConfig local = cfg;
      local.threads = 1;
      local.seed = cfg.seed ^ fnv1a(jobs[j].label);
      std::vector<std::string> names;
      for (std::size_t a : jobs[j].authors) names.push_back(corpus.author_names()[a]);
      stage1[j] = train_wordfish(jobs[j].counts, std::move(names), local).x;
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(cfg.threads, 1), jobs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          worker();
        } catch (...) {
          errors[t] = std::current_exception();
          next_job = jobs.size();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  WordshoalFit fit;
  fit.author_names = corpus.author_names();
  fit.positions = Matrix(corpus.num_authors(), jobs.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    fit.debates.push_back(jobs[j].label);
    for (std::size_t r = 0; r < jobs[j].authors.size(); ++r) {
      fit.positions(jobs[j].authors[r], j) = stage1[j][r];
    }
  }
  fit.factor = fit_factor_model(fit.positions, cfg);
  fit.x = fit.factor.x;
  fit.config = nlohmann::json{{"model", "wordshoal"}, {"train", cfg}};
  return fit;
}

io::FitBundle to_bundle(const WordfishFit& fit) {
  io::FitBundle b;
  b.manifest = {{"model", "wordfish"},
                {"dims", {{"S", fit.x.size()}, {"V", fit.psi.size()}}},
                {"config", fit.config},
                {"authors", fit.author_names}};
  if (fit.config.contains("train")) b.manifest["seed"] = fit.config["train"].value("seed", 0);
  b.arrays.push_back({"x", {fit.x.size()}, fit.x});
  b.arrays.push_back({"alpha", {fit.alpha.size()}, fit.alpha});
  b.arrays.push_back({"psi", {fit.psi.size()}, fit.psi});
  b.arrays.push_back({"b", {fit.b.size()}, fit.b});
  b.elbo_trace = fit.elbo_trace;
  return b;
}

io::FitBundle to_bundle(const WordshoalFit& fit) {
  io::FitBundle b;
  b.manifest = {{"model", "wordshoal"},
                {"dims", {{"S", fit.x.size()}, {"J", fit.debates.size()}}},
                {"config", fit.config},
                {"authors", fit.author_names},
                {"debates", fit.debates},
                {"sigma2", fit.factor.sigma2}};
  if (fit.config.contains("train")) b.manifest["seed"] = fit.config["train"].value("seed", 0);
  b.arrays.push_back({"x", {fit.x.size()}, fit.x});
  b.arrays.push_back({"positions", {fit.positions.rows(), fit.positions.cols()},
                      fit.positions.data()});
  b.arrays.push_back({"a", {fit.factor.a.size()}, fit.factor.a});
  b.arrays.push_back({"b", {fit.factor.b.size()}, fit.factor.b});
  b.elbo_trace = fit.factor.elbo_trace;
  return b;
}

}  // namespace tbip::baselines
