#include "tbip/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tbip/error.hpp"

namespace tbip::synth {

namespace {

double normal(vi::Rng& rng, double loc, double scale) {
  return loc + scale * std::normal_distribution<double>(0.0, 1.0)(rng);
}

double poisson(vi::Rng& rng, double rate) {
  if (!std::isfinite(rate)) throw NumericError("synthetic rate overflowed");
  if (rate <= 0.0) return 0.0;
  return static_cast<double>(std::poisson_distribution<long long>(rate)(rng));
}

void check_layout(double spread) {
  if (!(spread >= 0.0)) throw ValidationError("cluster spread must be >= 0");
}

}  // namespace

void SynthSpec::validate() const {
  if (num_docs < 1 || num_terms < 1 || num_authors < 1 || num_topics < 1) {
    throw ValidationError("synthetic dimensions must all be >= 1");
  }
  if (num_docs < num_authors) throw ValidationError("need at least one document per author");
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("gamma prior parameters must be positive");
  if (!(polarity_scale >= 0.0)) throw ValidationError("polarity scale must be >= 0");
  check_layout(cluster_spread);
}

std::vector<double> sample_ideal_points(std::size_t n, Layout layout, double spread,
                                        vi::Rng& rng) {
  std::vector<double> x(n);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (std::size_t s = 0; s < n; ++s) {
    x[s] = layout == Layout::two_cluster ? normal(rng, s % 2 == 0 ? 1.0 : -1.0, spread) : unif(rng);
  }
  return x;
}

namespace {

std::vector<double> tbip_rates(const TbipTruth& truth, std::size_t doc, double x) {
  const std::size_t K = truth.beta.rows();
  const std::size_t V = truth.beta.cols();
  std::vector<double> rate(V);
  for (std::size_t v = 0; v < V; ++v) {
    double r = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      r += truth.theta(doc, k) * truth.beta(k, v) * std::exp(x * truth.eta(k, v));
    }
    rate[v] = r;
  }
  return rate;
}

}  // namespace

corpus::SparseCorpus sample_tbip_counts(const TbipTruth& truth,
                                        const std::vector<std::size_t>& author_of,
                                        std::size_t num_authors, vi::Rng& rng) {
  if (truth.theta.rows() != author_of.size()) throw ValidationError("one author per theta row required");
  std::vector<corpus::SparseCorpus::Triplet> triplets;
  for (std::size_t d = 0; d < author_of.size(); ++d) {
    const auto rate = tbip_rates(truth, d, truth.x.at(author_of[d]));
    for (std::size_t v = 0; v < rate.size(); ++v) {
      const double y = poisson(rng, rate[v]);
      if (y > 0.0) triplets.push_back({d, v, y});
    }
  }
  return corpus::SparseCorpus(author_of.size(), truth.beta.cols(), author_labels(num_authors),
                              author_of, std::move(triplets));
}

TbipSample sample_tbip(const SynthSpec& spec) {
  spec.validate();
  const std::size_t D = spec.num_docs, V = spec.num_terms, S = spec.num_authors,
                    K = spec.num_topics;
  vi::Rng rng(spec.seed);
  std::gamma_distribution<double> gamma(spec.a, 1.0 / spec.b);

  TbipSample out;
  auto& truth = out.truth;
  truth.x = sample_ideal_points(S, spec.layout, spec.cluster_spread, rng);
  truth.beta = Matrix(K, V);
  for (auto& v : truth.beta.data()) v = gamma(rng);
  truth.eta = Matrix(K, V);
  for (auto& v : truth.eta.data()) v = spec.polarity_scale == 0.0 ? 0.0 : normal(rng, 0.0, spec.polarity_scale);

  std::vector<std::size_t> author_of(D);
  if (spec.allocation == DocAllocation::balanced) {
    for (std::size_t d = 0; d < D; ++d) author_of[d] = d % S;
  } else {
    std::iota(author_of.begin(), author_of.begin() + static_cast<std::ptrdiff_t>(S), 0);
    std::uniform_int_distribution<std::size_t> pick(0, S - 1);
    for (std::size_t d = S; d < D; ++d) author_of[d] = pick(rng);
    std::shuffle(author_of.begin(), author_of.end(), rng);
  }

  std::vector<double> theta_rows;
  std::vector<std::size_t> kept_authors;
  std::vector<corpus::SparseCorpus::Triplet> triplets;
  std::vector<double> theta(K), rate(V), counts(V);
  for (std::size_t d = 0; d < D; ++d) {
    for (auto& t : theta) t = gamma(rng);
    const double x = truth.x[author_of[d]];
    for (std::size_t v = 0; v < V; ++v) {
      double r = 0.0;
      for (std::size_t k = 0; k < K; ++k) r += theta[k] * truth.beta(k, v) * std::exp(x * truth.eta(k, v));
      rate[v] = r;
    }
    bool empty = true;
    for (int attempt = 0; attempt < 2 && empty; ++attempt) {
      for (std::size_t v = 0; v < V; ++v) {
        counts[v] = poisson(rng, rate[v]);
        empty = empty && counts[v] == 0.0;
      }
    }
    if (empty) {
      ++out.dropped_docs;
      continue;
    }
    const std::size_t row = kept_authors.size();
    for (std::size_t v = 0; v < V; ++v) {
      if (counts[v] > 0.0) triplets.push_back({row, v, counts[v]});
    }
    kept_authors.push_back(author_of[d]);
    theta_rows.insert(theta_rows.end(), theta.begin(), theta.end());
  }
  const std::size_t kept = kept_authors.size();
  truth.theta = Matrix(kept, K, std::move(theta_rows));
  out.corpus = corpus::SparseCorpus(kept, V, author_labels(S), std::move(kept_authors),
                                    std::move(triplets));
  return out;
}

void VoteSynthSpec::validate() const {
  if (num_lawmakers < 2 || num_bills < 1) throw ValidationError("need >= 2 lawmakers and >= 1 bill");
  if (!(alpha_scale >= 0.0) || !(polarity_scale >= 0.0)) {
    throw ValidationError("scales must be >= 0");
  }
  check_layout(cluster_spread);
}

VoteSample sample_votes(const VoteSynthSpec& spec) {
  spec.validate();
  vi::Rng rng(spec.seed);
  VoteSample out;
  out.x = sample_ideal_points(spec.num_lawmakers, spec.layout, spec.cluster_spread, rng);
  for (std::size_t j = 0; j < spec.num_bills; ++j) {
    out.alpha.push_back(normal(rng, spec.alpha_loc, spec.alpha_scale));
    out.eta.push_back(normal(rng, 0.0, spec.polarity_scale));
  }
  out.votes = sample_votes_given(out.x, out.alpha, out.eta, rng);
  return out;
}

vote::VoteMatrix sample_votes_given(const std::vector<double>& x, const std::vector<double>& alpha,
                                    const std::vector<double>& eta, vi::Rng& rng) {
  if (alpha.size() != eta.size()) throw ValidationError("alpha and eta differ in length");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<vote::Vote> votes;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      votes.push_back({i, j, unif(rng) < vote::vote_prob(alpha[j], eta[j], x[i])});
    }
  }
  std::vector<std::string> bills;
  for (std::size_t j = 0; j < alpha.size(); ++j) bills.push_back("bill" + std::to_string(j));
  return vote::VoteMatrix(author_labels(x.size()), std::move(bills), std::move(votes));
}

void WordfishSynthSpec::validate() const {
  if (num_authors < 2 || num_terms < 2) throw ValidationError("need >= 2 authors and >= 2 terms");
  if (!(alpha_scale >= 0.0) || !(psi_scale >= 0.0) || !(polarity_scale >= 0.0)) {
    throw ValidationError("scales must be >= 0");
  }
  check_layout(cluster_spread);
}

WordfishSample sample_wordfish(const WordfishSynthSpec& spec) {
  spec.validate();
  vi::Rng rng(spec.seed);
  WordfishSample out;
  out.x = sample_ideal_points(spec.num_authors, spec.layout, spec.cluster_spread, rng);
  for (std::size_t s = 0; s < spec.num_authors; ++s) out.alpha.push_back(normal(rng, 0.0, spec.alpha_scale));
  for (std::size_t v = 0; v < spec.num_terms; ++v) {
    out.psi.push_back(normal(rng, spec.psi_loc, spec.psi_scale));
    out.b.push_back(normal(rng, 0.0, spec.polarity_scale));
  }
  out.counts = Matrix(spec.num_authors, spec.num_terms);
  for (std::size_t s = 0; s < spec.num_authors; ++s) {
    for (std::size_t v = 0; v < spec.num_terms; ++v) {
      out.counts(s, v) =
          poisson(rng, baselines::wordfish_rate(out.alpha[s], out.psi[v], out.b[v], out.x[s]));
    }
  }
  out.author_names = author_labels(spec.num_authors);
  return out;
}

void WordshoalSynthSpec::validate() const {
  if (num_authors < 3 || num_debates < 1 || num_terms < 2) {
    throw ValidationError("need >= 3 authors, >= 1 debate and >= 2 terms");
  }
  if (!(participation > 0.0 && participation <= 1.0)) {
    throw ValidationError("participation must be in (0, 1]");
  }
  if (!(position_noise >= 0.0) || !(polarity_scale >= 0.0)) throw ValidationError("scales must be >= 0");
  check_layout(cluster_spread);
}

WordshoalSample sample_wordshoal(const WordshoalSynthSpec& spec) {
  spec.validate();
  const std::size_t S = spec.num_authors, J = spec.num_debates, V = spec.num_terms;
  vi::Rng rng(spec.seed);
  WordshoalSample out;
  out.x = sample_ideal_points(S, spec.layout, spec.cluster_spread, rng);
  std::vector<double> alpha(S);
  for (auto& a : alpha) a = normal(rng, 0.0, 0.3);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<bool>> speaks(J, std::vector<bool>(S));
  std::vector<bool> speaks_anywhere(S, false);
  for (std::size_t j = 0; j < J; ++j) {
    std::size_t speakers = 0;
    for (std::size_t s = 0; s < S; ++s) {
      speaks[j][s] = unif(rng) < spec.participation;
      speakers += speaks[j][s];
    }
    for (std::size_t s = 0; speakers < 3; ++s) {
      if (!speaks[j][s]) {
        speaks[j][s] = true;
        ++speakers;
      }
    }
    for (std::size_t s = 0; s < S; ++s) speaks_anywhere[s] = speaks_anywhere[s] || speaks[j][s];
  }
  for (std::size_t s = 0; s < S; ++s) {
    if (!speaks_anywhere[s]) speaks[s % J][s] = true;
  }

  std::vector<std::size_t> author_of;
  std::vector<corpus::SparseCorpus::Triplet> triplets;
  for (std::size_t j = 0; j < J; ++j) {
    const double a = normal(rng, 0.0, 0.5);
    const double b = (unif(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unif(rng));
    std::vector<double> psi(V), beta(V);
    for (std::size_t v = 0; v < V; ++v) {
      psi[v] = normal(rng, 1.0, 1.0);
      beta[v] = normal(rng, 0.0, spec.polarity_scale);
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (!speaks[j][s]) continue;
      const double position = a + b * out.x[s] + normal(rng, 0.0, spec.position_noise);
      const std::size_t doc = author_of.size();
      for (std::size_t v = 0; v < V; ++v) {
        const double y = poisson(rng, baselines::wordfish_rate(alpha[s], psi[v], beta[v], position));
        if (y > 0.0) triplets.push_back({doc, v, y});
      }
      author_of.push_back(s);
      out.data.debate_of.push_back("debate" + std::to_string(j));
    }
  }
  const std::size_t D = author_of.size();
  out.data.corpus = corpus::SparseCorpus(D, V, author_labels(S), std::move(author_of), std::move(triplets));
  return out;
}

std::vector<std::string> author_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back("author" + std::to_string(s));
  return out;
}

void write_truth(const std::filesystem::path& path, const std::vector<std::string>& names,
                 const std::vector<double>& x, const nlohmann::json& extra) {
  nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
  j["authors"] = names;
  j["x"] = x;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Truth read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    Truth t{j.at("authors").get<std::vector<std::string>>(), j.at("x").get<std::vector<double>>()};
    if (t.names.size() != t.x.size()) throw IoError(path.string() + ": authors and x differ in length");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace tbip::synth
