#include "tbip/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tbip/error.hpp"

namespace tbip::analysis {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("ideal points must be finite");
  }
}

}  // namespace

AlignedIdealPoints align(std::span<const double> points,
                         std::optional<std::span<const double>> reference,
                         std::string reference_name) {
  if (points.size() < 2) throw ValidationError("alignment needs at least two ideal points");
  check_finite(points);
  const double mean = mean_of(points);
  double ss = 0.0;
  for (double p : points) ss += (p - mean) * (p - mean);
  const double sd = std::sqrt(ss / static_cast<double>(points.size()));
  if (!(sd > 0.0)) throw ZeroVariance("ideal points");

  AlignedIdealPoints out;
  out.reference_name = std::move(reference_name);
  out.values.reserve(points.size());
  for (double p : points) out.values.push_back((p - mean) / sd);
  if (reference) {
    if (reference->size() != points.size()) {
      throw ValidationError("reference has " + std::to_string(reference->size()) +
                            " ideal points, expected " + std::to_string(points.size()));
    }
    if (pearson(out.values, *reference) < 0.0) {
      for (auto& v : out.values) v = -v;
      out.sign_flipped = true;
    }
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("correlation inputs differ in length");
  if (a.empty()) throw ValidationError("correlation of empty inputs");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw ZeroVariance("correlation");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation compare(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("cannot compare " + std::to_string(a.size()) + " with " +
                          std::to_string(b.size()) + " ideal points");
  }
  if (a.size() < 3) throw ValidationError("comparison needs at least three ideal points");
  check_finite(a);
  check_finite(b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return {pearson(a, b), pearson(ra, rb)};
}

std::vector<double> match_by_name(const std::vector<std::string>& order,
                                  const std::vector<std::string>& names,
                                  const std::vector<double>& scores) {
  if (names.size() != scores.size()) throw ValidationError("one score per name required");
  if (names.size() != order.size()) {
    throw ValidationError("reference has " + std::to_string(names.size()) + " entries, fit has " +
                          std::to_string(order.size()));
  }
  std::unordered_map<std::string, double> by_name;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!by_name.emplace(names[i], scores[i]).second) {
      throw ValidationError("duplicate reference name: " + names[i]);
    }
  }
  std::vector<double> out;
  out.reserve(order.size());
  for (const auto& n : order) {
    auto it = by_name.find(n);
    if (it == by_name.end()) throw ValidationError("reference has no entry for " + n);
    out.push_back(it->second);
  }
  return out;
}

namespace {

std::vector<std::string> top_terms(const std::vector<double>& score, std::size_t m,
                                   const corpus::Vocabulary& vocab) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return score[l] > score[r]; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(vocab.term(order[i]));
  return out;
}

}  // namespace

TopicReport topic_report(const model::FitResult& fit, const corpus::Vocabulary& vocab,
                         std::size_t m, PoleIntensity mode) {
  const std::size_t K = fit.beta.rows();
  const std::size_t V = fit.beta.cols();
  if (m < 1) throw ValidationError("need at least one term per topic");
  if (m > V) throw ValidationError("cannot list " + std::to_string(m) + " of " + std::to_string(V) + " terms");
  if (vocab.size() != V) throw ValidationError("vocabulary size does not match the fit");
  if (mode == PoleIntensity::exact && fit.eta_sigma.size() != fit.eta.size()) {
    throw ValidationError("exact pole intensities need eta scales in the fit");
  }
  TopicReport report;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> neutral(V), negative(V), positive(V);
    for (std::size_t v = 0; v < V; ++v) {
      const double b = fit.beta(k, v);
      const double e = fit.eta(k, v);
      const double half_var =
          mode == PoleIntensity::exact ? 0.5 * fit.eta_sigma(k, v) * fit.eta_sigma(k, v) : 0.0;
      neutral[v] = b;
      negative[v] = b * std::exp(-e + half_var);
      positive[v] = b * std::exp(e + half_var);
    }
    report.topics.push_back(
        {top_terms(negative, m, vocab), top_terms(neutral, m, vocab), top_terms(positive, m, vocab)});
  }
  return report;
}

std::string to_markdown(const TopicReport& report) {
  auto join = [](const std::vector<std::string>& terms) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) out += (i ? ", " : "") + terms[i];
    return out;
  };
  std::ostringstream md;
  for (std::size_t k = 0; k < report.topics.size(); ++k) {
    const auto& t = report.topics[k];
    md << "## Topic " << k << "\n\n"
       << "| Ideology | Top terms |\n|---|---|\n"
       << "| Negative (-1) | " << join(t.negative) << " |\n"
       << "| Neutral | " << join(t.neutral) << " |\n"
       << "| Positive (+1) | " << join(t.positive) << " |\n\n";
  }
  return md.str();
}

nlohmann::json to_json(const TopicReport& report) {
  nlohmann::json topics = nlohmann::json::array();
  for (std::size_t k = 0; k < report.topics.size(); ++k) {
    const auto& t = report.topics[k];
    topics.push_back(
        {{"topic", k}, {"negative", t.negative}, {"neutral", t.neutral}, {"positive", t.positive}});
  }
  return nlohmann::json{{"topics", topics}};
}

InfluenceScore influence(const model::FitResult& fit, const corpus::SparseCorpus& corpus,
                         std::size_t doc) {
  if (doc >= corpus.num_docs()) {
    throw ValidationError("document " + std::to_string(doc) + " out of range");
  }
  if (fit.theta.rows() != corpus.num_docs() || fit.beta.cols() != corpus.num_terms() ||
      fit.x.size() != corpus.num_authors()) {
    throw ValidationError("fit dimensions do not match the corpus");
  }
  const auto weights = fit.weights.empty() ? corpus::compute_weights(corpus) : fit.weights;
  const std::size_t author = corpus.author_of(doc);
  auto ll_at = [&](double x) {
    return model::log_likelihood_doc(
        corpus, doc, model::tbip_rate(fit.theta.row(doc), fit.beta, fit.eta, x, weights[author]));
  };
  const auto [lo, hi] = std::minmax_element(fit.x.begin(), fit.x.end());
  const double own = ll_at(fit.x[author]);
  return {doc, own - ll_at(0.0), own - ll_at(*hi), own - ll_at(*lo)};
}

double expected_count_ratio(const model::FitResult& fit, std::size_t topic, std::size_t term,
                            double x_lo, double x_hi) {
  if (topic >= fit.eta.rows() || term >= fit.eta.cols()) {
    throw ValidationError("topic or term index out of range");
  }
  return std::exp((x_hi - x_lo) * fit.eta(topic, term));
}

}  // namespace tbip::analysis
