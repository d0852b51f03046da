#pragma once

// Post-fit analysis: ideal-point standardization, correlation metrics,
// ideological topic reports and the fixed-ideal-point influence diagnostic.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbip/corpus.hpp"
#include "tbip/model.hpp"

namespace tbip::analysis {

struct AlignedIdealPoints {
  std::vector<double> values;
  std::string reference_name;
  bool sign_flipped = false;
};

// Standardizes to mean 0 and population standard deviation 1, then negates
// when the Pearson correlation with `reference` is negative.
AlignedIdealPoints align(std::span<const double> points,
                         std::optional<std::span<const double>> reference = std::nullopt,
                         std::string reference_name = "");

double pearson(std::span<const double> a, std::span<const double> b);
// 1-based ranks; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
};

// Requires at least three points. Spearman is the Pearson correlation of
// average-tied ranks.
Correlation compare(std::span<const double> a, std::span<const double> b);

// Reorders `scores` (given for `names`) to follow `order`. Throws
// ValidationError when the name sets differ.
std::vector<double> match_by_name(const std::vector<std::string>& order,
                                  const std::vector<std::string>& names,
                                  const std::vector<double>& scores);

enum class PoleIntensity {
  plug_in,  // beta_hat * exp(+-eta_hat)
  exact,    // beta_hat * exp(+-eta_hat + sigma_eta^2 / 2)
};

struct TopicTerms {
  std::vector<std::string> negative;
  std::vector<std::string> neutral;
  std::vector<std::string> positive;
};

struct TopicReport {
  std::vector<TopicTerms> topics;
};

// Top `m` terms per topic ordered by beta_hat (neutral) and by the intensity
// at ideal points -1 and +1. Ties keep ascending term order. In exact mode
// beta_hat is already the lognormal mean, so only eta's scale enters.
TopicReport topic_report(const model::FitResult& fit, const corpus::Vocabulary& vocab,
                         std::size_t m, PoleIntensity mode = PoleIntensity::plug_in);

std::string to_markdown(const TopicReport& report);
nlohmann::json to_json(const TopicReport& report);

struct InfluenceScore {
  std::size_t doc = 0;
  double ratio_vs_zero = 0.0;
  double ratio_vs_max = 0.0;
  double ratio_vs_min = 0.0;
};

// Log-likelihood of document `doc` at its author's fitted ideal point minus
// the same at 0, at the largest and at the smallest fitted ideal point, with
// theta, beta, eta and the author's weight held fixed.
InfluenceScore influence(const model::FitResult& fit, const corpus::SparseCorpus& corpus,
                         std::size_t doc);

// exp((x_hi - x_lo) * eta_hat_kv).
double expected_count_ratio(const model::FitResult& fit, std::size_t topic, std::size_t term,
                            double x_lo, double x_hi);

}  // namespace tbip::analysis
