#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tbip/analysis.hpp"
#include "tbip/error.hpp"
#include "tbip/model.hpp"

using namespace tbip;
using namespace tbip::analysis;
using T = corpus::SparseCorpus::Triplet;

namespace {

model::FitResult small_fit(double eta_value) {
  model::FitResult fit;
  fit.theta = Matrix(2, 2, std::vector<double>{1.0, 0.5, 0.2, 2.0});
  fit.beta = Matrix(2, 4, std::vector<double>{0.4, 0.3, 0.2, 0.1, 0.1, 0.2, 0.3, 0.4});
  fit.eta = Matrix(2, 4, eta_value);
  fit.eta_sigma = Matrix(2, 4, 0.1);
  fit.x = {-0.8, 1.3};
  fit.weights = {1.0, 1.0};
  fit.author_names = {"a", "b"};
  return fit;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("align standardizes and orients") {
  const std::vector<double> p{1.0, 2.0, 3.0};
  auto a = align(p);
  CHECK(a.values[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-12));
  CHECK(a.values[1] == doctest::Approx(0.0));
  CHECK(a.values[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
  CHECK_FALSE(a.sign_flipped);
  const std::vector<double> ref{3.0, 2.0, 1.0};
  auto b = align(p, std::span<const double>(ref), "ref");
  CHECK(b.sign_flipped);
  CHECK(b.values[0] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
  CHECK(b.reference_name == "ref");
  const std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK_THROWS_AS(align(flat), ZeroVariance);
}

TEST_CASE("correlation examples") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 1, 4, 3, 5};
  auto c = compare(a, b);
  CHECK(c.spearman == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(c.pearson == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
  CHECK(compare(a, a).spearman == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(compare(a, rev).spearman == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(compare(two, two), ValidationError);
}

TEST_CASE("ranks average ties") {
  const std::vector<double> v{10, 20, 20, 5};
  CHECK(average_ranks(v) == std::vector<double>{2.0, 3.5, 3.5, 1.0});
}

TEST_CASE("correlations are symmetric and Spearman ignores monotone maps") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(12), b(12);
    for (std::size_t i = 0; i < 12; ++i) {
      a[i] = n01(rng);
      b[i] = a[i] + n01(rng);
    }
    auto ab = compare(a, b), ba = compare(b, a);
    CHECK(ab.pearson == doctest::Approx(ba.pearson).epsilon(1e-14));
    CHECK(ab.spearman == doctest::Approx(ba.spearman).epsilon(1e-14));
    std::vector<double> mb(12);
    for (std::size_t i = 0; i < 12; ++i) mb[i] = std::exp(3.0 * b[i]) + 7.0;
    CHECK(compare(a, mb).spearman == doctest::Approx(ab.spearman).epsilon(1e-14));
  }
}

TEST_CASE("match by name reorders and rejects mismatches") {
  auto m = match_by_name({"a", "b", "c"}, {"c", "a", "b"}, {3.0, 1.0, 2.0});
  CHECK(m == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(match_by_name({"a", "b"}, {"a", "z"}, {1.0, 2.0}), ValidationError);
}

TEST_CASE("without ideology every pole lists the neutral terms") {
  auto fit = small_fit(0.0);
  corpus::Vocabulary vocab({"w0", "w1", "w2", "w3"});
  auto r = topic_report(fit, vocab, 3);
  REQUIRE(r.topics.size() == 2);
  for (const auto& t : r.topics) {
    CHECK(t.negative == t.neutral);
    CHECK(t.positive == t.neutral);
  }
  CHECK(r.topics[0].neutral == std::vector<std::string>{"w0", "w1", "w2"});
  CHECK(r.topics[1].neutral == std::vector<std::string>{"w3", "w2", "w1"});
  auto j = to_json(r);
  CHECK(j["topics"].size() == 2);
  CHECK(to_markdown(r).find("w0, w1, w2") != std::string::npos);
  CHECK_THROWS_AS(topic_report(fit, vocab, 5), ValidationError);
}

TEST_CASE("ties keep ascending term order") {
  auto fit = small_fit(0.0);
  fit.beta = Matrix(2, 4, 1.0);
  corpus::Vocabulary vocab({"d", "c", "b", "a"});
  auto r = topic_report(fit, vocab, 4);
  CHECK(r.topics[0].neutral == std::vector<std::string>{"d", "c", "b", "a"});
}

TEST_CASE("polarity moves terms between poles") {
  auto fit = small_fit(0.0);
  fit.eta(0, 3) = 3.0;
  fit.eta(0, 0) = -3.0;
  corpus::Vocabulary vocab({"w0", "w1", "w2", "w3"});
  auto r = topic_report(fit, vocab, 1);
  CHECK(r.topics[0].positive.front() == "w3");
  CHECK(r.topics[0].negative.front() == "w0");
  // exact mode only rescales by exp(sigma^2 / 2), uniform here
  auto e = topic_report(fit, vocab, 4, PoleIntensity::exact);
  auto p = topic_report(fit, vocab, 4);
  CHECK(e.topics[0].positive == p.topics[0].positive);
  fit.eta_sigma = Matrix();
  CHECK_THROWS_AS(topic_report(fit, vocab, 1, PoleIntensity::exact), ValidationError);
}

TEST_CASE("influence without ideology is zero") {
  auto fit = small_fit(0.0);
  corpus::SparseCorpus c(2, 4, {"a", "b"}, {0, 1}, {T{0, 0, 2}, T{0, 3, 1}, T{1, 2, 5}});
  for (std::size_t d = 0; d < 2; ++d) {
    auto s = influence(fit, c, d);
    CHECK(s.ratio_vs_zero == 0.0);
    CHECK(s.ratio_vs_max == 0.0);
    CHECK(s.ratio_vs_min == 0.0);
  }
}

TEST_CASE("influence matches a Poisson oracle") {
  auto fit = small_fit(0.0);
  fit.eta = Matrix(2, 4, std::vector<double>{0.5, -0.2, 0.0, 1.1, -0.7, 0.3, 0.9, -0.4});
  fit.weights = {1.3, 0.6};
  corpus::SparseCorpus c(2, 4, {"a", "b"}, {0, 1}, {T{0, 0, 2}, T{0, 3, 1}, T{1, 2, 5}});
  auto ll = [&](std::size_t d, double x) {
    double s = 0.0;
    const double w = fit.weights[c.author_of(d)];
    for (std::size_t v = 0; v < 4; ++v) {
      double rate = 0.0;
      for (std::size_t k = 0; k < 2; ++k) rate += fit.theta(d, k) * fit.beta(k, v) * std::exp(x * fit.eta(k, v));
      s += oracle::poisson_log_pmf(int(c.count(d, v)), w * rate);
    }
    return s;
  };
  auto s = influence(fit, c, 0);
  CHECK(s.ratio_vs_zero == doctest::Approx(ll(0, -0.8) - ll(0, 0.0)).epsilon(1e-12));
  CHECK(s.ratio_vs_max == doctest::Approx(ll(0, -0.8) - ll(0, 1.3)).epsilon(1e-12));
  CHECK(s.ratio_vs_min == 0.0);
  CHECK_THROWS_AS(influence(fit, c, 2), ValidationError);
}

TEST_CASE("expected count ratio agrees with the rate") {
  auto fit = small_fit(0.0);
  fit.eta(1, 2) = std::log(2.0);
  CHECK(expected_count_ratio(fit, 1, 2, -1.0, 1.0) == doctest::Approx(4.0).epsilon(1e-14));
  // single-topic document: the rate ratio is the same quantity
  const std::vector<double> theta{0.0, 1.0};
  auto hi = model::tbip_rate(theta, fit.beta, fit.eta, 1.0, 1.0);
  auto lo = model::tbip_rate(theta, fit.beta, fit.eta, -1.0, 1.0);
  CHECK(hi[2] / lo[2] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_AS(expected_count_ratio(fit, 2, 0, 0.0, 1.0), ValidationError);
}

}
