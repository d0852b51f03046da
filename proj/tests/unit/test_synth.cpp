#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "tbip/error.hpp"
#include "tbip/synth.hpp"

using namespace tbip;
using namespace tbip::synth;

TEST_SUITE("synth") {

TEST_CASE("zero polarity gives zero eta") {
  SynthSpec spec;
  spec.num_docs = 50;
  spec.num_terms = 20;
  spec.num_authors = 5;
  spec.polarity_scale = 0.0;
  auto s = sample_tbip(spec);
  for (double e : s.truth.eta.data()) CHECK(e == 0.0);
  CHECK(s.corpus.num_docs() + s.dropped_docs == 50);
  CHECK(s.truth.theta.rows() == s.corpus.num_docs());
}

TEST_CASE("sampling is deterministic in the seed") {
  SynthSpec spec;
  spec.num_docs = 60;
  spec.num_terms = 30;
  spec.num_authors = 6;
  spec.seed = 11;
  auto a = sample_tbip(spec);
  auto b = sample_tbip(spec);
  CHECK(a.corpus == b.corpus);
  CHECK(a.truth.x == b.truth.x);
  spec.seed = 12;
  CHECK_FALSE(sample_tbip(spec).corpus == a.corpus);
}

TEST_CASE("layouts") {
  vi::Rng rng(2);
  auto two = sample_ideal_points(400, Layout::two_cluster, 0.0, rng);
  for (std::size_t i = 0; i < two.size(); ++i) CHECK(std::abs(two[i]) == 1.0);
  auto uni = sample_ideal_points(400, Layout::uniform, 0.0, rng);
  for (double x : uni) CHECK(std::abs(x) <= 1.0);
}

TEST_CASE("empirical counts match the Poisson rate") {
  TbipTruth truth;
  truth.theta = Matrix(1, 2, std::vector<double>{0.7, 1.6});
  truth.beta = Matrix(2, 3, std::vector<double>{0.5, 1.0, 0.2, 0.3, 0.1, 2.0});
  truth.eta = Matrix(2, 3, std::vector<double>{0.4, -0.9, 0.0, 1.2, 0.3, -0.5});
  truth.x = {0.6};
  const std::size_t draws = 100000;
  std::vector<double> sum(3, 0.0);
  vi::Rng rng(4);
  for (std::size_t n = 0; n < draws; ++n) {
    auto c = sample_tbip_counts(truth, {0}, 1, rng);
    for (std::size_t v = 0; v < 3; ++v) sum[v] += c.count(0, v);
  }
  for (std::size_t v = 0; v < 3; ++v) {
    double rate = 0.0;
    for (std::size_t k = 0; k < 2; ++k) rate += truth.theta(0, k) * truth.beta(k, v) * std::exp(0.6 * truth.eta(k, v));
    const double se = std::sqrt(rate / double(draws));
    CHECK(std::abs(sum[v] / double(draws) - rate) < 4.0 * se);
  }
}

TEST_CASE("yea rates match the logistic probability") {
  const std::vector<double> x{0.5}, alpha{0.3, 10.0}, eta{-1.2, 0.0};
  const std::size_t draws = 20000;
  double yea0 = 0.0, yea1 = 0.0;
  vi::Rng rng(9);
  for (std::size_t n = 0; n < draws; ++n) {
    auto m = sample_votes_given(x, alpha, eta, rng);
    for (const auto& v : m.votes()) (v.bill == 0 ? yea0 : yea1) += v.yea ? 1.0 : 0.0;
  }
  const double p = 1.0 / (1.0 + std::exp(-(0.3 - 0.6)));
  CHECK(std::abs(yea0 / draws - p) < 4.0 * std::sqrt(p * (1 - p) / draws));
  CHECK(yea1 / draws > 0.999);
}

TEST_CASE("vote and wordfish samplers") {
  VoteSynthSpec vs;
  vs.num_lawmakers = 10;
  vs.num_bills = 15;
  auto v = sample_votes(vs);
  CHECK(v.votes.num_votes() == 150);
  CHECK(v.x.size() == 10);
  WordfishSynthSpec ws;
  auto w = sample_wordfish(ws);
  CHECK(w.counts.rows() == 30);
  CHECK(w.counts.cols() == 200);
  WordshoalSynthSpec ss;
  auto s = sample_wordshoal(ss);
  CHECK(s.data.debate_of.size() == s.data.corpus.num_docs());
  CHECK(s.x.size() == 30);
}

TEST_CASE("truth files round trip") {
  auto dir = std::filesystem::temp_directory_path() / "tbip_unit_truth";
  std::filesystem::create_directories(dir);
  write_truth(dir / "truth.json", {"a", "b"}, {0.25, -1.5}, {{"note", 1}});
  auto t = read_truth(dir / "truth.json");
  CHECK(t.names == std::vector<std::string>{"a", "b"});
  CHECK(t.x == std::vector<double>{0.25, -1.5});
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec;
  spec.num_topics = 0;
  CHECK_THROWS_AS(sample_tbip(spec), ValidationError);
  spec = SynthSpec{};
  spec.num_docs = 3;
  CHECK_THROWS_AS(sample_tbip(spec), ValidationError);
}

}
