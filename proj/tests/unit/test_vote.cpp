#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "oracles.hpp"
#include "tbip/analysis.hpp"
#include "tbip/error.hpp"
#include "tbip/synth.hpp"
#include "tbip/vote.hpp"

using namespace tbip;
using namespace tbip::vote;
namespace fs = std::filesystem;

TEST_SUITE("vote") {

TEST_CASE("vote probability") {
  CHECK(vote_prob(0.0, 5.0, 0.0) == 0.5);
  CHECK(vote_prob(0.0, 1.0, 3.0) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-15));
  CHECK(vote_prob(0.5, 1.0, -1.0) < vote_prob(0.5, 0.0, 0.0));
  CHECK(vote_prob(0.0, 1.0, 700.0) == 1.0);
  CHECK(vote_prob(0.0, 1.0, -700.0) > 0.0);
  CHECK(vote_prob(0.0, 1.0, -700.0) == doctest::Approx(std::exp(-700.0)).epsilon(1e-12));
  CHECK(vote_prob(0.3, -1.7, 0.9) == vote_prob(0.3, 1.7, -0.9));
}

TEST_CASE("vote matrix validation") {
  CHECK_THROWS_AS(VoteMatrix({"a"}, {"b"}, {{0, 1, true}}), ValidationError);
  CHECK_THROWS_AS(VoteMatrix({"a"}, {"b"}, {{0, 0, true}, {0, 0, false}}), ValidationError);
  VoteMatrix m({"a", "b"}, {"x", "y"}, {{1, 1, true}, {0, 1, false}, {0, 0, true}});
  CHECK(m.votes_on(1).size() == 2);
  CHECK(m.votes_on(1)[0].lawmaker == 0);
}

TEST_CASE("votes csv drops anything but yea and nay") {
  auto dir = fs::temp_directory_path() / "tbip_unit_votes";
  fs::create_directories(dir);
  std::ofstream(dir / "v.csv") << "lawmaker_name,bill_id,vote\nA,b1,1\nB,b1,0\nC,b1,present\nC,b2,1\n";
  auto m = read_votes_csv(dir / "v.csv");
  CHECK(m.num_votes() == 3);
  CHECK(m.num_lawmakers() == 3);
  write_votes_csv(dir / "w.csv", m);
  auto back = read_votes_csv(dir / "w.csv");
  CHECK(back.num_votes() == 3);
  CHECK(back.lawmakers() == m.lawmakers());
}

TEST_CASE("Bernoulli likelihood gradient matches central differences") {
  VoteMatrix m({"a", "b", "c"}, {"x", "y"}, {{0, 0, true}, {1, 0, false}, {2, 0, true}, {0, 1, false}, {2, 1, true}});
  VoteLikelihood lik(m);
  vi::BlockArrays s{{0.3, -1.2, 0.8}, {0.1, -0.4}, {1.5, -0.7}};
  const std::vector<std::size_t> batch{0, 1};
  vi::BlockArrays d{{0, 0, 0}, {0, 0}, {0, 0}};
  const double ll = lik.log_likelihood(s, batch, &d);
  double expect = 0.0;
  for (const auto& v : m.votes()) {
    const double p = 1.0 / (1.0 + std::exp(-(s[kAlpha][v.bill] + s[kX][v.lawmaker] * s[kEta][v.bill])));
    expect += v.yea ? std::log(p) : std::log1p(-p);
  }
  CHECK(ll == doctest::Approx(expect).epsilon(1e-13));
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t i = 0; i < s[b].size(); ++i) {
      auto fd = oracle::central_difference([&] { return lik.log_likelihood(s, batch, nullptr); }, s[b][i], 1e-6);
      CHECK(oracle::relative_error(d[b][i], fd) < 1e-7);
    }
  }
}

TEST_CASE("synthetic recovery") {
  synth::VoteSynthSpec spec;
  spec.seed = 5;
  auto sample = synth::sample_votes(spec);
  vi::TrainConfig cfg;
  cfg.batch_size = spec.num_bills;
  cfg.max_steps = 1500;
  cfg.adam.learning_rate = 0.05;
  auto fit = train_vote(sample.votes, cfg);
  CHECK(std::abs(analysis::compare(fit.x, sample.x).pearson) >= 0.95);
}

TEST_CASE("unanimous votes carry no ideological signal") {
  std::vector<Vote> votes;
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 20; ++j) votes.push_back({i, j, true});
  }
  VoteMatrix m(synth::author_labels(10), synth::author_labels(20), votes);
  vi::TrainConfig cfg;
  cfg.batch_size = 20;
  cfg.max_steps = 1500;
  cfg.adam.learning_rate = 0.05;
  auto fit = train_vote(m, cfg);
  // alpha and a shared x * eta offset both explain unanimity; neither orders lawmakers
  for (std::size_t j = 0; j < 20; ++j) {
    for (std::size_t i = 0; i < 10; ++i) CHECK(vote_prob(fit.alpha[j], fit.eta[j], fit.x[i]) > 0.9);
  }
  const auto [lo, hi] = std::minmax_element(fit.x.begin(), fit.x.end());
  CHECK((*lo > 0.0 || *hi < 0.0));
}

TEST_CASE("shifting ideal points after fitting lowers the ELBO") {
  synth::VoteSynthSpec spec;
  spec.num_lawmakers = 20;
  spec.num_bills = 60;
  spec.seed = 2;
  auto sample = synth::sample_votes(spec);
  vi::TrainConfig cfg;
  cfg.batch_size = 60;
  cfg.max_steps = 800;
  cfg.adam.learning_rate = 0.05;
  vi::Rng rng(cfg.seed);
  auto st = make_state(sample.votes, rng);
  VoteLikelihood lik(sample.votes);
  vi::fit(st, lik, cfg, rng);
  std::vector<std::size_t> all(60);
  std::iota(all.begin(), all.end(), 0);
  auto shifted = st;
  for (auto& m : shifted.blocks[kX].family.mu) m += 5.0;
  double before = 0.0, after = 0.0;
  for (int r = 0; r < 200; ++r) {
    auto noise = vi::draw_noise(st, rng);
    before += vi::elbo_estimate(st, all, lik, 60.0, noise);
    after += vi::elbo_estimate(shifted, all, lik, 60.0, noise);
  }
  CHECK(after < before);
}

TEST_CASE("training is deterministic and rejects silent lawmakers") {
  synth::VoteSynthSpec spec;
  spec.num_lawmakers = 8;
  spec.num_bills = 10;
  auto sample = synth::sample_votes(spec);
  vi::TrainConfig cfg;
  cfg.max_steps = 30;
  auto a = train_vote(sample.votes, cfg);
  auto b = train_vote(sample.votes, cfg);
  CHECK(a.x == b.x);
  CHECK(a.elbo_trace == b.elbo_trace);
  VoteMatrix silent({"a", "b"}, {"x"}, {{0, 0, true}});
  CHECK_THROWS_AS(train_vote(silent, cfg), ValidationError);
}

}
