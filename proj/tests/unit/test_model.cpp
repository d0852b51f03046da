#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tbip/error.hpp"
#include "tbip/model.hpp"
#include "tbip/pf.hpp"
#include "tbip/synth.hpp"

using namespace tbip;
using namespace tbip::model;
using T = corpus::SparseCorpus::Triplet;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

// D=3, V=5, S=2
corpus::SparseCorpus small_corpus() {
  return corpus::SparseCorpus(3, 5, {"a", "b"}, {0, 1, 0},
                              {T{0, 0, 2}, T{0, 3, 1}, T{1, 1, 4}, T{1, 4, 1}, T{2, 2, 3}, T{2, 0, 1}});
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("rate matches a direct evaluation") {
  std::mt19937_64 rng(1);
  auto theta = random_matrix(1, 3, rng, 0.1, 2.0);
  auto beta = random_matrix(3, 4, rng, 0.1, 2.0);
  auto eta = random_matrix(3, 4, rng, -1.0, 1.0);
  auto r = tbip_rate(theta.row(0), beta, eta, 0.7, 1.3);
  for (std::size_t v = 0; v < 4; ++v) {
    double expect = 0.0;
    for (std::size_t k = 0; k < 3; ++k) expect += theta(0, k) * beta(k, v) * std::exp(0.7 * eta(k, v));
    CHECK(r[v] == doctest::Approx(1.3 * expect).epsilon(1e-14));
  }
}

TEST_CASE("zero eta reduces to the Poisson factorization rate bitwise") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto theta = random_matrix(1, 4, rng, 0.0, 3.0);
    auto beta = random_matrix(4, 6, rng, 0.0, 3.0);
    Matrix eta(4, 6, 0.0);
    CHECK(tbip_rate(theta.row(0), beta, eta, ux(rng), 1.0) == pf::rate(theta.row(0), beta));
  }
}

TEST_CASE("joint sign flip of eta and x leaves rates bitwise unchanged") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto theta = random_matrix(1, 3, rng, 0.0, 3.0);
    auto beta = random_matrix(3, 5, rng, 0.0, 3.0);
    auto eta = random_matrix(3, 5, rng, -2.0, 2.0);
    Matrix neg = eta;
    for (auto& v : neg.data()) v = -v;
    const double x = ux(rng);
    CHECK(tbip_rate(theta.row(0), beta, eta, x, 0.8) == tbip_rate(theta.row(0), beta, neg, -x, 0.8));
  }
}

TEST_CASE("rate overflow is an error, not a clamp") {
  Matrix theta(1, 1, 1.0), beta(1, 1, 1.0), eta(1, 1, 800.0);
  CHECK_THROWS_AS(tbip_rate(theta.row(0), beta, eta, 1.0, 1.0), NumericError);
  CHECK_THROWS_AS(tbip_rate(theta.row(0), beta, eta, 1.0, 0.0), ValidationError);
}

TEST_CASE("document log-likelihood matches the Poisson pmf") {
  auto c = small_corpus();
  std::vector<double> rate{0.5, 1.5, 2.0, 0.1, 3.0};
  double expect = 0.0;
  for (std::size_t v = 0; v < 5; ++v) expect += oracle::poisson_log_pmf(int(c.count(1, v)), rate[v]);
  CHECK(std::abs(log_likelihood_doc(c, 1, rate) - expect) < 1e-12);
}

TEST_CASE("batched likelihood equals the per-document sum") {
  auto c = small_corpus();
  std::mt19937_64 rng(5);
  auto theta = random_matrix(3, 2, rng, 0.2, 2.0);
  auto beta = random_matrix(2, 5, rng, 0.2, 2.0);
  auto eta = random_matrix(2, 5, rng, -1.0, 1.0);
  std::vector<double> x{0.4, -0.9};
  std::vector<double> w{1.2, 0.8};
  TbipLikelihood lik(c, w, 2);
  vi::BlockArrays s{theta.data(), beta.data(), eta.data(), x};
  const std::vector<std::size_t> batch{0, 1, 2};
  double expect = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    expect += log_likelihood_doc(c, d, tbip_rate(theta.row(d), beta, eta, x[c.author_of(d)], w[c.author_of(d)]));
  }
  CHECK(lik.log_likelihood(s, batch, nullptr) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ELBO gradient matches central differences on a small instance") {
  auto c = small_corpus();
  std::mt19937_64 mrng(6);
  Initialization init{random_matrix(3, 2, mrng, 0.3, 2.0), random_matrix(2, 5, mrng, 0.3, 2.0)};
  vi::Rng rng(7);
  auto st = make_state(init, 2, {}, rng);
  for (auto& b : st.blocks) {
    for (auto& ls : b.family.log_sigma) ls = -1.0;
  }
  TbipLikelihood lik(c, corpus::compute_weights(c), 2);
  auto noise = vi::draw_noise(st, rng);
  const std::vector<std::size_t> batch{0, 2};
  auto g = vi::gradient(st, batch, lik, 3.0, noise);
  auto f = [&] { return vi::elbo_estimate(st, batch, lik, 3.0, noise); };
  double worst = 0.0;
  for (std::size_t b = 0; b < st.blocks.size(); ++b) {
    for (std::size_t i = 0; i < st.blocks[b].family.size(); ++i) {
      worst = std::max(worst, oracle::relative_error(
                                  g.d_mu[b][i], oracle::central_difference(f, st.blocks[b].family.mu[i], 1e-5)));
      worst = std::max(worst, oracle::relative_error(
                                  g.d_log_sigma[b][i],
                                  oracle::central_difference(f, st.blocks[b].family.log_sigma[i], 1e-5)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("threaded likelihood is reproducible and agrees with one thread") {
  std::vector<T> trips;
  std::vector<std::size_t> author_of;
  std::mt19937_64 rng(8);
  std::poisson_distribution<int> pois(1.0);
  for (std::size_t d = 0; d < 40; ++d) {
    author_of.push_back(d % 7);
    for (std::size_t v = 0; v < 12; ++v) {
      if (int y = pois(rng); y > 0) trips.push_back({d, v, double(y)});
    }
  }
  corpus::SparseCorpus c(40, 12, {"a", "b", "c", "d", "e", "f", "g"}, author_of, trips);
  auto theta = random_matrix(40, 3, rng, 0.2, 2.0);
  auto beta = random_matrix(3, 12, rng, 0.2, 2.0);
  auto eta = random_matrix(3, 12, rng, -1.0, 1.0);
  auto xs = random_matrix(1, 7, rng, -1.0, 1.0);
  vi::BlockArrays s{theta.data(), beta.data(), eta.data(), xs.data()};
  std::vector<std::size_t> batch(40);
  std::iota(batch.begin(), batch.end(), 0);
  const auto w = corpus::compute_weights(c);
  auto run = [&](std::size_t threads) {
    TbipLikelihood lik(c, w, 3, threads);
    vi::BlockArrays d{std::vector<double>(120), std::vector<double>(36), std::vector<double>(36),
                      std::vector<double>(7)};
    const double ll = lik.log_likelihood(s, batch, &d);
    return std::make_pair(ll, d);
  };
  auto one = run(1);
  auto three = run(3);
  auto again = run(3);
  CHECK(three.first == again.first);
  CHECK(three.second == again.second);
  CHECK(three.first == doctest::Approx(one.first).epsilon(1e-12));
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t i = 0; i < one.second[b].size(); ++i) {
      CHECK(three.second[b][i] == doctest::Approx(one.second[b][i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("posterior means") {
  Initialization init{Matrix(2, 1, 2.0), Matrix(1, 3, 0.5)};
  vi::Rng rng(0);
  auto st = make_state(init, 2, {}, rng);
  auto fit = posterior_means(st, 1);
  CHECK(fit.theta.rows() == 2);
  CHECK(fit.beta.cols() == 3);
  CHECK(fit.theta(0, 0) == doctest::Approx(2.0 * std::exp(0.005)).epsilon(1e-12));
  CHECK(fit.x == st.blocks[kX].family.mu);
  CHECK(fit.eta_sigma(0, 0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(make_state({Matrix(2, 1, 0.0), Matrix(1, 3, 1.0)}, 2, {}, rng), ValidationError);
}

TEST_CASE("zero eta samples leave x without a likelihood gradient") {
  auto c = small_corpus();
  std::mt19937_64 rng(12);
  TbipLikelihood lik(c, corpus::compute_weights(c), 2);
  vi::BlockArrays s{random_matrix(3, 2, rng, 0.2, 2.0).data(), random_matrix(2, 5, rng, 0.2, 2.0).data(),
                    std::vector<double>(10, 0.0), {0.7, -1.4}};
  const std::vector<std::size_t> all{0, 1, 2};
  vi::BlockArrays d{std::vector<double>(6), std::vector<double>(10), std::vector<double>(10), std::vector<double>(2)};
  lik.log_likelihood(s, all, &d);
  CHECK(d[kX] == std::vector<double>{0.0, 0.0});
}

TEST_CASE("pinned ideology reduces the likelihood to Poisson factorization") {
  auto c = small_corpus();
  std::mt19937_64 rng(13);
  TbipLikelihood lik(c, {1.0, 1.0}, 2);
  const Matrix theta = random_matrix(3, 2, rng, 0.2, 2.0), beta = random_matrix(2, 5, rng, 0.2, 2.0);
  vi::BlockArrays s{theta.data(), beta.data(), std::vector<double>(10, 0.0), {0.7, -1.4}};
  const std::vector<std::size_t> all{0, 1, 2};
  double expect = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto rate = pf::rate(theta.row(d), beta);
    for (std::size_t v = 0; v < 5; ++v) expect += oracle::poisson_log_pmf(int(c.count(d, v)), rate[v]);
  }
  CHECK(lik.log_likelihood(s, all, nullptr) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("smoothed ELBO rises over the first thousand steps") {
  synth::SynthSpec spec;
  spec.seed = 1;
  auto sample = synth::sample_tbip(spec);
  vi::TrainConfig cfg;
  cfg.num_topics = spec.num_topics;
  cfg.max_steps = 1000;
  cfg.elbo_report_interval = 1;
  cfg.pretrain_sweeps = 30;
  cfg.use_log_transform = false;
  auto fit = train_tbip(sample.corpus, cfg, {});
  REQUIRE(fit.elbo_trace.size() == 1000);
  std::vector<double> window(10, 0.0);
  for (std::size_t i = 0; i < 1000; ++i) window[i / 100] += fit.elbo_trace[i].elbo / 100.0;
  for (std::size_t w = 1; w < window.size(); ++w) CHECK(window[w] >= window[w - 1] - 0.01 * std::abs(window[w - 1]));
  CHECK(window.back() > window.front());
}

TEST_CASE("training with a given initialization is deterministic") {
  auto c = small_corpus();
  Initialization init{Matrix(3, 2, 1.0), Matrix(2, 5, 0.5)};
  init.theta(0, 1) = 0.3;
  vi::TrainConfig cfg;
  cfg.num_topics = 2;
  cfg.max_steps = 50;
  cfg.batch_size = 2;
  cfg.elbo_report_interval = 10;
  cfg.use_log_transform = false;
  auto a = train_tbip(c, cfg, {}, init);
  auto b = train_tbip(c, cfg, {}, init);
  CHECK(a.x == b.x);
  CHECK(a.elbo_trace == b.elbo_trace);
  CHECK(a.elbo_trace.size() == 5);
  CHECK(a.weights == corpus::compute_weights(c));
  CHECK(a.config["model"] == "tbip");
  cfg.num_topics = 3;
  CHECK_THROWS_AS(train_tbip(c, cfg, {}, init), ValidationError);
}

}
