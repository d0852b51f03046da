#include <doctest.h>

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tbip/error.hpp"
#include "tbip/grad_engine.hpp"

using namespace tbip;
using namespace tbip::vi;

namespace {

// y_u ~ N(a * b_u, 1) with a lognormal-Gamma block and a Gaussian-Normal block.
class ToyModel final : public LikelihoodModel {
 public:
  std::vector<double> y{0.5, -1.0, 2.0};
  std::size_t num_units() const override { return y.size(); }
  double log_likelihood(const BlockArrays& s, std::span<const std::size_t> batch,
                        BlockArrays* d) const override {
    double ll = 0.0;
    for (std::size_t u : batch) {
      const double r = y[u] - s[0][0] * s[1][u];
      ll += -0.5 * r * r;
      if (d) {
        (*d)[0][0] += r * s[1][u];
        (*d)[1][u] += r * s[0][0];
      }
    }
    return ll;
  }
};

VariationalState toy_state() {
  VariationalState st;
  st.blocks.push_back({"a", lognormal_family({0.2}, {-0.5}), Prior::gamma(2.0, 1.5)});
  st.blocks.push_back({"b", gaussian_family({0.1, -0.3, 0.7}, {-1.0, -0.2, 0.3}), Prior::normal(0.5, 2.0)});
  return st;
}

// Gaussian mean with known unit variance: posterior is N(sum y / (n + 1), 1 / (n + 1)).
class MeanModel final : public LikelihoodModel {
 public:
  std::vector<double> y;
  std::size_t num_units() const override { return y.size(); }
  double log_likelihood(const BlockArrays& s, std::span<const std::size_t> batch,
                        BlockArrays* d) const override {
    double ll = 0.0;
    for (std::size_t u : batch) {
      const double r = y[u] - s[0][0];
      ll += -0.5 * r * r;
      if (d) (*d)[0][0] += r;
    }
    return ll;
  }
};

class NoData final : public LikelihoodModel {
 public:
  std::size_t num_units() const override { return 1; }
  double log_likelihood(const BlockArrays&, std::span<const std::size_t>, BlockArrays*) const override {
    return 0.0;
  }
};

class NanModel final : public LikelihoodModel {
 public:
  std::size_t num_units() const override { return 1; }
  double log_likelihood(const BlockArrays&, std::span<const std::size_t>, BlockArrays*) const override {
    return std::numeric_limits<double>::quiet_NaN();
  }
};

}  // namespace

TEST_SUITE("grad_engine") {

TEST_CASE("reparameterization") {
  auto g = gaussian_family({1.0, -2.0}, {0.0, std::log(3.0)});
  auto s = reparameterize(g, std::vector<double>{0.5, -1.0});
  CHECK(s[0] == 1.5);
  CHECK(s[1] == doctest::Approx(-5.0).epsilon(1e-15));
  auto l = lognormal_family({0.0}, {std::log(0.5)});
  CHECK(reparameterize(l, std::vector<double>{2.0})[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(l.mean()[0] == doctest::Approx(std::exp(0.125)).epsilon(1e-15));
  CHECK_THROWS_AS(reparameterize(g, std::vector<double>{0.0}), ValidationError);
}

TEST_CASE("prior densities match independent formulas") {
  auto n = Prior::normal(0.5, 2.0);
  auto g = Prior::gamma(0.3, 0.3);
  for (double x : {0.01, 0.7, 3.5}) {
    CHECK(n.log_density(x) == doctest::Approx(oracle::normal_log_pdf(x, 0.5, 2.0)).epsilon(1e-13));
    CHECK(g.log_density(x) == doctest::Approx(oracle::gamma_log_pdf(x, 0.3, 0.3)).epsilon(1e-13));
    double xx = x;
    auto fd = oracle::central_difference([&] { return g.log_density(xx); }, xx, 1e-6 * x);
    CHECK(oracle::relative_error(g.d_log_density(x), fd) < 1e-6);
  }
  CHECK_THROWS_AS(g.log_density(0.0), NumericError);
  CHECK_THROWS_AS(Prior::normal(0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(Prior::gamma(-1.0, 1.0), ValidationError);
}

TEST_CASE("entropy and prior terms match the oracle") {
  auto st = toy_state();
  BlockArrays s{{1.3}, {0.2, -0.4, 1.1}};
  auto pe = entropy_and_prior(st, s);
  double lp = oracle::gamma_log_pdf(1.3, 2.0, 1.5);
  double lq = oracle::normal_log_pdf(std::log(1.3), 0.2, std::exp(-0.5)) - std::log(1.3);
  const auto& b = st.blocks[1].family;
  for (std::size_t i = 0; i < 3; ++i) {
    lp += oracle::normal_log_pdf(s[1][i], 0.5, 2.0);
    lq += oracle::normal_log_pdf(s[1][i], b.mu[i], std::exp(b.log_sigma[i]));
  }
  CHECK(pe.log_prior == doctest::Approx(lp).epsilon(1e-13));
  CHECK(pe.log_q == doctest::Approx(lq).epsilon(1e-13));
}

TEST_CASE("single-draw ELBO gradient matches central differences") {
  ToyModel model;
  auto st = toy_state();
  Rng rng(4);
  auto noise = draw_noise(st, rng);
  const std::vector<std::size_t> batch{0, 2};
  const auto g = gradient(st, batch, model, 3.0, noise);
  auto f = [&] { return elbo_estimate(st, batch, model, 3.0, noise); };
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
  CHECK(worst < 1e-6);
}

TEST_CASE("minibatch scaling") {
  ToyModel model;
  auto st = toy_state();
  Rng rng(1);
  auto noise = draw_noise(st, rng);
  const std::vector<std::size_t> one{1};
  const std::vector<std::size_t> all{0, 1, 2};
  auto t1 = evaluate(st, one, model, 3.0, noise, nullptr);
  auto s = reparameterize(st, noise);
  CHECK(t1.log_likelihood == doctest::Approx(3.0 * model.log_likelihood(s, one, nullptr)));
  auto t3 = evaluate(st, all, model, 3.0, noise, nullptr);
  CHECK(t3.log_likelihood == doctest::Approx(model.log_likelihood(s, all, nullptr)));
  CHECK(t3.elbo == doctest::Approx(t3.log_prior + t3.log_likelihood - t3.log_q));
  CHECK_THROWS_AS(evaluate(st, {}, model, 3.0, noise, nullptr), ValidationError);
}

TEST_CASE("first Adam step moves each parameter by the learning rate") {
  AdamState adam(3, AdamConfig{0.1, 0.9, 0.999, 0.0});
  std::vector<double> p{0.0, 1.0, 2.0};
  adam_step(adam, p, std::vector<double>{5.0, -0.001, 0.0});
  CHECK(p[0] == doctest::Approx(0.1));
  CHECK(p[1] == doctest::Approx(0.9));
  CHECK(adam.t == 1);
  AdamState small(1, AdamConfig{});
  std::vector<double> q{0.0};
  adam_step(small, q, std::vector<double>{0.0});
  CHECK(q[0] == 0.0);
  CHECK_THROWS_AS(adam_step(small, q, std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST_CASE("batch sampler") {
  BatchSampler sampler(10, 4);
  Rng rng(0);
  auto b = sampler.next(rng);
  std::vector<std::size_t> batch(b.begin(), b.end());
  CHECK(batch.size() == 4);
  CHECK(std::is_sorted(batch.begin(), batch.end()));
  CHECK(std::adjacent_find(batch.begin(), batch.end()) == batch.end());
  BatchSampler again(10, 4);
  Rng rng2(0);
  auto b2 = again.next(rng2);
  CHECK(std::vector<std::size_t>(b2.begin(), b2.end()) == batch);
  BatchSampler full(5, 100);
  CHECK(full.next(rng).size() == 5);
}

TEST_CASE("training recovers a conjugate Gaussian posterior") {
  MeanModel model;
  model.y = {1.0, 2.0, 0.5, 1.5, 2.5, 0.0, 1.0, 3.0, 1.0};
  const double n = double(model.y.size());
  double sum = 0.0;
  for (double y : model.y) sum += y;
  VariationalState st;
  st.blocks.push_back({"m", gaussian_family({0.0}, {0.0}), Prior::normal(0.0, 1.0)});
  TrainConfig cfg;
  cfg.batch_size = model.y.size();
  cfg.max_steps = 6000;
  cfg.mc_samples = 4;
  cfg.adam.learning_rate = 0.01;
  Rng rng(11);
  auto trace = fit(st, model, cfg, rng);
  CHECK(trace.back().step == 6000);
  CHECK(trace.size() == 60);
  CHECK(st.blocks[0].family.mu[0] == doctest::Approx(sum / (n + 1.0)).epsilon(0.03));
  CHECK(std::exp(st.blocks[0].family.log_sigma[0]) ==
        doctest::Approx(1.0 / std::sqrt(n + 1.0)).epsilon(0.05));
}

TEST_CASE("non-finite objective reports the failing step") {
  NanModel model;
  VariationalState st;
  st.blocks.push_back({"m", gaussian_family({0.0}, {0.0}), Prior::normal(0.0, 1.0)});
  TrainConfig cfg;
  cfg.max_steps = 5;
  Rng rng(0);
  try {
    fit(st, model, cfg, rng);
    FAIL("expected NonFiniteElbo");
  } catch (const NonFiniteElbo& e) {
    CHECK(e.step() == 1);
    CHECK(e.exit_code() == 3);
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  ToyModel model;
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_steps = 200;
  cfg.elbo_report_interval = 10;
  auto a = toy_state();
  auto b = toy_state();
  Rng r1(9), r2(9);
  auto ta = fit(a, model, cfg, r1);
  auto tb = fit(b, model, cfg, r2);
  CHECK(ta == tb);
  CHECK(a.blocks[1].family.mu == b.blocks[1].family.mu);
}

TEST_CASE("train config json round trip and validation") {
  TrainConfig cfg;
  cfg.num_topics = 7;
  cfg.seed = 99;
  cfg.adam.learning_rate = 0.05;
  cfg.use_log_transform = false;
  nlohmann::json j = cfg;
  auto back = j.get<TrainConfig>();
  CHECK(back.num_topics == 7);
  CHECK(back.seed == 99);
  CHECK(back.adam.learning_rate == 0.05);
  CHECK_FALSE(back.use_log_transform);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("q equal to the prior without data gives a zero ELBO") {
  VariationalState st;
  st.blocks.push_back({"b", gaussian_family({0.5, 0.5}, {std::log(2.0), std::log(2.0)}), Prior::normal(0.5, 2.0)});
  NoData model;
  Rng rng(3);
  const std::vector<std::size_t> batch{0};
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(elbo_estimate(st, batch, model, 1.0, draw_noise(st, rng))) < 1e-12);
  }
}

TEST_CASE("Monte Carlo standard error shrinks with more draws") {
  auto st = toy_state();
  ToyModel model;
  Rng rng(4);
  const std::vector<std::size_t> batch{0, 1, 2};
  auto se = [&](std::size_t m) {
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = elbo_estimate(st, batch, model, 3.0, draw_noise(st, rng));
      s += e;
      ss += e * e;
    }
    const double mean = s / double(m);
    return std::sqrt((ss / double(m) - mean * mean) / double(m - 1));
  };
  CHECK(se(10000) < se(100));
}

}

