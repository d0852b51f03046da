#include <benchmark/benchmark.h>

#include <numeric>

#include "tbip/corpus.hpp"
#include "tbip/grad_engine.hpp"
#include "tbip/model.hpp"
#include "tbip/pf.hpp"
#include "tbip/synth.hpp"

using namespace tbip;

namespace {

const synth::TbipSample& sample() {
  static const synth::TbipSample s = [] {
    synth::SynthSpec spec;
    spec.seed = 1;
    return synth::sample_tbip(spec);
  }();
  return s;
}

model::Initialization truth_init() {
  return {sample().truth.theta, sample().truth.beta};
}

void BM_TbipGradientStep(benchmark::State& st) {
  const auto& c = sample().corpus;
  vi::Rng rng(3);
  auto state = model::make_state(truth_init(), c.num_authors(), {}, rng);
  model::TbipLikelihood lik(c, corpus::compute_weights(c), 5, static_cast<std::size_t>(st.range(1)));
  vi::BatchSampler sampler(c.num_docs(), static_cast<std::size_t>(st.range(0)));
  vi::Optimizer opt(state, {});
  for (auto _ : st) {
    auto batch = sampler.next(rng);
    auto noise = vi::draw_noise(state, rng);
    vi::Gradient g;
    benchmark::DoNotOptimize(vi::evaluate(state, batch, lik, double(c.num_docs()), noise, &g));
    opt.step(state, g);
  }
}
BENCHMARK(BM_TbipGradientStep)->Args({512, 1})->Args({512, 4})->Args({1000, 1})->Unit(benchmark::kMicrosecond);

void BM_TbipLikelihoodOnly(benchmark::State& st) {
  const auto& c = sample().corpus;
  vi::Rng rng(3);
  auto state = model::make_state(truth_init(), c.num_authors(), {}, rng);
  model::TbipLikelihood lik(c, corpus::compute_weights(c), 5);
  auto samples = vi::reparameterize(state, vi::draw_noise(state, rng));
  std::vector<std::size_t> batch(512);
  std::iota(batch.begin(), batch.end(), 0);
  for (auto _ : st) {
    auto d = state.zeros();
    benchmark::DoNotOptimize(lik.log_likelihood(samples, batch, &d));
  }
}
BENCHMARK(BM_TbipLikelihoodOnly)->Unit(benchmark::kMicrosecond);

void BM_NoiseAndReparameterize(benchmark::State& st) {
  const auto& c = sample().corpus;
  vi::Rng rng(3);
  auto state = model::make_state(truth_init(), c.num_authors(), {}, rng);
  for (auto _ : st) {
    auto noise = vi::draw_noise(state, rng);
    auto s = vi::reparameterize(state, noise);
    benchmark::DoNotOptimize(vi::entropy_and_prior(state, s));
  }
}
BENCHMARK(BM_NoiseAndReparameterize)->Unit(benchmark::kMicrosecond);

void BM_PfSweep(benchmark::State& st) {
  const auto& c = sample().corpus;
  auto state = pf::init_state(c.num_docs(), c.num_terms(), 5, 0.3, 0.3, 1);
  for (auto _ : st) state = pf::cavi_step(state, c);
}
BENCHMARK(BM_PfSweep)->Unit(benchmark::kMillisecond);

void BM_Tokenize(benchmark::State& st) {
  std::string text;
  for (int i = 0; i < 200; ++i) text += "the senate passed a bill on health care and gun violence ";
  for (auto _ : st) benchmark::DoNotOptimize(corpus::tokenize(text, 3, {"the", "a", "on", "and"}));
  st.SetBytesProcessed(static_cast<std::int64_t>(st.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize);

}  // namespace

BENCHMARK_MAIN();
