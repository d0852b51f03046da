#include "tbip/grad_engine.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "tbip/error.hpp"

namespace tbip::vi {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

void check_sizes(const Family& f) {
  if (f.mu.size() != f.log_sigma.size()) {
    throw ValidationError("family mu and log_sigma sizes differ");
  }
}

}  // namespace

double Family::sigma(std::size_t i) const { return std::exp(log_sigma[i]); }

std::vector<double> Family::mean() const {
  std::vector<double> out(mu);
  if (kind == FamilyKind::lognormal) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double s = sigma(i);
      out[i] = std::exp(mu[i] + 0.5 * s * s);
    }
  }
  return out;
}

Family gaussian_family(std::vector<double> mu, std::vector<double> log_sigma) {
  Family f{FamilyKind::gaussian, std::move(mu), std::move(log_sigma)};
  check_sizes(f);
  return f;
}

Family lognormal_family(std::vector<double> mu, std::vector<double> log_sigma) {
  Family f{FamilyKind::lognormal, std::move(mu), std::move(log_sigma)};
  check_sizes(f);
  return f;
}

Prior::Prior(Kind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {
  if (kind_ == Kind::normal) {
    if (!(p2_ > 0.0)) throw ValidationError("normal prior scale must be positive");
    log_norm_ = -kHalfLog2Pi - std::log(p2_);
  } else {
    if (!(p1_ > 0.0 && p2_ > 0.0)) throw ValidationError("gamma prior shape and rate must be positive");
    log_norm_ = p1_ * std::log(p2_) - std::lgamma(p1_);
  }
}

Prior Prior::normal(double location, double scale) { return Prior(Kind::normal, location, scale); }
Prior Prior::gamma(double shape, double rate) { return Prior(Kind::gamma, shape, rate); }

double Prior::log_density(double x) const {
  if (kind_ == Kind::normal) {
    const double u = (x - p1_) / p2_;
    return log_norm_ - 0.5 * u * u;
  }
  if (!(x > 0.0)) throw NumericError("nonpositive sample under a gamma prior");
  return log_norm_ + (p1_ - 1.0) * std::log(x) - p2_ * x;
}

double Prior::d_log_density(double x) const {
  if (kind_ == Kind::normal) return -(x - p1_) / (p2_ * p2_);
  return (p1_ - 1.0) / x - p2_;
}

std::size_t VariationalState::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].name == name) return i;
  }
  throw ValidationError("no latent block named " + std::string(name));
}

std::size_t VariationalState::num_parameters() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += 2 * b.family.size();
  return n;
}

BlockArrays VariationalState::zeros() const {
  BlockArrays out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) out[b].assign(blocks[b].family.size(), 0.0);
  return out;
}

NoiseDraw draw_noise(const VariationalState& state, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseDraw noise{state.zeros()};
  for (auto& z : noise.z) {
    for (auto& v : z) v = normal(rng);
  }
  return noise;
}

std::vector<double> reparameterize(const Family& family, std::span<const double> z) {
  if (z.size() != family.size() || family.log_sigma.size() != family.size()) {
    throw ValidationError("noise shape does not match the variational family");
  }
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double g = z[i] * family.sigma(i) + family.mu[i];
    out[i] = family.kind == FamilyKind::gaussian ? g : std::exp(g);
  }
  return out;
}

BlockArrays reparameterize(const VariationalState& state, const NoiseDraw& noise) {
  if (noise.z.size() != state.blocks.size()) {
    throw ValidationError("noise draw has the wrong number of blocks");
  }
  BlockArrays out(state.blocks.size());
  for (std::size_t b = 0; b < state.blocks.size(); ++b) {
    out[b] = reparameterize(state.blocks[b].family, noise.z[b]);
  }
  return out;
}

PriorAndEntropy entropy_and_prior(const VariationalState& state, const BlockArrays& samples) {
  if (samples.size() != state.blocks.size()) {
    throw ValidationError("sample has the wrong number of blocks");
  }
  PriorAndEntropy out;
  for (std::size_t b = 0; b < state.blocks.size(); ++b) {
    const auto& block = state.blocks[b];
    const auto& f = block.family;
    const auto& s = samples[b];
    if (s.size() != f.size()) throw ValidationError("sample shape mismatch in " + block.name);
    for (std::size_t i = 0; i < s.size(); ++i) {
      out.log_prior += block.prior.log_density(s[i]);
      if (f.kind == FamilyKind::gaussian) {
        const double u = (s[i] - f.mu[i]) / f.sigma(i);
        out.log_q += -kHalfLog2Pi - f.log_sigma[i] - 0.5 * u * u;
      } else {
        if (!(s[i] > 0.0)) throw NumericError("nonpositive sample under a lognormal family");
        const double log_x = std::log(s[i]);
        const double u = (log_x - f.mu[i]) / f.sigma(i);
        out.log_q += -kHalfLog2Pi - f.log_sigma[i] - 0.5 * u * u - log_x;
      }
    }
  }
  return out;
}

ElboTerms evaluate(const VariationalState& state, std::span<const std::size_t> batch,
                   const LikelihoodModel& model, double num_units, const NoiseDraw& noise,
                   Gradient* grad) {
  if (batch.empty()) throw ValidationError("batch must be non-empty");
  if (num_units < static_cast<double>(batch.size())) {
    throw ValidationError("total unit count must be at least the batch size");
  }
  const BlockArrays samples = reparameterize(state, noise);
  const PriorAndEntropy pe = entropy_and_prior(state, samples);

  BlockArrays d_samples;
  if (grad) d_samples = state.zeros();
  const double ll = model.log_likelihood(samples, batch, grad ? &d_samples : nullptr);
  const double scale = num_units / static_cast<double>(batch.size());

  ElboTerms terms;
  terms.log_prior = pe.log_prior;
  terms.log_likelihood = scale * ll;
  terms.log_q = pe.log_q;
  terms.elbo = pe.log_prior + scale * ll - pe.log_q;

  if (grad) {
    grad->d_mu = state.zeros();
    grad->d_log_sigma = state.zeros();
    for (std::size_t b = 0; b < state.blocks.size(); ++b) {
      const auto& block = state.blocks[b];
      const auto& f = block.family;
      const auto& z = noise.z[b];
      auto& d_mu = grad->d_mu[b];
      auto& d_ls = grad->d_log_sigma[b];
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = samples[b][i];
        const double sigma_z = f.sigma(i) * z[i];
        // d(log p + scaled log-lik) / dx
        const double g = scale * d_samples[b][i] + block.prior.d_log_density(x);
        if (f.kind == FamilyKind::gaussian) {
          // -log q = 0.5 ln 2pi + log_sigma + z^2 / 2
          d_mu[i] = g;
          d_ls[i] = g * sigma_z + 1.0;
        } else {
          // -log q additionally carries + log x = mu + sigma z
          const double g_log = g * x + 1.0;
          d_mu[i] = g_log;
          d_ls[i] = g_log * sigma_z + 1.0;
        }
      }
    }
  }
  return terms;
}

double elbo_estimate(const VariationalState& state, std::span<const std::size_t> batch,
                     const LikelihoodModel& model, double num_units, const NoiseDraw& noise) {
  return evaluate(state, batch, model, num_units, noise, nullptr).elbo;
}

Gradient gradient(const VariationalState& state, std::span<const std::size_t> batch,
                  const LikelihoodModel& model, double num_units, const NoiseDraw& noise) {
  Gradient g;
  evaluate(state, batch, model, num_units, noise, &g);
  return g;
}

void adam_step(AdamState& adam, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != adam.m.size() ||
      adam.v.size() != adam.m.size()) {
    throw ValidationError("Adam parameter, gradient and moment shapes differ");
  }
  const auto& c = adam.config;
  ++adam.t;
  const double t = static_cast<double>(adam.t);
  const double m_corr = 1.0 - std::pow(c.beta1, t);
  const double v_corr = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam.m[i] = c.beta1 * adam.m[i] + (1.0 - c.beta1) * grads[i];
    adam.v[i] = c.beta2 * adam.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double m_hat = adam.m[i] / m_corr;
    const double v_hat = adam.v[i] / v_corr;
    params[i] += c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

Optimizer::Optimizer(const VariationalState& state, AdamConfig cfg) {
  for (const auto& b : state.blocks) {
    mu_.emplace_back(b.family.size(), cfg);
    log_sigma_.emplace_back(b.family.size(), cfg);
  }
}

void Optimizer::step(VariationalState& state, const Gradient& grad) {
  for (std::size_t b = 0; b < state.blocks.size(); ++b) {
    adam_step(mu_[b], state.blocks[b].family.mu, grad.d_mu[b]);
    adam_step(log_sigma_[b], state.blocks[b].family.log_sigma, grad.d_log_sigma[b]);
  }
}

void TrainConfig::validate() const {
  if (num_topics < 1) throw ValidationError("number of topics must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (mc_samples < 1) throw ValidationError("Monte Carlo sample count must be >= 1");
  if (elbo_report_interval < 1) throw ValidationError("ELBO report interval must be >= 1");
  if (!(adam.learning_rate >= 0.0)) throw ValidationError("learning rate must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"num_topics", cfg.num_topics},
                     {"batch_size", cfg.batch_size},
                     {"max_steps", cfg.max_steps},
                     {"seed", cfg.seed},
                     {"learning_rate", cfg.adam.learning_rate},
                     {"beta1", cfg.adam.beta1},
                     {"beta2", cfg.adam.beta2},
                     {"epsilon", cfg.adam.epsilon},
                     {"mc_samples", cfg.mc_samples},
                     {"use_log_transform", cfg.use_log_transform},
                     {"elbo_report_interval", cfg.elbo_report_interval},
                     {"pretrain_sweeps", cfg.pretrain_sweeps},
                     {"threads", cfg.threads}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  TrainConfig d;
  cfg.num_topics = j.value("num_topics", d.num_topics);
  cfg.batch_size = j.value("batch_size", d.batch_size);
  cfg.max_steps = j.value("max_steps", d.max_steps);
  cfg.seed = j.value("seed", d.seed);
  cfg.adam.learning_rate = j.value("learning_rate", d.adam.learning_rate);
  cfg.adam.beta1 = j.value("beta1", d.adam.beta1);
  cfg.adam.beta2 = j.value("beta2", d.adam.beta2);
  cfg.adam.epsilon = j.value("epsilon", d.adam.epsilon);
  cfg.mc_samples = j.value("mc_samples", d.mc_samples);
  cfg.use_log_transform = j.value("use_log_transform", d.use_log_transform);
  cfg.elbo_report_interval = j.value("elbo_report_interval", d.elbo_report_interval);
  cfg.pretrain_sweeps = j.value("pretrain_sweeps", d.pretrain_sweeps);
  cfg.threads = j.value("threads", d.threads);
}

BatchSampler::BatchSampler(std::size_t num_units, std::size_t batch_size)
    : perm_(num_units), batch_size_(std::min(batch_size, num_units)) {
  if (num_units == 0) throw ValidationError("model has no units to sample");
  for (std::size_t i = 0; i < num_units; ++i) perm_[i] = i;
}

std::span<const std::size_t> BatchSampler::next(Rng& rng) {
  const std::size_t n = perm_.size();
  if (batch_size_ == n) {
    batch_ = perm_;
    std::sort(batch_.begin(), batch_.end());
    return batch_;
  }
  // Partial Fisher-Yates over the persistent permutation.
  for (std::size_t i = 0; i < batch_size_; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm_[i], perm_[pick(rng)]);
  }
  batch_.assign(perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(batch_size_));
  std::sort(batch_.begin(), batch_.end());
  return batch_;
}

namespace {

bool all_finite(const BlockArrays& arrays) {
  for (const auto& a : arrays) {
    for (double v : a) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<TracePoint> fit(VariationalState& state, const LikelihoodModel& model,
                            const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  Optimizer optimizer(state, cfg.adam);
  BatchSampler sampler(model.num_units(), cfg.batch_size);
  const double num_units = static_cast<double>(model.num_units());
  const double inv_samples = 1.0 / static_cast<double>(cfg.mc_samples);

  std::vector<TracePoint> trace;
  Gradient total;
  Gradient g;
  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const auto batch = sampler.next(rng);
    double elbo = 0.0;
    try {
      for (std::size_t m = 0; m < cfg.mc_samples; ++m) {
        const NoiseDraw noise = draw_noise(state, rng);
        const double value = evaluate(state, batch, model, num_units, noise, &g).elbo;
        if (cfg.mc_samples == 1) {
          elbo = value;
          std::swap(total, g);
          continue;
        }
        elbo += inv_samples * value;
        if (m == 0) {
          total = Gradient{state.zeros(), state.zeros()};
        }
        for (std::size_t b = 0; b < total.d_mu.size(); ++b) {
          for (std::size_t i = 0; i < total.d_mu[b].size(); ++i) {
            total.d_mu[b][i] += inv_samples * g.d_mu[b][i];
            total.d_log_sigma[b][i] += inv_samples * g.d_log_sigma[b][i];
          }
        }
      }
    } catch (const NumericError&) {
      throw NonFiniteElbo(step);
    }
    if (!std::isfinite(elbo) || !all_finite(total.d_mu) || !all_finite(total.d_log_sigma)) {
      throw NonFiniteElbo(step);
    }
    optimizer.step(state, total);
    if (step % cfg.elbo_report_interval == 0 || step == cfg.max_steps) {
      trace.push_back({step, elbo});
    }
  }
  return trace;
}

}  // namespace tbip::vi
