#pragma once

// Bayesian vote ideal points: v_ij ~ Bernoulli(sigmoid(alpha_j + x_i * eta_j))
// with standard normal priors, fitted with Gaussian mean-field families by the
// same reparameterization-gradient engine as the text model.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbip/fit_io.hpp"
#include "tbip/grad_engine.hpp"

namespace tbip::vote {

struct Vote {
  std::size_t lawmaker = 0;
  std::size_t bill = 0;
  bool yea = false;
};

class VoteMatrix {
 public:
  VoteMatrix() = default;
  // Validates index ranges and (lawmaker, bill) uniqueness.
  VoteMatrix(std::vector<std::string> lawmakers, std::vector<std::string> bills,
             std::vector<Vote> votes);

  std::size_t num_lawmakers() const noexcept { return lawmakers_.size(); }
  std::size_t num_bills() const noexcept { return bills_.size(); }
  std::size_t num_votes() const noexcept { return votes_.size(); }
  const std::vector<std::string>& lawmakers() const noexcept { return lawmakers_; }
  const std::vector<std::string>& bills() const noexcept { return bills_; }
  // All votes, ordered by bill then lawmaker.
  const std::vector<Vote>& votes() const noexcept { return votes_; }
  std::span<const Vote> votes_on(std::size_t bill) const;

 private:
  std::vector<std::string> lawmakers_;
  std::vector<std::string> bills_;
  std::vector<Vote> votes_;
  std::vector<std::size_t> offsets_{0};
};

// CSV rows lawmaker_name,bill_id,vote with vote 1 (yea) or 0 (nay). Any other
// vote value (abstentions, absences) is dropped at load time.
VoteMatrix read_votes_csv(const std::filesystem::path& path);
void write_votes_csv(const std::filesystem::path& path, const VoteMatrix& votes);

// sigmoid(alpha + x * eta), stable for |alpha + x * eta| up to several hundred.
double vote_prob(double alpha, double eta, double x);

inline constexpr std::size_t kX = 0;
inline constexpr std::size_t kAlpha = 1;
inline constexpr std::size_t kEta = 2;

// Bernoulli log-likelihood; the units are bills.
class VoteLikelihood final : public vi::LikelihoodModel {
 public:
  explicit VoteLikelihood(const VoteMatrix& votes) : votes_(&votes) {}
  std::size_t num_units() const override { return votes_->num_bills(); }
  double log_likelihood(const vi::BlockArrays& samples, std::span<const std::size_t> batch,
                        vi::BlockArrays* d_samples) const override;

 private:
  const VoteMatrix* votes_;
};

vi::VariationalState make_state(const VoteMatrix& votes, vi::Rng& rng);

struct VoteFit {
  std::vector<double> x;      // per lawmaker
  std::vector<double> alpha;  // per bill
  std::vector<double> eta;    // per bill
  std::vector<vi::TracePoint> elbo_trace;
  std::vector<std::string> lawmakers;
  std::vector<std::string> bills;
  nlohmann::json config;
};

// Every lawmaker and bill must have at least one vote. Use a batch size of at
// least the bill count for full-batch gradients.
VoteFit train_vote(const VoteMatrix& votes, const vi::TrainConfig& cfg);

io::FitBundle to_bundle(const VoteFit& fit);

}  // namespace tbip::vote
