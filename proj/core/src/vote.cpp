#include "tbip/vote.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "tbip/csv.hpp"
#include "tbip/error.hpp"

namespace tbip::vote {

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

}  // namespace

VoteMatrix::VoteMatrix(std::vector<std::string> lawmakers, std::vector<std::string> bills,
                       std::vector<Vote> votes)
    : lawmakers_(std::move(lawmakers)), bills_(std::move(bills)), votes_(std::move(votes)) {
  for (const auto& v : votes_) {
    if (v.lawmaker >= lawmakers_.size() || v.bill >= bills_.size()) {
      throw ValidationError("vote index out of range");
    }
  }
  std::sort(votes_.begin(), votes_.end(), [](const Vote& l, const Vote& r) {
    return l.bill != r.bill ? l.bill < r.bill : l.lawmaker < r.lawmaker;
  });
  offsets_.assign(bills_.size() + 1, 0);
  for (std::size_t i = 0; i < votes_.size(); ++i) {
    if (i > 0 && votes_[i - 1].bill == votes_[i].bill &&
        votes_[i - 1].lawmaker == votes_[i].lawmaker) {
      throw ValidationError("duplicate vote for lawmaker " + lawmakers_[votes_[i].lawmaker] +
                            " on bill " + bills_[votes_[i].bill]);
    }
    ++offsets_[votes_[i].bill + 1];
  }
  for (std::size_t j = 0; j < bills_.size(); ++j) offsets_[j + 1] += offsets_[j];
}

std::span<const Vote> VoteMatrix::votes_on(std::size_t bill) const {
  return {votes_.data() + offsets_.at(bill), offsets_.at(bill + 1) - offsets_[bill]};
}

VoteMatrix read_votes_csv(const std::filesystem::path& path) {
  std::vector<std::string> lawmakers;
  std::vector<std::string> bills;
  std::unordered_map<std::string, std::size_t> lawmaker_index;
  std::unordered_map<std::string, std::size_t> bill_index;
  std::vector<Vote> votes;
  auto rows = csv::read_file(path);
  if (!rows.empty() && rows.front().size() >= 3 && rows.front()[2] == "vote") {
    rows.erase(rows.begin());
  }
  for (const auto& row : rows) {
    if (row.size() < 3) throw IoError("expected lawmaker_name,bill_id,vote in " + path.string());
    const bool yea = row[2] == "1";
    if (!yea && row[2] != "0") continue;
    auto [li, l_new] = lawmaker_index.emplace(row[0], lawmakers.size());
    if (l_new) lawmakers.push_back(row[0]);
    auto [bi, b_new] = bill_index.emplace(row[1], bills.size());
    if (b_new) bills.push_back(row[1]);
    votes.push_back({li->second, bi->second, yea});
  }
  return VoteMatrix(std::move(lawmakers), std::move(bills), std::move(votes));
}

void write_votes_csv(const std::filesystem::path& path, const VoteMatrix& votes) {
  std::vector<csv::Row> rows;
  for (const auto& v : votes.votes()) {
    rows.push_back({votes.lawmakers()[v.lawmaker], votes.bills()[v.bill], v.yea ? "1" : "0"});
  }
  csv::write_file(path, {"lawmaker_name", "bill_id", "vote"}, rows);
}

double vote_prob(double alpha, double eta, double x) {
  const double t = alpha + x * eta;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double VoteLikelihood::log_likelihood(const vi::BlockArrays& samples,
                                      std::span<const std::size_t> batch,
                                      vi::BlockArrays* d_samples) const {
  const auto& x = samples[kX];
  const auto& alpha = samples[kAlpha];
  const auto& eta = samples[kEta];
  double ll = 0.0;
  for (std::size_t j : batch) {
    for (const auto& v : votes_->votes_on(j)) {
      const double t = alpha[j] + x[v.lawmaker] * eta[j];
      const double y = v.yea ? 1.0 : 0.0;
      ll += y * t - softplus(t);
      if (d_samples) {
        const double r = y - vote_prob(alpha[j], eta[j], x[v.lawmaker]);
        (*d_samples)[kAlpha][j] += r;
        (*d_samples)[kEta][j] += r * x[v.lawmaker];
        (*d_samples)[kX][v.lawmaker] += r * eta[j];
      }
    }
  }
  return ll;
}

vi::VariationalState make_state(const VoteMatrix& votes, vi::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 0.1);
  auto block = [&](const char* name, std::size_t n) {
    std::vector<double> mu(n);
    for (auto& m : mu) m = normal(rng);
    return vi::LatentBlock{name, vi::gaussian_family(std::move(mu), std::vector<double>(n, std::log(0.1))),
                           vi::Prior::normal(0.0, 1.0)};
  };
  vi::VariationalState state;
  state.blocks.push_back(block("x", votes.num_lawmakers()));
  state.blocks.push_back(block("alpha", votes.num_bills()));
  state.blocks.push_back(block("eta", votes.num_bills()));
  return state;
}

VoteFit train_vote(const VoteMatrix& votes, const vi::TrainConfig& cfg) {
  cfg.validate();
  if (votes.num_lawmakers() == 0 || votes.num_bills() == 0) {
    throw ValidationError("vote matrix is empty");
  }
  std::vector<bool> has_vote(votes.num_lawmakers(), false);
  for (const auto& v : votes.votes()) has_vote[v.lawmaker] = true;
  for (std::size_t i = 0; i < has_vote.size(); ++i) {
    if (!has_vote[i]) throw ValidationError("lawmaker " + votes.lawmakers()[i] + " cast no votes");
  }
  for (std::size_t j = 0; j < votes.num_bills(); ++j) {
    if (votes.votes_on(j).empty()) throw ValidationError("bill " + votes.bills()[j] + " has no votes");
  }

  vi::Rng rng(cfg.seed);
  vi::VariationalState state = make_state(votes, rng);
  VoteLikelihood likelihood(votes);
  VoteFit fit;
  fit.elbo_trace = vi::fit(state, likelihood, cfg, rng);
  fit.x = state.blocks[kX].family.mu;
  fit.alpha = state.blocks[kAlpha].family.mu;
  fit.eta = state.blocks[kEta].family.mu;
  fit.lawmakers = votes.lawmakers();
  fit.bills = votes.bills();
  fit.config = nlohmann::json{{"model", "vote"}, {"train", cfg}};
  return fit;
}

io::FitBundle to_bundle(const VoteFit& fit) {
  io::FitBundle b;
  b.manifest = {{"model", "vote"},
                {"dims", {{"I", fit.x.size()}, {"J", fit.alpha.size()}}},
                {"config", fit.config},
                {"seed", fit.config.contains("train") ? fit.config["train"].value("seed", 0) : 0},
                {"authors", fit.lawmakers},
                {"bills", fit.bills}};
  b.arrays.push_back({"x", {fit.x.size()}, fit.x});
  b.arrays.push_back({"alpha", {fit.alpha.size()}, fit.alpha});
  b.arrays.push_back({"eta", {fit.eta.size()}, fit.eta});
  b.elbo_trace = fit.elbo_trace;
  return b;
}

}  // namespace tbip::vote
