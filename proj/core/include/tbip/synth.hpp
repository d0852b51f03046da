#pragma once

// Seeded ancestral sampling from the generative models, with ground truth.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbip/baselines.hpp"
#include "tbip/corpus.hpp"
#include "tbip/matrix.hpp"
#include "tbip/vote.hpp"

namespace tbip::synth {

enum class Layout {
  two_cluster,  // alternating authors at +1 and -1 plus N(0, spread^2) jitter
  uniform,      // U(-1, 1)
};

enum class DocAllocation {
  balanced,  // document d belongs to author d mod S
  random,    // uniform author per document, each author guaranteed one document
};

struct SynthSpec {
  std::size_t num_docs = 1000;
  std::size_t num_terms = 300;
  std::size_t num_authors = 20;
  std::size_t num_topics = 5;
  Layout layout = Layout::two_cluster;
  double cluster_spread = 0.25;
  double a = 0.3;
  double b = 0.3;
  // eta_kv ~ N(0, polarity_scale^2); 0 gives eta = 0 exactly.
  double polarity_scale = 1.0;
  DocAllocation allocation = DocAllocation::balanced;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<double> sample_ideal_points(std::size_t n, Layout layout, double spread,
                                        vi::Rng& rng);

struct TbipTruth {
  Matrix theta;  // D x K over surviving documents
  Matrix beta;   // K x V
  Matrix eta;    // K x V
  std::vector<double> x;
};

struct TbipSample {
  corpus::SparseCorpus corpus;
  TbipTruth truth;
  std::size_t dropped_docs = 0;
};

// Draws theta, beta ~ Gamma(a, b), eta, x and Poisson counts without verbosity
// weights. A document whose counts are all zero is redrawn once and dropped if
// it is still empty.
TbipSample sample_tbip(const SynthSpec& spec);

// Poisson counts for fixed latents; truth.theta has one row per document.
// Empty documents are kept.
corpus::SparseCorpus sample_tbip_counts(const TbipTruth& truth,
                                        const std::vector<std::size_t>& author_of,
                                        std::size_t num_authors, vi::Rng& rng);

struct VoteSynthSpec {
  std::size_t num_lawmakers = 50;
  std::size_t num_bills = 300;
  Layout layout = Layout::two_cluster;
  double cluster_spread = 0.25;
  double alpha_loc = 0.0;
  double alpha_scale = 1.0;
  double polarity_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct VoteSample {
  vote::VoteMatrix votes;
  std::vector<double> x;
  std::vector<double> alpha;
  std::vector<double> eta;
};

VoteSample sample_votes(const VoteSynthSpec& spec);

// Full vote matrix for fixed latents.
vote::VoteMatrix sample_votes_given(const std::vector<double>& x, const std::vector<double>& alpha,
                                    const std::vector<double>& eta, vi::Rng& rng);

struct WordfishSynthSpec {
  std::size_t num_authors = 30;
  std::size_t num_terms = 200;
  Layout layout = Layout::two_cluster;
  double cluster_spread = 0.25;
  double alpha_scale = 0.3;
  double psi_loc = 1.0;
  double psi_scale = 1.0;
  // b_v ~ N(0, polarity_scale^2).
  double polarity_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct WordfishSample {
  Matrix counts;  // S x V
  std::vector<std::string> author_names;
  std::vector<double> x, alpha, psi, b;
};

WordfishSample sample_wordfish(const WordfishSynthSpec& spec);

struct WordshoalSynthSpec {
  std::size_t num_authors = 30;
  std::size_t num_debates = 8;
  std::size_t num_terms = 100;
  // Probability that an author speaks in a debate; at least 3 speakers per debate.
  double participation = 0.8;
  Layout layout = Layout::two_cluster;
  double cluster_spread = 0.25;
  // Debate position p_sj = a_j + b_j x_s + N(0, position_noise^2), b_j = +-U(0.5, 1.5).
  double position_noise = 0.3;
  double polarity_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct WordshoalSample {
  baselines::DebateLabeledCorpus data;
  std::vector<double> x;
};

// One document per (author, debate) pair with wordfish counts driven by the
// debate position.
WordshoalSample sample_wordshoal(const WordshoalSynthSpec& spec);

std::vector<std::string> author_labels(std::size_t n);

// {"x": [...], "authors": [...], plus any extra members of `extra`}.
void write_truth(const std::filesystem::path& path, const std::vector<std::string>& names,
                 const std::vector<double>& x, const nlohmann::json& extra = nlohmann::json::object());

struct Truth {
  std::vector<std::string> names;
  std::vector<double> x;
};
Truth read_truth(const std::filesystem::path& path);

}  // namespace tbip::synth
