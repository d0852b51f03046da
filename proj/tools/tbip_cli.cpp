// tbip: preprocess corpora, train ideal point models, analyze fits, and
// generate synthetic data.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tbip/analysis.hpp"
#include "tbip/baselines.hpp"
#include "tbip/corpus.hpp"
#include "tbip/corpus_io.hpp"
#include "tbip/csv.hpp"
#include "tbip/error.hpp"
#include "tbip/fit_io.hpp"
#include "tbip/model.hpp"
#include "tbip/pf.hpp"
#include "tbip/run_manifest.hpp"
#include "tbip/synth.hpp"
#include "tbip/vote.hpp"

namespace fs = std::filesystem;
using namespace tbip;

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
  RunManifest manifest;
  Clock::time_point start = Clock::now();

  void finish(const fs::path& out, const std::vector<vi::TracePoint>& trace = {}) {
    manifest.output_dir = out.string();
    if (!trace.empty()) manifest.final_elbo = trace.back().elbo;
    manifest.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    write_run_manifest(out, manifest);
  }
};

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::set<std::string> read_stopwords(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file " + path.string());
  std::set<std::string> out;
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

// Shared flags of every `train` subcommand.
struct TrainFlags {
  std::string out;
  std::size_t k = 50;
  std::size_t batch = 512;
  std::size_t steps = 50000;
  std::uint64_t seed = 0;
  double lr = 0.01;
  std::string log_counts = "auto";
  std::size_t threads = 1;
  std::size_t report = 100;
  std::size_t sweeps = 200;

  vi::TrainConfig config() const {
    vi::TrainConfig cfg;
    cfg.num_topics = k;
    cfg.batch_size = batch;
    cfg.max_steps = steps;
    cfg.seed = seed;
    cfg.adam.learning_rate = lr;
    cfg.threads = threads;
    cfg.elbo_report_interval = report;
    cfg.pretrain_sweeps = sweeps;
    return cfg;
  }
};

void add_common(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--out", f.out, "Output fit directory")->required();
  cmd->add_option("--steps", f.steps, "Optimization steps")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads")->capture_default_str();
  cmd->add_option("--report-every", f.report, "ELBO trace interval")->capture_default_str();
}

void add_text(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--log-counts", f.log_counts, "Log-count transform")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
}

bool use_log_counts(const std::string& mode, const corpus::SparseCorpus& c) {
  if (mode == "on") return true;
  if (mode == "off") return false;
  return corpus::median_doc_length(c) > 100.0;
}

void print_final(const std::vector<vi::TracePoint>& trace) {
  if (!trace.empty()) {
    std::printf("final ELBO %.6g at step %zu\n", trace.back().elbo, trace.back().step);
  }
}

io::FitBundle pf_bundle(const pf::PretrainResult& r, const corpus::SparseCorpus& c,
                        const nlohmann::json& config) {
  io::FitBundle b;
  b.manifest = {{"model", "pf"},
                {"dims", {{"D", r.theta.rows()}, {"K", r.theta.cols()}, {"V", r.beta.cols()}}},
                {"config", config},
                {"authors", c.author_names()},
                {"sweeps", r.sweeps}};
  b.arrays.push_back({"theta", {r.theta.rows(), r.theta.cols()}, r.theta.data()});
  b.arrays.push_back({"beta", {r.beta.rows(), r.beta.cols()}, r.beta.data()});
  for (std::size_t i = 0; i < r.elbo_trace.size(); ++i) b.elbo_trace.push_back({i + 1, r.elbo_trace[i]});
  return b;
}

std::vector<double> fit_ideal_points(const io::FitBundle& b) { return b.at("x").data; }

synth::Layout parse_layout(const std::string& s) {
  return s == "uniform" ? synth::Layout::uniform : synth::Layout::two_cluster;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-based ideal points: preprocessing, training, analysis, synthetic data"};
  app.require_subcommand(1);
  std::function<void()> action;

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Build a count corpus from JSONL documents");
  std::string pre_input, pre_out, pre_stop;
  corpus::PreprocessConfig pre_cfg;
  pre->add_option("--input", pre_input, "JSONL with id, author, text[, debate]")->required();
  pre->add_option("--out", pre_out, "Output corpus directory")->required();
  pre->add_option("--min-df", pre_cfg.min_doc_frequency, "Minimum document frequency")->capture_default_str();
  pre->add_option("--max-df", pre_cfg.max_doc_frequency, "Maximum document frequency")->capture_default_str();
  pre->add_option("--min-authors", pre_cfg.min_authors_per_term, "Minimum distinct authors per term")
      ->capture_default_str();
  pre->add_option("--min-docs-per-author", pre_cfg.min_docs_per_author, "Minimum documents per author")
      ->capture_default_str();
  pre->add_option("--stopwords", pre_stop, "Whitespace-separated stopword file");
  pre->add_option("--ngrams", pre_cfg.max_ngram, "Longest n-gram")->capture_default_str();
  pre->callback([&] {
    action = [&] {
      Run run;
      if (!pre_stop.empty()) pre_cfg.stopwords = read_stopwords(pre_stop);
      auto built = corpus::build_corpus(corpus::read_jsonl(pre_input), pre_cfg);
      make_dir(pre_out);
      corpus::write_corpus(pre_out, built.corpus, built.vocabulary);
      corpus::write_weights(fs::path(pre_out) / corpus::kWeightsFile, built.corpus,
                            corpus::compute_weights(built.corpus));
      bool labeled = false;
      for (const auto& d : built.debate_ids) labeled = labeled || !d.empty();
      if (labeled) corpus::write_debates(fs::path(pre_out) / corpus::kDebatesFile, built.debate_ids);
      std::printf("%zu documents, %zu terms, %zu authors\n", built.corpus.num_docs(),
                  built.corpus.num_terms(), built.corpus.num_authors());
      run.manifest.command = "preprocess";
      run.manifest.config = {{"min_df", pre_cfg.min_doc_frequency},
                             {"max_df", pre_cfg.max_doc_frequency},
                             {"min_authors", pre_cfg.min_authors_per_term},
                             {"min_docs_per_author", pre_cfg.min_docs_per_author},
                             {"ngrams", pre_cfg.max_ngram},
                             {"stopwords", pre_cfg.stopwords.size()}};
      run.manifest.inputs = {pre_input};
      if (!pre_stop.empty()) run.manifest.inputs.push_back(pre_stop);
      run.finish(pre_out);
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Fit a model");
  train->require_subcommand(1);
  TrainFlags tf;
  std::string corpus_dir, pretrain_dir, votes_path;
  double prior_a = 0.3, prior_b = 0.3;

  auto* t_tbip = train->add_subcommand("tbip", "Text-based ideal point model");
  t_tbip->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  t_tbip->add_option("--k", tf.k, "Number of topics")->capture_default_str();
  t_tbip->add_option("--batch", tf.batch, "Documents per minibatch")->capture_default_str();
  t_tbip->add_option("--pretrain-dir", pretrain_dir, "Poisson factorization fit to start from");
  t_tbip->add_option("--pretrain-sweeps", tf.sweeps, "Pretraining sweeps")->capture_default_str();
  t_tbip->add_option("--prior-a", prior_a, "Gamma prior shape")->capture_default_str();
  t_tbip->add_option("--prior-b", prior_b, "Gamma prior rate")->capture_default_str();
  add_common(t_tbip, tf);
  add_text(t_tbip, tf);
  t_tbip->callback([&] {
    action = [&] {
      Run run;
      auto files = corpus::read_corpus(corpus_dir);
      auto cfg = tf.config();
      cfg.use_log_transform = use_log_counts(tf.log_counts, files.corpus);
      std::optional<model::Initialization> init;
      if (!pretrain_dir.empty()) {
        auto b = io::read_bundle(pretrain_dir);
        if (b.manifest.value("model", "") != "pf") throw ValidationError(pretrain_dir + " is not a pf fit");
        const auto& th = b.at("theta");
        const auto& be = b.at("beta");
        init = model::Initialization{Matrix(th.shape.at(0), th.shape.at(1), th.data),
                                     Matrix(be.shape.at(0), be.shape.at(1), be.data)};
        if (init->theta.rows() != files.corpus.num_docs() || init->beta.cols() != files.corpus.num_terms() ||
            init->theta.cols() != cfg.num_topics) {
          throw ValidationError("pretrained fit does not match the corpus or --k");
        }
      }
      auto fit = model::train_tbip(files.corpus, cfg, {prior_a, prior_b}, init);
      make_dir(tf.out);
      io::save_fit(tf.out, fit);
      print_final(fit.elbo_trace);
      run.manifest.command = "train tbip";
      run.manifest.config = fit.config;
      run.manifest.seed = cfg.seed;
      run.manifest.inputs = {corpus_dir};
      if (!pretrain_dir.empty()) run.manifest.inputs.push_back(pretrain_dir);
      run.finish(tf.out, fit.elbo_trace);
    };
  });

  auto* t_pf = train->add_subcommand("pf", "Poisson factorization (pretraining)");
  t_pf->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  t_pf->add_option("--k", tf.k, "Number of topics")->capture_default_str();
  t_pf->add_option("--out", tf.out, "Output fit directory")->required();
  t_pf->add_option("--sweeps", tf.sweeps, "Maximum coordinate-ascent sweeps")->capture_default_str();
  t_pf->add_option("--seed", tf.seed, "Random seed")->capture_default_str();
  t_pf->add_option("--prior-a", prior_a, "Gamma prior shape")->capture_default_str();
  t_pf->add_option("--prior-b", prior_b, "Gamma prior rate")->capture_default_str();
  add_text(t_pf, tf);
  t_pf->callback([&] {
    action = [&] {
      Run run;
      auto files = corpus::read_corpus(corpus_dir);
      const bool log_counts = use_log_counts(tf.log_counts, files.corpus);
      const auto c = log_counts ? corpus::log_transform(files.corpus) : files.corpus;
      auto r = pf::pretrain(c, tf.k, prior_a, prior_b, tf.sweeps, tf.seed);
      nlohmann::json config{{"model", "pf"}, {"k", tf.k}, {"sweeps", tf.sweeps}, {"seed", tf.seed},
                            {"prior_a", prior_a}, {"prior_b", prior_b}, {"log_counts", log_counts}};
      auto bundle = pf_bundle(r, c, config);
      make_dir(tf.out);
      io::write_bundle(tf.out, bundle);
      print_final(bundle.elbo_trace);
      run.manifest.command = "train pf";
      run.manifest.config = config;
      run.manifest.seed = tf.seed;
      run.manifest.inputs = {corpus_dir};
      run.finish(tf.out, bundle.elbo_trace);
    };
  });

  auto* t_vote = train->add_subcommand("vote", "Bayesian vote ideal points");
  t_vote->add_option("--votes", votes_path, "CSV lawmaker_name,bill_id,vote")->required();
  t_vote->add_option("--batch", tf.batch, "Bills per minibatch (0 = all)");
  add_common(t_vote, tf);
  t_vote->callback([&] {
    action = [&] {
      Run run;
      auto votes = vote::read_votes_csv(votes_path);
      auto cfg = tf.config();
      if (t_vote->count("--batch") == 0 || tf.batch == 0) cfg.batch_size = votes.num_bills();
      auto fit = vote::train_vote(votes, cfg);
      make_dir(tf.out);
      io::write_bundle(tf.out, vote::to_bundle(fit));
      print_final(fit.elbo_trace);
      run.manifest.command = "train vote";
      run.manifest.config = fit.config;
      run.manifest.seed = cfg.seed;
      run.manifest.inputs = {votes_path};
      run.finish(tf.out, fit.elbo_trace);
    };
  });

  auto* t_wf = train->add_subcommand("wordfish", "Wordfish on author-pooled counts");
  t_wf->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  add_common(t_wf, tf);
  t_wf->callback([&] {
    action = [&] {
      Run run;
      auto files = corpus::read_corpus(corpus_dir);
      auto fit = baselines::train_wordfish(files.corpus, tf.config());
      make_dir(tf.out);
      io::write_bundle(tf.out, baselines::to_bundle(fit));
      print_final(fit.elbo_trace);
      run.manifest.command = "train wordfish";
      run.manifest.config = fit.config;
      run.manifest.seed = tf.seed;
      run.manifest.inputs = {corpus_dir};
      run.finish(tf.out, fit.elbo_trace);
    };
  });

  auto* t_ws = train->add_subcommand("wordshoal", "Per-debate wordfish plus factor analysis");
  t_ws->add_option("--corpus", corpus_dir, "Corpus directory with debates.csv")->required();
  add_common(t_ws, tf);
  t_ws->callback([&] {
    action = [&] {
      Run run;
      auto files = corpus::read_corpus(corpus_dir);
      if (!files.debate_ids) throw ValidationError(corpus_dir + " has no debates.csv");
      auto fit = baselines::train_wordshoal({files.corpus, *files.debate_ids}, tf.config());
      make_dir(tf.out);
      io::write_bundle(tf.out, baselines::to_bundle(fit));
      print_final(fit.factor.elbo_trace);
      run.manifest.command = "train wordshoal";
      run.manifest.config = fit.config;
      run.manifest.seed = tf.seed;
      run.manifest.inputs = {corpus_dir};
      run.finish(tf.out, fit.factor.elbo_trace);
    };
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Reports on fitted models");
  analyze->require_subcommand(1);
  std::string a_fit, a_out, a_reference, a_truth;
  std::vector<std::string> a_fits, a_scores;
  std::size_t a_top = 8, a_doc = 0;
  bool a_exact = false;

  auto* a_topics = analyze->add_subcommand("topics", "Neutral and ideological top terms per topic");
  a_topics->add_option("--fit", a_fit, "TBIP fit directory")->required();
  a_topics->add_option("--corpus", corpus_dir, "Corpus directory (vocabulary)")->required();
  a_topics->add_option("--top", a_top, "Terms per row")->capture_default_str();
  a_topics->add_option("--out", a_out, "Output directory")->required();
  a_topics->add_flag("--exact", a_exact, "Include eta's variational scale in pole intensities");
  a_topics->callback([&] {
    action = [&] {
      Run run;
      auto fit = io::load_fit(a_fit);
      auto files = corpus::read_corpus(corpus_dir);
      auto report = analysis::topic_report(
          fit, files.vocabulary, a_top,
          a_exact ? analysis::PoleIntensity::exact : analysis::PoleIntensity::plug_in);
      make_dir(a_out);
      const auto md = analysis::to_markdown(report);
      std::ofstream(fs::path(a_out) / "topics.md") << md;
      std::ofstream(fs::path(a_out) / "topics.json") << analysis::to_json(report).dump(2) << '\n';
      std::cout << md;
      run.manifest.command = "analyze topics";
      run.manifest.config = {{"top", a_top}, {"exact", a_exact}};
      run.manifest.inputs = {a_fit, corpus_dir};
      run.finish(a_out);
    };
  });

  auto* a_compare = analyze->add_subcommand("compare", "Correlate ideal points with a reference");
  a_compare->add_option("--fit", a_fits, "Fit directory (repeatable)");
  a_compare->add_option("--scores", a_scores, "name,score CSV treated as a method (repeatable)");
  auto* ref_opt = a_compare->add_option("--reference", a_reference, "Reference name,score CSV");
  auto* truth_opt = a_compare->add_option("--truth", a_truth, "Synthetic truth JSON");
  ref_opt->excludes(truth_opt);
  a_compare->add_option("--out", a_out, "Output directory")->required();
  a_compare->callback([&] {
    action = [&] {
      Run run;
      std::vector<std::string> ref_names;
      std::vector<double> ref_scores;
      if (!a_reference.empty()) {
        auto s = csv::read_named_scores(a_reference);
        ref_names = std::move(s.names);
        ref_scores = std::move(s.scores);
      } else if (!a_truth.empty()) {
        auto t = synth::read_truth(a_truth);
        ref_names = std::move(t.names);
        ref_scores = std::move(t.x);
      } else {
        throw ValidationError("compare needs --reference or --truth");
      }
      if (a_fits.empty() && a_scores.empty()) throw ValidationError("compare needs --fit or --scores");
      const auto reference = analysis::align(ref_scores, std::nullopt, "reference").values;

      std::vector<std::pair<std::string, std::vector<double>>> methods;
      for (const auto& dir : a_fits) {
        auto b = io::read_bundle(dir);
        auto x = analysis::match_by_name(ref_names, b.author_names(), fit_ideal_points(b));
        methods.emplace_back(b.manifest.value("model", "fit") + ":" + dir, std::move(x));
      }
      for (const auto& path : a_scores) {
        auto s = csv::read_named_scores(path);
        methods.emplace_back("scores:" + path, analysis::match_by_name(ref_names, s.names, s.scores));
      }

      std::vector<csv::Row> table;
      std::vector<std::vector<double>> aligned;
      for (const auto& [label, x] : methods) {
        auto a = analysis::align(x, std::span<const double>(reference), "reference");
        auto c = analysis::compare(a.values, reference);
        std::printf("%s pearson/spearman: %.3f/%.3f\n", label.c_str(), c.pearson, c.spearman);
        table.push_back({label, csv::format_double(c.pearson), csv::format_double(c.spearman),
                         a.sign_flipped ? "1" : "0"});
        aligned.push_back(std::move(a.values));
      }
      make_dir(a_out);
      csv::write_file(fs::path(a_out) / "comparison.csv", {"method", "pearson", "spearman", "sign_flipped"},
                      table);
      csv::Row header{"name", "reference"};
      for (const auto& m : methods) header.push_back(m.first);
      std::vector<csv::Row> points;
      for (std::size_t s = 0; s < ref_names.size(); ++s) {
        csv::Row row{ref_names[s], csv::format_double(reference[s])};
        for (const auto& a : aligned) row.push_back(csv::format_double(a[s]));
        points.push_back(std::move(row));
      }
      csv::write_file(fs::path(a_out) / "ideal_points.csv", header, points);
      run.manifest.command = "analyze compare";
      run.manifest.config = {{"methods", methods.size()}};
      run.manifest.inputs = a_fits;
      run.manifest.inputs.insert(run.manifest.inputs.end(), a_scores.begin(), a_scores.end());
      run.manifest.inputs.push_back(a_reference.empty() ? a_truth : a_reference);
      run.finish(a_out);
    };
  });

  auto* a_infl = analyze->add_subcommand("influence", "Likelihood ratios of a document at fixed ideal points");
  a_infl->add_option("--fit", a_fit, "TBIP fit directory")->required();
  a_infl->add_option("--corpus", corpus_dir, "Corpus directory the fit was trained on")->required();
  a_infl->add_option("--doc", a_doc, "Document index")->required();
  a_infl->add_option("--out", a_out, "Output directory")->required();
  a_infl->callback([&] {
    action = [&] {
      Run run;
      auto fit = io::load_fit(a_fit);
      auto files = corpus::read_corpus(corpus_dir);
      const bool log_counts =
          fit.config.contains("train") && fit.config["train"].value("use_log_transform", false);
      const auto c = log_counts ? corpus::log_transform(files.corpus) : files.corpus;
      auto score = analysis::influence(fit, c, a_doc);
      std::printf("doc %zu vs_zero %.6g vs_max %.6g vs_min %.6g\n", score.doc, score.ratio_vs_zero,
                  score.ratio_vs_max, score.ratio_vs_min);
      make_dir(a_out);
      std::ofstream(fs::path(a_out) / "influence.json")
          << nlohmann::json{{"doc", score.doc},
                            {"ratio_vs_zero", score.ratio_vs_zero},
                            {"ratio_vs_max", score.ratio_vs_max},
                            {"ratio_vs_min", score.ratio_vs_min}}
                 .dump(2)
          << '\n';
      run.manifest.command = "analyze influence";
      run.manifest.config = {{"doc", a_doc}, {"log_counts", log_counts}};
      run.manifest.inputs = {a_fit, corpus_dir};
      run.finish(a_out);
    };
  });

  auto* a_align = analyze->add_subcommand("align", "Standardize and sign-align ideal points");
  a_align->add_option("--fit", a_fit, "Fit directory")->required();
  a_align->add_option("--reference", a_reference, "Reference name,score CSV for the sign");
  a_align->add_option("--out", a_out, "Output directory")->required();
  a_align->callback([&] {
    action = [&] {
      Run run;
      auto b = io::read_bundle(a_fit);
      const auto names = b.author_names();
      const auto x = fit_ideal_points(b);
      analysis::AlignedIdealPoints aligned;
      if (a_reference.empty()) {
        aligned = analysis::align(x);
      } else {
        auto s = csv::read_named_scores(a_reference);
        auto ref = analysis::match_by_name(names, s.names, s.scores);
        aligned = analysis::align(x, std::span<const double>(ref), a_reference);
      }
      make_dir(a_out);
      csv::write_named_scores(fs::path(a_out) / "ideal_points.csv", {names, aligned.values});
      std::printf("%zu ideal points%s\n", names.size(), aligned.sign_flipped ? " (sign flipped)" : "");
      run.manifest.command = "analyze align";
      run.manifest.inputs = {a_fit};
      if (!a_reference.empty()) run.manifest.inputs.push_back(a_reference);
      run.finish(a_out);
    };
  });

  // synth
  auto* syn = app.add_subcommand("synth", "Sample synthetic data with known ideal points");
  syn->require_subcommand(1);
  std::string s_out, s_layout = "two-cluster";

  synth::SynthSpec ts;
  std::string s_alloc = "balanced";
  auto* s_tbip = syn->add_subcommand("tbip", "Corpus from the text-based ideal point model");
  s_tbip->add_option("--out", s_out, "Output corpus directory")->required();
  s_tbip->add_option("--docs", ts.num_docs)->capture_default_str();
  s_tbip->add_option("--terms", ts.num_terms)->capture_default_str();
  s_tbip->add_option("--authors", ts.num_authors)->capture_default_str();
  s_tbip->add_option("--topics", ts.num_topics)->capture_default_str();
  s_tbip->add_option("--layout", s_layout)->check(CLI::IsMember({"two-cluster", "uniform"}))->capture_default_str();
  s_tbip->add_option("--spread", ts.cluster_spread)->capture_default_str();
  s_tbip->add_option("--polarity", ts.polarity_scale)->capture_default_str();
  s_tbip->add_option("--allocation", s_alloc)->check(CLI::IsMember({"balanced", "random"}))->capture_default_str();
  s_tbip->add_option("--seed", ts.seed)->capture_default_str();
  s_tbip->callback([&] {
    action = [&] {
      Run run;
      ts.layout = parse_layout(s_layout);
      ts.allocation = s_alloc == "random" ? synth::DocAllocation::random : synth::DocAllocation::balanced;
      auto sample = synth::sample_tbip(ts);
      make_dir(s_out);
      corpus::write_corpus(s_out, sample.corpus, corpus::placeholder_vocabulary(ts.num_terms));
      corpus::write_weights(fs::path(s_out) / corpus::kWeightsFile, sample.corpus,
                            corpus::compute_weights(sample.corpus));
      synth::write_truth(fs::path(s_out) / "truth.json", sample.corpus.author_names(), sample.truth.x,
                         {{"dropped_docs", sample.dropped_docs}});
      std::printf("%zu documents (%zu dropped)\n", sample.corpus.num_docs(), sample.dropped_docs);
      run.manifest.command = "synth tbip";
      run.manifest.config = {{"docs", ts.num_docs}, {"terms", ts.num_terms}, {"authors", ts.num_authors},
                             {"topics", ts.num_topics}, {"layout", s_layout}, {"spread", ts.cluster_spread},
                             {"polarity", ts.polarity_scale}, {"allocation", s_alloc}};
      run.manifest.seed = ts.seed;
      run.finish(s_out);
    };
  });

  synth::VoteSynthSpec vs;
  auto* s_votes = syn->add_subcommand("votes", "Vote matrix from the Bernoulli ideal point model");
  s_votes->add_option("--out", s_out, "Output directory")->required();
  s_votes->add_option("--lawmakers", vs.num_lawmakers)->capture_default_str();
  s_votes->add_option("--bills", vs.num_bills)->capture_default_str();
  s_votes->add_option("--layout", s_layout)->check(CLI::IsMember({"two-cluster", "uniform"}))->capture_default_str();
  s_votes->add_option("--alpha-loc", vs.alpha_loc)->capture_default_str();
  s_votes->add_option("--alpha-scale", vs.alpha_scale)->capture_default_str();
  s_votes->add_option("--polarity", vs.polarity_scale)->capture_default_str();
  s_votes->add_option("--seed", vs.seed)->capture_default_str();
  s_votes->callback([&] {
    action = [&] {
      Run run;
      vs.layout = parse_layout(s_layout);
      auto sample = synth::sample_votes(vs);
      make_dir(s_out);
      vote::write_votes_csv(fs::path(s_out) / "votes.csv", sample.votes);
      synth::write_truth(fs::path(s_out) / "truth.json", sample.votes.lawmakers(), sample.x,
                         {{"alpha", sample.alpha}, {"eta", sample.eta}});
      run.manifest.command = "synth votes";
      run.manifest.config = {{"lawmakers", vs.num_lawmakers}, {"bills", vs.num_bills}, {"layout", s_layout},
                             {"alpha_loc", vs.alpha_loc}, {"alpha_scale", vs.alpha_scale},
                             {"polarity", vs.polarity_scale}};
      run.manifest.seed = vs.seed;
      run.finish(s_out);
    };
  });

  synth::WordshoalSynthSpec ws;
  auto* s_ws = syn->add_subcommand("wordshoal", "Debate-labeled corpus from the two-stage scaling model");
  s_ws->add_option("--out", s_out, "Output corpus directory")->required();
  s_ws->add_option("--authors", ws.num_authors)->capture_default_str();
  s_ws->add_option("--debates", ws.num_debates)->capture_default_str();
  s_ws->add_option("--terms", ws.num_terms)->capture_default_str();
  s_ws->add_option("--participation", ws.participation)->capture_default_str();
  s_ws->add_option("--seed", ws.seed)->capture_default_str();
  s_ws->callback([&] {
    action = [&] {
      Run run;
      auto sample = synth::sample_wordshoal(ws);
      make_dir(s_out);
      const auto& c = sample.data.corpus;
      corpus::write_corpus(s_out, c, corpus::placeholder_vocabulary(c.num_terms()));
      corpus::write_weights(fs::path(s_out) / corpus::kWeightsFile, c, corpus::compute_weights(c));
      corpus::write_debates(fs::path(s_out) / corpus::kDebatesFile, sample.data.debate_of);
      synth::write_truth(fs::path(s_out) / "truth.json", c.author_names(), sample.x);
      run.manifest.command = "synth wordshoal";
      run.manifest.config = {{"authors", ws.num_authors}, {"debates", ws.num_debates},
                             {"terms", ws.num_terms}, {"participation", ws.participation}};
      run.manifest.seed = ws.seed;
      run.finish(s_out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (action) action();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: malformed JSON: %s\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
