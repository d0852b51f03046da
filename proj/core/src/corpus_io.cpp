#include "tbip/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tbip/csv.hpp"
#include "tbip/error.hpp"

namespace tbip::corpus {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::size_t parse_index(const std::string& s, const fs::path& path) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("bad index '" + s + "' in " + path.string());
  }
  return v;
}

}  // namespace

std::vector<RawDocument> read_jsonl(const fs::path& path) {
  auto in = open_input(path);
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      RawDocument doc;
      doc.doc_id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      doc.author_id = j.at("author").get<std::string>();
      doc.text = j.at("text").get<std::string>();
      if (j.contains("debate")) {
        doc.debate_id =
            j["debate"].is_string() ? j["debate"].get<std::string>() : j["debate"].dump();
      }
      docs.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

void write_corpus(const fs::path& dir, const SparseCorpus& corpus, const Vocabulary& vocab) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / kCountsFile);
    if (!out) throw IoError("cannot write " + (dir / kCountsFile).string());
    for (const auto& t : corpus.triplets()) {
      out << t.doc << ' ' << t.term << ' ' << csv::format_double(t.count) << '\n';
    }
  }
  {
    std::ofstream out(dir / kVocabFile);
    if (!out) throw IoError("cannot write " + (dir / kVocabFile).string());
    for (const auto& term : vocab.terms()) out << term << '\n';
  }
  std::vector<csv::Row> rows;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    rows.push_back({std::to_string(d), corpus.author_names()[corpus.author_of(d)]});
  }
  csv::write_file(dir / kAuthorsFile, {"doc_index", "author_name"}, rows);
}

void write_weights(const fs::path& path, const SparseCorpus& corpus,
                   const std::vector<double>& weights) {
  std::vector<csv::Row> rows;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    rows.push_back({corpus.author_names()[s], csv::format_double(weights[s])});
  }
  csv::write_file(path, {"author_name", "weight"}, rows);
}

void write_debates(const fs::path& path, const std::vector<std::string>& debate_ids) {
  std::vector<csv::Row> rows;
  for (std::size_t d = 0; d < debate_ids.size(); ++d) {
    rows.push_back({std::to_string(d), debate_ids[d]});
  }
  csv::write_file(path, {"doc_index", "debate_id"}, rows);
}

std::vector<std::string> read_debates(const fs::path& path, std::size_t num_docs) {
  std::vector<std::string> labels(num_docs);
  std::vector<bool> seen(num_docs, false);
  for (const auto& row : csv::read_file(path, 0)) {
    if (row.size() < 2) throw IoError("expected doc_index,debate_id in " + path.string());
    const auto d = parse_index(row[0], path);
    if (d >= num_docs) throw ValidationError("debate label for unknown document " + row[0]);
    labels[d] = row[1];
    seen[d] = true;
  }
  for (std::size_t d = 0; d < num_docs; ++d) {
    if (!seen[d]) throw ValidationError("document " + std::to_string(d) + " has no debate label");
  }
  return labels;
}

CorpusFiles read_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());

  std::vector<std::string> author_names;
  std::unordered_map<std::string, std::size_t> author_index;
  std::vector<std::size_t> author_of;
  for (const auto& row : csv::read_file(dir / kAuthorsFile, 0)) {
    if (row.size() < 2) throw IoError("expected doc_index,author_name in authors.csv");
    const auto d = parse_index(row[0], dir / kAuthorsFile);
    if (d != author_of.size()) throw IoError("authors.csv must list documents 0..D-1 in order");
    auto [it, inserted] = author_index.emplace(row[1], author_names.size());
    if (inserted) author_names.push_back(row[1]);
    author_of.push_back(it->second);
  }

  std::vector<std::string> terms;
  if (fs::exists(dir / kVocabFile)) {
    auto in = open_input(dir / kVocabFile);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      terms.push_back(line);
    }
  }

  std::vector<SparseCorpus::Triplet> triplets;
  std::size_t max_term = 0;
  {
    auto in = open_input(dir / kCountsFile);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      SparseCorpus::Triplet t{};
      if (!(ls >> t.doc >> t.term >> t.count)) {
        throw IoError("counts.txt:" + std::to_string(line_no) + ": expected 'doc term count'");
      }
      max_term = std::max(max_term, t.term + 1);
      triplets.push_back(t);
    }
  }

  CorpusFiles out;
  out.vocabulary = terms.empty() ? placeholder_vocabulary(max_term) : Vocabulary(std::move(terms));
  const std::size_t num_docs = author_of.size();
  out.corpus = SparseCorpus(num_docs, out.vocabulary.size(), std::move(author_names),
                            std::move(author_of), std::move(triplets));
  if (fs::exists(dir / kDebatesFile)) out.debate_ids = read_debates(dir / kDebatesFile, num_docs);
  return out;
}

Vocabulary placeholder_vocabulary(std::size_t num_terms) {
  std::vector<std::string> terms;
  terms.reserve(num_terms);
  for (std::size_t v = 0; v < num_terms; ++v) terms.push_back("term" + std::to_string(v));
  return Vocabulary(std::move(terms));
}

}  // namespace tbip::corpus
