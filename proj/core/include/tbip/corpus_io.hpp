#pragma once

// On-disk corpus formats.
//
//   counts.txt   "doc term count" per line, 0-based indices
//   vocab.txt    one term per line; line number is the term index
//   authors.csv  doc_index,author_name
//   weights.csv  author_name,weight
//   debates.csv  doc_index,debate_id (optional)

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tbip/corpus.hpp"

namespace tbip::corpus {

inline constexpr const char* kCountsFile = "counts.txt";
inline constexpr const char* kVocabFile = "vocab.txt";
inline constexpr const char* kAuthorsFile = "authors.csv";
inline constexpr const char* kWeightsFile = "weights.csv";
inline constexpr const char* kDebatesFile = "debates.csv";

// One JSON object per line with string fields "id", "author", "text" and an
// optional "debate".
std::vector<RawDocument> read_jsonl(const std::filesystem::path& path);

struct CorpusFiles {
  SparseCorpus corpus;
  Vocabulary vocabulary;
  // Present when debates.csv exists in the directory.
  std::optional<std::vector<std::string>> debate_ids;
};

void write_corpus(const std::filesystem::path& dir, const SparseCorpus& corpus,
                  const Vocabulary& vocab);
void write_weights(const std::filesystem::path& path, const SparseCorpus& corpus,
                   const std::vector<double>& weights);
void write_debates(const std::filesystem::path& path, const std::vector<std::string>& debate_ids);

CorpusFiles read_corpus(const std::filesystem::path& dir);
std::vector<std::string> read_debates(const std::filesystem::path& path, std::size_t num_docs);

// Generates placeholder terms "term0".."termN-1" for corpora without a vocabulary.
Vocabulary placeholder_vocabulary(std::size_t num_terms);

}  // namespace tbip::corpus
