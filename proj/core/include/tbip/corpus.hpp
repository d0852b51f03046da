#pragma once

// Bag-of-words corpus construction: tokenization, n-gram vocabulary with
// document-frequency and author filters, sparse counts, verbosity weights.

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tbip::corpus {

struct RawDocument {
  std::string doc_id;
  std::string author_id;
  std::string text;
  // Optional debate label; only used by the wordshoal baseline.
  std::string debate_id;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  const std::string& term(std::size_t index) const { return terms_.at(index); }
  // Returns size() when the term is unknown.
  std::size_t index_of(std::string_view term) const;
  const std::vector<std::string>& terms() const noexcept { return terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Entry {
  std::uint32_t term = 0;
  double count = 0.0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

// Document x term count matrix, stored row-compressed by document, with one
// author per document. Counts are doubles so transformed corpora keep the
// same type; every stored count is > 0.
class SparseCorpus {
 public:
  struct Triplet {
    std::size_t doc;
    std::size_t term;
    double count;
  };

  SparseCorpus() = default;
  // Validates ranges, positivity and (doc, term) uniqueness.
  SparseCorpus(std::size_t num_docs, std::size_t num_terms,
               std::vector<std::string> author_names,
               std::vector<std::size_t> author_of,
               std::vector<Triplet> triplets);

  std::size_t num_docs() const noexcept { return author_of_.size(); }
  std::size_t num_terms() const noexcept { return num_terms_; }
  std::size_t num_authors() const noexcept { return author_names_.size(); }
  std::size_t num_entries() const noexcept { return entries_.size(); }

  std::size_t author_of(std::size_t doc) const { return author_of_.at(doc); }
  const std::vector<std::size_t>& authors() const noexcept { return author_of_; }
  const std::vector<std::string>& author_names() const noexcept { return author_names_; }

  // Nonzero entries of one document, sorted by term.
  const Entry* row_begin(std::size_t doc) const { return entries_.data() + offsets_[doc]; }
  const Entry* row_end(std::size_t doc) const { return entries_.data() + offsets_[doc + 1]; }
  std::size_t row_nnz(std::size_t doc) const { return offsets_[doc + 1] - offsets_[doc]; }

  double doc_length(std::size_t doc) const;
  std::vector<Triplet> triplets() const;
  // Dense count for (doc, term); zero when absent.
  double count(std::size_t doc, std::size_t term) const;

  friend bool operator==(const SparseCorpus&, const SparseCorpus&) = default;

 private:
  std::size_t num_terms_ = 0;
  std::vector<std::string> author_names_;
  std::vector<std::size_t> author_of_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
};

struct PreprocessConfig {
  double min_doc_frequency = 0.001;
  double max_doc_frequency = 0.3;
  std::size_t min_authors_per_term = 10;
  std::size_t min_docs_per_author = 1;
  std::set<std::string> stopwords;
  int max_ngram = 3;

  void validate() const;
};

struct BuiltCorpus {
  SparseCorpus corpus;
  Vocabulary vocabulary;
  // doc_id of each surviving document, in corpus order.
  std::vector<std::string> doc_ids;
  // Debate label of each surviving document (empty strings if unlabeled).
  std::vector<std::string> debate_ids;
};

using TokenCounts = std::map<std::string, std::size_t>;

// Lowercased alphabetic tokens; stopwords are removed before n-grams are
// formed, and n-grams are joined with a single space.
TokenCounts tokenize(std::string_view text, int max_ngram,
                     const std::set<std::string>& stopwords);

// Both document-frequency bounds are inclusive. Filtering is repeated until
// no author, term or document is removed, so the retained terms satisfy the
// frequency bounds relative to the final document count.
BuiltCorpus build_corpus(const std::vector<RawDocument>& docs, const PreprocessConfig& cfg);

// w_s = n_s / mean_s'(n_s'), where n_s is the mean token count per document
// of author s.
std::vector<double> compute_weights(const SparseCorpus& corpus);

// Replaces every count y by floor(ln(1 + y) + 0.5); zero results are dropped.
SparseCorpus log_transform(const SparseCorpus& corpus);

double median_doc_length(const SparseCorpus& corpus);

}  // namespace tbip::corpus
