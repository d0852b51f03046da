#include "tbip/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "tbip/error.hpp"

namespace tbip::corpus {

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], i).second) {
      throw ValidationError("duplicate vocabulary term: " + terms_[i]);
    }
  }
}

std::size_t Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? terms_.size() : it->second;
}

SparseCorpus::SparseCorpus(std::size_t num_docs, std::size_t num_terms,
                           std::vector<std::string> author_names,
                           std::vector<std::size_t> author_of,
                           std::vector<Triplet> triplets)
    : num_terms_(num_terms),
      author_names_(std::move(author_names)),
      author_of_(std::move(author_of)) {
  if (author_of_.size() != num_docs) {
    throw ValidationError("author_of must cover every document");
  }
  for (std::size_t a : author_of_) {
    if (a >= author_names_.size()) throw ValidationError("author index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& l, const Triplet& r) {
    return l.doc != r.doc ? l.doc < r.doc : l.term < r.term;
  });
  offsets_.assign(num_docs + 1, 0);
  entries_.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (t.doc >= num_docs || t.term >= num_terms) {
      throw ValidationError("sparse entry index out of range");
    }
    if (!(t.count > 0.0) || !std::isfinite(t.count)) {
      throw ValidationError("sparse entries must have positive finite counts");
    }
    if (i > 0 && triplets[i - 1].doc == t.doc && triplets[i - 1].term == t.term) {
      throw ValidationError("duplicate (doc, term) entry");
    }
    entries_.push_back({static_cast<std::uint32_t>(t.term), t.count});
    ++offsets_[t.doc + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

double SparseCorpus::doc_length(std::size_t doc) const {
  double total = 0.0;
  for (auto* e = row_begin(doc); e != row_end(doc); ++e) total += e->count;
  return total;
}

std::vector<SparseCorpus::Triplet> SparseCorpus::triplets() const {
  std::vector<Triplet> out;
  out.reserve(entries_.size());
  for (std::size_t d = 0; d < num_docs(); ++d) {
    for (auto* e = row_begin(d); e != row_end(d); ++e) out.push_back({d, e->term, e->count});
  }
  return out;
}

double SparseCorpus::count(std::size_t doc, std::size_t term) const {
  auto* first = row_begin(doc);
  auto* last = row_end(doc);
  auto* it = std::lower_bound(first, last, term,
                              [](const Entry& e, std::size_t t) { return e.term < t; });
  return (it != last && it->term == term) ? it->count : 0.0;
}

void PreprocessConfig::validate() const {
  if (!(0.0 <= min_doc_frequency && min_doc_frequency < max_doc_frequency &&
        max_doc_frequency <= 1.0)) {
    throw ValidationError("require 0 <= min_doc_frequency < max_doc_frequency <= 1");
  }
  if (max_ngram < 1 || max_ngram > 3) throw ValidationError("max_ngram must be in 1..3");
}

TokenCounts tokenize(std::string_view text, int max_ngram,
                     const std::set<std::string>& stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      if (!stopwords.contains(current)) tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : text) {
    // Bytes >= 0x80 belong to multi-byte UTF-8 letters and stay in the token.
    if (std::isalpha(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();

  TokenCounts counts;
  for (int n = 1; n <= max_ngram; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (int j = 1; j < n; ++j) {
        gram += ' ';
        gram += tokens[i + j];
      }
      ++counts[gram];
    }
  }
  return counts;
}

namespace {

struct Working {
  std::size_t author;
  std::size_t source;  // index into the input documents
  TokenCounts tokens;
};

}  // namespace

BuiltCorpus build_corpus(const std::vector<RawDocument>& docs, const PreprocessConfig& cfg) {
  cfg.validate();
  if (docs.empty()) throw ValidationError("no documents to preprocess");

  std::vector<std::string> author_names;
  std::unordered_map<std::string, std::size_t> author_index;
  std::unordered_set<std::string> seen_ids;
  std::vector<Working> work;
  work.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& doc = docs[i];
    if (doc.author_id.empty()) throw ValidationError("document " + doc.doc_id + " has no author");
    if (!seen_ids.insert(doc.doc_id).second) {
      throw ValidationError("duplicate document id: " + doc.doc_id);
    }
    auto [it, inserted] = author_index.emplace(doc.author_id, author_names.size());
    if (inserted) author_names.push_back(doc.author_id);
    work.push_back({it->second, i, tokenize(doc.text, cfg.max_ngram, cfg.stopwords)});
  }

  std::set<std::string> kept_terms;
  for (bool changed = true; changed;) {
    changed = false;

    std::vector<std::size_t> docs_per_author(author_names.size(), 0);
    for (const auto& w : work) ++docs_per_author[w.author];
    auto before = work.size();
    std::erase_if(work, [&](const Working& w) {
      return docs_per_author[w.author] < cfg.min_docs_per_author;
    });
    changed |= work.size() != before;
    if (work.empty()) throw AllDocumentsFiltered();

    std::map<std::string, std::pair<std::size_t, std::set<std::size_t>>> stats;
    for (const auto& w : work) {
      for (const auto& [term, n] : w.tokens) {
        auto& s = stats[term];
        ++s.first;
        s.second.insert(w.author);
      }
    }
    const double num_docs = static_cast<double>(work.size());
    std::set<std::string> terms;
    for (const auto& [term, s] : stats) {
      const double df = static_cast<double>(s.first) / num_docs;
      if (df >= cfg.min_doc_frequency && df <= cfg.max_doc_frequency &&
          s.second.size() >= cfg.min_authors_per_term) {
        terms.insert(term);
      }
    }
    for (auto& w : work) {
      std::erase_if(w.tokens, [&](const auto& kv) { return !terms.contains(kv.first); });
    }
    before = work.size();
    std::erase_if(work, [](const Working& w) { return w.tokens.empty(); });
    changed |= work.size() != before;
    if (work.empty()) throw AllDocumentsFiltered();
    kept_terms = std::move(terms);
  }

  Vocabulary vocab(std::vector<std::string>(kept_terms.begin(), kept_terms.end()));

  // Re-index surviving authors in order of first appearance.
  std::vector<std::size_t> remap(author_names.size(), SIZE_MAX);
  std::vector<std::string> kept_authors;
  for (const auto& w : work) {
    if (remap[w.author] == SIZE_MAX) {
      remap[w.author] = kept_authors.size();
      kept_authors.push_back(author_names[w.author]);
    }
  }

  BuiltCorpus out;
  std::vector<std::size_t> author_of;
  std::vector<SparseCorpus::Triplet> triplets;
  for (std::size_t d = 0; d < work.size(); ++d) {
    author_of.push_back(remap[work[d].author]);
    out.doc_ids.push_back(docs[work[d].source].doc_id);
    out.debate_ids.push_back(docs[work[d].source].debate_id);
    for (const auto& [term, n] : work[d].tokens) {
      triplets.push_back({d, vocab.index_of(term), static_cast<double>(n)});
    }
  }
  out.corpus = SparseCorpus(work.size(), vocab.size(), std::move(kept_authors),
                            std::move(author_of), std::move(triplets));
  out.vocabulary = std::move(vocab);
  return out;
}

std::vector<double> compute_weights(const SparseCorpus& corpus) {
  const std::size_t num_authors = corpus.num_authors();
  std::vector<double> total(num_authors, 0.0);
  std::vector<double> docs(num_authors, 0.0);
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    total[corpus.author_of(d)] += corpus.doc_length(d);
    docs[corpus.author_of(d)] += 1.0;
  }
  std::vector<double> verbosity(num_authors);
  for (std::size_t s = 0; s < num_authors; ++s) {
    if (docs[s] == 0.0) {
      throw ValidationError("author " + corpus.author_names()[s] + " has no documents");
    }
    verbosity[s] = total[s] / docs[s];
  }
  const double mean =
      std::accumulate(verbosity.begin(), verbosity.end(), 0.0) / static_cast<double>(num_authors);
  if (!(mean > 0.0)) throw ValidationError("corpus has no tokens");
  for (auto& v : verbosity) v /= mean;
  return verbosity;
}

SparseCorpus log_transform(const SparseCorpus& corpus) {
  std::vector<SparseCorpus::Triplet> out;
  for (const auto& t : corpus.triplets()) {
    const double y = std::floor(std::log1p(t.count) + 0.5);
    if (y > 0.0) out.push_back({t.doc, t.term, y});
  }
  return SparseCorpus(corpus.num_docs(), corpus.num_terms(), corpus.author_names(),
                      corpus.authors(), std::move(out));
}

double median_doc_length(const SparseCorpus& corpus) {
  std::vector<double> lengths(corpus.num_docs());
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) lengths[d] = corpus.doc_length(d);
  if (lengths.empty()) return 0.0;
  std::sort(lengths.begin(), lengths.end());
  const std::size_t n = lengths.size();
  return n % 2 ? lengths[n / 2] : 0.5 * (lengths[n / 2 - 1] + lengths[n / 2]);
}

}  // namespace tbip::corpus
