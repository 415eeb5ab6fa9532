#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rarecorpus/corpus.hpp"

namespace rarecorpus {

/// Sparse (strictly increasing indices) or dense real vector with finite weights.
class FeatureVector {
 public:
  FeatureVector() = default;

  /// Throws ValidationError when indices are not strictly increasing, out of
  /// range, or a weight is not finite.
  static FeatureVector sparse(std::size_t dimension, std::vector<std::uint32_t> indices, std::vector<double> values);
  static FeatureVector dense(std::vector<double> values);

  bool is_dense() const noexcept { return dense_; }
  std::size_t dimension() const noexcept { return dimension_; }
  /// Non-zero positions of a sparse vector; empty for dense vectors.
  std::span<const std::uint32_t> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t nonzero_count() const noexcept { return values_.size(); }

  double dot(std::span<const double> weights) const;
  double l2_norm() const;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    if (dense_) {
      for (std::size_t i = 0; i < values_.size(); ++i) fn(i, values_[i]);
    } else {
      for (std::size_t i = 0; i < values_.size(); ++i) fn(static_cast<std::size_t>(indices_[i]), values_[i]);
    }
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::size_t dimension_ = 0;
  bool dense_ = false;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

/// Lowercase word tokens, optionally Porter-stemmed.
std::vector<std::string> tokenize(std::string_view text, bool stem);

/// Space-joined n-grams of the requested orders, in order of appearance.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::span<const int> orders);

struct VocabularyOptions {
  std::vector<int> orders{1, 2, 3};
  std::size_t min_df = 1;
  bool stem = true;
};

/// N-gram dictionary with document frequencies. Indices are assigned in
/// lexicographic order of the n-gram strings.
class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t n_documents() const noexcept { return n_documents_; }
  const std::vector<int>& orders() const noexcept { return orders_; }
  bool stemmed() const noexcept { return stem_; }

  const std::string& term(std::size_t index) const { return terms_.at(index); }
  std::size_t document_frequency(std::size_t index) const { return document_frequency_.at(index); }
  std::optional<std::uint32_t> index_of(std::string_view ngram) const;

  /// ln((1 + n_documents) / (1 + df)) + 1
  double idf(std::size_t index) const { return idf_.at(index); }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.terms_ == b.terms_ && a.document_frequency_ == b.document_frequency_ &&
           a.n_documents_ == b.n_documents_ && a.orders_ == b.orders_ && a.stem_ == b.stem_;
  }

 private:
  friend Vocabulary fit_vocabulary(std::span<const std::string_view> texts, const VocabularyOptions& options);
  void rebuild_lookup();

  std::vector<std::string> terms_;
  std::vector<std::size_t> document_frequency_;
  std::vector<double> idf_;
  std::size_t n_documents_ = 0;
  std::vector<int> orders_;
  bool stem_ = true;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

/// Throws ValidationError("empty collection") on no input, or on orders outside {1,2,3}.
Vocabulary fit_vocabulary(std::span<const std::string_view> texts, const VocabularyOptions& options = {});
Vocabulary fit_vocabulary(const DocumentCollection& collection, const VocabularyOptions& options = {});

/// Raw-count tf times smoothed idf, L2-normalized. Out-of-vocabulary n-grams
/// are ignored; an all-OOV text yields the zero vector.
FeatureVector vectorize_tfidf(std::string_view text, const Vocabulary& vocab);
inline FeatureVector vectorize_tfidf(const Document& doc, const Vocabulary& vocab) {
  return vectorize_tfidf(doc.text, vocab);
}

/// Raw n-gram counts over the vocabulary (multinomial naive Bayes input).
FeatureVector vectorize_counts(std::string_view text, const Vocabulary& vocab);

/// Reads JSON Lines {"doc_id": ..., "vector": [...]}. Throws ValidationError
/// naming the doc_id on a dimension mismatch or a non-finite value.
std::unordered_map<std::string, FeatureVector> load_embeddings(std::istream& in, std::size_t expected_dim);
std::unordered_map<std::string, FeatureVector> load_embeddings(const std::string& path, std::size_t expected_dim);

}  // namespace rarecorpus
