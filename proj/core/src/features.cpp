#include "rarecorpus/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

#include "rarecorpus/error.hpp"
#include "rarecorpus/porter_stemmer.hpp"
#include "rarecorpus/text.hpp"

namespace rarecorpus {

using nlohmann::json;

// ---------------------------------------------------------------------------
// FeatureVector

FeatureVector FeatureVector::sparse(std::size_t dimension, std::vector<std::uint32_t> indices,
                                    std::vector<double> values) {
  if (indices.size() != values.size()) throw ValidationError("sparse vector: index/value length mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dimension) throw ValidationError("sparse vector: index out of range");
    if (i > 0 && indices[i] <= indices[i - 1]) throw ValidationError("sparse vector: indices not strictly increasing");
    if (!std::isfinite(values[i])) throw ValidationError("sparse vector: non-finite weight");
  }
  FeatureVector v;
  v.dimension_ = dimension;
  v.indices_ = std::move(indices);
  v.values_ = std::move(values);
  return v;
}

FeatureVector FeatureVector::dense(std::vector<double> values) {
  if (values.empty()) throw ValidationError("dense vector must have positive dimension");
  for (double x : values) {
    if (!std::isfinite(x)) throw ValidationError("dense vector: non-finite weight");
  }
  FeatureVector v;
  v.dimension_ = values.size();
  v.dense_ = true;
  v.values_ = std::move(values);
  return v;
}

double FeatureVector::dot(std::span<const double> weights) const {
  double sum = 0.0;
  if (dense_) {
    const std::size_t n = std::min(weights.size(), values_.size());
    for (std::size_t i = 0; i < n; ++i) sum += values_[i] * weights[i];
  } else {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (indices_[i] < weights.size()) sum += values_[i] * weights[indices_[i]];
    }
  }
  return sum;
}

double FeatureVector::l2_norm() const {
  double sum = 0.0;
  for (double x : values_) sum += x * x;
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Tokens and n-grams

std::vector<std::string> tokenize(std::string_view text, bool stem) {
  auto tokens = word_tokens(text);
  if (stem) {
    for (auto& token : tokens) token = porter_stem(token);
  }
  return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::span<const int> orders) {
  std::vector<std::string> out;
  for (int n : orders) {
    if (n <= 0) continue;
    const auto order = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < order; ++k) {
        gram.push_back(' ');
        gram += tokens[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

namespace {

std::vector<int> normalized_orders(std::vector<int> orders) {
  if (orders.empty()) throw ValidationError("no n-gram orders requested");
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  for (int n : orders) {
    if (n < 1 || n > 3) throw ValidationError("n-gram orders must be within {1,2,3}");
  }
  return orders;
}

}  // namespace

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view ngram) const {
  const auto it = lookup_.find(std::string(ngram));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::rebuild_lookup() {
  lookup_.clear();
  lookup_.reserve(terms_.size());
  idf_.resize(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    lookup_.emplace(terms_[i], static_cast<std::uint32_t>(i));
    idf_[i] = std::log((1.0 + static_cast<double>(n_documents_)) / (1.0 + static_cast<double>(document_frequency_[i]))) + 1.0;
  }
}

json Vocabulary::to_json() const {
  json terms = json::object();
  for (std::size_t i = 0; i < terms_.size(); ++i) terms[terms_[i]] = {{"index", i}, {"df", document_frequency_[i]}};
  return {{"n_documents", n_documents_}, {"orders", orders_}, {"stem", stem_}, {"ngrams", terms}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  Vocabulary vocab;
  vocab.n_documents_ = j.at("n_documents").get<std::size_t>();
  vocab.orders_ = normalized_orders(j.at("orders").get<std::vector<int>>());
  vocab.stem_ = j.value("stem", true);
  const auto& grams = j.at("ngrams");
  vocab.terms_.resize(grams.size());
  vocab.document_frequency_.resize(grams.size());
  std::vector<bool> filled(grams.size(), false);
  for (auto it = grams.begin(); it != grams.end(); ++it) {
    const auto index = it.value().at("index").get<std::size_t>();
    const auto df = it.value().at("df").get<std::size_t>();
    if (index >= grams.size() || filled[index]) throw ValidationError("vocabulary indices are not dense");
    if (df < 1) throw ValidationError("vocabulary document frequency must be >= 1");
    filled[index] = true;
    vocab.terms_[index] = it.key();
    vocab.document_frequency_[index] = df;
  }
  vocab.rebuild_lookup();
  return vocab;
}

Vocabulary fit_vocabulary(std::span<const std::string_view> texts, const VocabularyOptions& options) {
  if (texts.empty()) throw ValidationError("empty collection");
  Vocabulary vocab;
  vocab.orders_ = normalized_orders(options.orders);
  vocab.stem_ = options.stem;
  vocab.n_documents_ = texts.size();

  std::map<std::string, std::size_t> df;
  for (const auto text : texts) {
    auto grams = ngrams(tokenize(text, options.stem), vocab.orders_);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& gram : grams) ++df[std::move(gram)];
  }
  const std::size_t min_df = std::max<std::size_t>(1, options.min_df);
  for (auto& [gram, count] : df) {
    if (count < min_df) continue;
    vocab.terms_.push_back(gram);
    vocab.document_frequency_.push_back(count);
  }
  vocab.rebuild_lookup();
  return vocab;
}

Vocabulary fit_vocabulary(const DocumentCollection& collection, const VocabularyOptions& options) {
  std::vector<std::string_view> texts;
  texts.reserve(collection.size());
  for (const auto& doc : collection) texts.emplace_back(doc.text);
  return fit_vocabulary(texts, options);
}

namespace {

std::map<std::uint32_t, double> count_ngrams(std::string_view text, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& gram : ngrams(tokenize(text, vocab.stemmed()), vocab.orders())) {
    if (auto index = vocab.index_of(gram)) counts[*index] += 1.0;
  }
  return counts;
}

}  // namespace

FeatureVector vectorize_tfidf(std::string_view text, const Vocabulary& vocab) {
  const auto counts = count_ngrams(text, vocab);
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  indices.reserve(counts.size());
  values.reserve(counts.size());
  double norm = 0.0;
  for (const auto& [index, tf] : counts) {
    const double weight = tf * vocab.idf(index);
    indices.push_back(index);
    values.push_back(weight);
    norm += weight * weight;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& v : values) v /= norm;
  }
  return FeatureVector::sparse(vocab.size(), std::move(indices), std::move(values));
}

FeatureVector vectorize_counts(std::string_view text, const Vocabulary& vocab) {
  const auto counts = count_ngrams(text, vocab);
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  for (const auto& [index, tf] : counts) {
    indices.push_back(index);
    values.push_back(tf);
  }
  return FeatureVector::sparse(vocab.size(), std::move(indices), std::move(values));
}

// ---------------------------------------------------------------------------
// Embeddings

std::unordered_map<std::string, FeatureVector> load_embeddings(std::istream& in, std::size_t expected_dim) {
  if (expected_dim == 0) throw ValidationError("embedding dimension must be positive");
  std::unordered_map<std::string, FeatureVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("embedding line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string doc_id = row.at("doc_id").is_string() ? row.at("doc_id").get<std::string>()
                                                            : row.at("doc_id").dump();
    const auto& vector = row.at("vector");
    if (!vector.is_array() || vector.size() != expected_dim) {
      throw ValidationError("embedding for doc_id " + doc_id + " has dimension " +
                            std::to_string(vector.is_array() ? vector.size() : 0) + ", expected " +
                            std::to_string(expected_dim));
    }
    std::vector<double> values;
    values.reserve(expected_dim);
    for (const auto& x : vector) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw ValidationError("embedding for doc_id " + doc_id + " has a non-finite value");
      }
      values.push_back(x.get<double>());
    }
    if (!out.emplace(doc_id, FeatureVector::dense(std::move(values))).second) {
      throw ValidationError("duplicate embedding for doc_id " + doc_id);
    }
  }
  return out;
}

std::unordered_map<std::string, FeatureVector> load_embeddings(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path);
  return load_embeddings(in, expected_dim);
}

}  // namespace rarecorpus
