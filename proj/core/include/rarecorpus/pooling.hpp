#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rarecorpus/corpus.hpp"
#include "rarecorpus/features.hpp"
#include "rarecorpus/models.hpp"

namespace rarecorpus {

/// One member of the pooling ensemble: a trained model together with the
/// featurization it was trained under. `score` returns nullopt for documents
/// the model cannot score (e.g. missing external scores).
struct PoolModel {
  std::string name;
  std::function<std::optional<double>(const Document&)> score;
};

using Featurizer = std::function<FeatureVector(const Document&)>;

Featurizer tfidf_featurizer(std::shared_ptr<const Vocabulary> vocab);
Featurizer count_featurizer(std::shared_ptr<const Vocabulary> vocab);

PoolModel make_pool_model(std::string name, std::shared_ptr<const BinaryClassifier> model, Featurizer featurizer);
/// Wraps an external-score adapter; documents without a score are unscorable.
PoolModel make_external_pool_model(std::string name, std::shared_ptr<const BinaryClassifier> scores);

/// A labeled prior dataset used to train ensemble members.
struct PriorDataset {
  std::string name;
  DocumentCollection documents;
};

/// Trains every (dataset, classifier kind) pair: logistic regression over
/// TF-IDF features, naive Bayes over raw n-gram counts, each with a vocabulary
/// fitted on its own training dataset.
std::vector<PoolModel> train_pool_models(const std::vector<PriorDataset>& datasets,
                                         const std::vector<ClassifierKind>& kinds,
                                         const VocabularyOptions& vocab_options, const TrainingConfig& training);

struct PoolConfig {
  double threshold = 0.5;
  std::size_t budget = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct PoolResult {
  std::vector<std::string> selected;  // sampled order
  std::size_t candidate_count = 0;
  std::vector<std::string> model_names;
  std::vector<std::size_t> per_model_hit_counts;
  std::vector<std::size_t> per_model_unscored;
  /// overlap[i][j] = documents scoring >= t under both model i and model j.
  std::vector<std::vector<std::size_t>> overlap;
  std::string diagnostic;
};

/// Candidate set S = documents scoring >= threshold under any model; the
/// result is a uniform sample of min(budget, |S|) unique documents from S,
/// deterministic under rng_seed. An empty S is reported, not thrown.
PoolResult build_pool(const DocumentCollection& collection, const std::vector<PoolModel>& models,
                      const PoolConfig& config);

struct PoolSummary {
  std::size_t selected_count = 0;
  std::size_t selected_with_lexicon = 0;
  double lexicon_fraction = 0.0;
  std::size_t candidate_count = 0;
  std::vector<std::string> model_names;
  std::vector<std::size_t> per_model_hit_counts;
  std::vector<std::vector<std::size_t>> overlap;

  nlohmann::json to_json() const;
};

PoolSummary stratify_report(const PoolResult& result, const DocumentCollection& collection, const HateLexicon& lexicon);

}  // namespace rarecorpus
