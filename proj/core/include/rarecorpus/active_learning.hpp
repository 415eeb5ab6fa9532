#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rarecorpus/corpus.hpp"
#include "rarecorpus/error.hpp"
#include "rarecorpus/features.hpp"
#include "rarecorpus/models.hpp"

namespace rarecorpus {

enum class Strategy { cal, sal, spl };
enum class FeatureMode { tfidf, embedding, external_scores };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);
std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

/// Binary entropy in bits, with 0 log 0 = 0.
double entropy(double p);

struct ALConfig {
  Strategy strategy = Strategy::cal;
  std::size_t batch_size = 1;
  std::size_t budget = 0;
  std::vector<std::string> seed_doc_ids;
  std::uint64_t rng_seed = 0;
  FeatureMode feature_mode = FeatureMode::tfidf;
  TrainingConfig training;

  /// Structural checks only; seed labels are checked once they are known.
  void validate() const;
  nlohmann::json to_json() const;
  static ALConfig from_json(const nlohmann::json& j);
};

/// Featurized view of a collection plus a way to fit a model on any subset.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::size_t size() const = 0;
  virtual std::shared_ptr<const BinaryClassifier> fit(std::span<const std::size_t> doc_indices,
                                                      std::span<const Label> labels) const = 0;
  virtual double score(const BinaryClassifier& model, std::size_t doc_index) const = 0;

  std::vector<double> score_all(const BinaryClassifier& model) const;
};

/// Logistic regression over precomputed per-document feature vectors.
class FeatureLearner final : public Learner {
 public:
  FeatureLearner(std::vector<FeatureVector> features, TrainingConfig training);

  std::size_t size() const override { return features_.size(); }
  std::shared_ptr<const BinaryClassifier> fit(std::span<const std::size_t> doc_indices,
                                              std::span<const Label> labels) const override;
  double score(const BinaryClassifier& model, std::size_t doc_index) const override;
  const std::vector<FeatureVector>& features() const noexcept { return features_; }

 private:
  std::vector<FeatureVector> features_;
  TrainingConfig training_;
};

/// A fixed external scorer; fitting is a no-op.
class ExternalScoreLearner final : public Learner {
 public:
  ExternalScoreLearner(const DocumentCollection& collection, std::shared_ptr<const BinaryClassifier> scores);

  std::size_t size() const override { return scores_.size(); }
  std::shared_ptr<const BinaryClassifier> fit(std::span<const std::size_t>, std::span<const Label>) const override {
    return model_;
  }
  double score(const BinaryClassifier&, std::size_t doc_index) const override { return scores_[doc_index]; }

 private:
  std::shared_ptr<const BinaryClassifier> model_;
  std::vector<double> scores_;
};

struct FeatureSources {
  VocabularyOptions vocabulary;
  const std::unordered_map<std::string, FeatureVector>* embeddings = nullptr;
  std::shared_ptr<const BinaryClassifier> external_scores;
};

/// TF-IDF vocabularies are fitted once over the whole collection. Throws
/// ValidationError when the collection is not featurizable under `mode`.
std::unique_ptr<Learner> make_learner(const DocumentCollection& collection, FeatureMode mode,
                                      const TrainingConfig& training, const FeatureSources& sources = {});

struct Judgment {
  std::string doc_id;
  Label label;
  std::size_t iteration;  // 0 for seeds
};

struct SelectionRecord {
  std::size_t iteration;
  std::vector<std::string> doc_ids;
  std::vector<double> scores;
};

struct ALState {
  std::vector<Judgment> judged;
  std::size_t budget = 0;
  std::size_t remaining_budget = 0;
  std::size_t iteration = 0;
  std::shared_ptr<const BinaryClassifier> model;
  std::vector<SelectionRecord> history;
  std::vector<std::string> outstanding;  // proposed but not yet labeled
  std::optional<std::string> abort_reason;
  std::mt19937_64 rng;
};

/// Picks up to u unjudged documents from precomputed scores. CAL takes the
/// highest scores, SAL the scores closest to 0.5, SPL a uniform random
/// sample; CAL/SAL ties go to the smaller doc_id. Returns collection indices.
std::vector<std::size_t> select_from_scores(std::span<const double> scores, const DocumentCollection& collection,
                                            const std::vector<bool>& judged, Strategy strategy, std::size_t u,
                                            std::mt19937_64& rng);

/// Scores every unjudged document with the state's model and selects the next batch.
std::vector<std::string> select_next(const ALState& state, const DocumentCollection& collection, const Learner& learner,
                                     Strategy strategy, std::size_t u, std::mt19937_64& rng);

/// Thrown by oracles that cannot label a document.
class OracleError : public Error {
 public:
  using Error::Error;
};

using Oracle = std::function<Label(const std::string& doc_id)>;

/// Step-wise driver of the selection loop. Interactive front ends call
/// propose()/record(); batch runs use run().
class ActiveLearningLoop {
 public:
  ActiveLearningLoop(const DocumentCollection& collection, const Learner& learner, ALConfig config);

  /// Labels the seeds, trains the initial model, and charges the budget.
  /// Seeds need at least one label of each class.
  void start(std::span<const std::pair<std::string, Label>> seed_labels);
  void start(const Oracle& oracle);

  bool started() const noexcept { return started_; }
  /// Remaining budget below the batch size, or nothing left to judge.
  bool exhausted() const;

  /// Returns the outstanding batch, selecting a new one if none is pending.
  const std::vector<std::string>& propose();
  /// Accepts labels for exactly the outstanding batch, retrains, and charges the budget.
  void record(std::span<const std::pair<std::string, Label>> labels);

  /// Runs to exhaustion. An oracle failure stops the loop with abort_reason
  /// set; calling run() again resumes with the same outstanding batch.
  const ALState& run(const Oracle& oracle, const std::function<void(const ALState&)>& on_iteration = {});

  /// SPL selection never reads the model, so SPL retrains only when the
  /// state is inspected.
  const ALState& state() const;
  const ALConfig& config() const noexcept { return config_; }
  bool is_judged(std::size_t doc_index) const { return judged_mask_[doc_index]; }

  nlohmann::json checkpoint() const;
  /// Rebuilds a loop from checkpoint(); the model is retrained on the judged set.
  static ActiveLearningLoop restore(const DocumentCollection& collection, const Learner& learner,
                                    const nlohmann::json& checkpoint);

 private:
  void retrain() const;
  void add_judgment(const std::string& doc_id, Label label);

  const DocumentCollection* collection_;
  const Learner* learner_;
  ALConfig config_;
  mutable ALState state_;
  mutable bool model_stale_ = false;
  std::vector<bool> judged_mask_;
  std::size_t judged_count_ = 0;
  bool started_ = false;
};

/// Algorithm-level convenience: start from the configured seeds and run to exhaustion.
ALState run_loop(const DocumentCollection& collection, const Learner& learner, const Oracle& oracle,
                 const ALConfig& config);

/// Random seed set with `positives` hateful and `negatives` non-hateful gold-labeled documents.
std::vector<std::string> choose_seeds(const DocumentCollection& collection, std::size_t positives,
                                      std::size_t negatives, std::uint64_t rng_seed);

}  // namespace rarecorpus
