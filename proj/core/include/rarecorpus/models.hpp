#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rarecorpus/features.hpp"
#include "rarecorpus/label.hpp"

namespace rarecorpus {

enum class ClassifierKind { logistic_regression, naive_bayes, external_scores };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct TrainingConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  double l2_lambda = 1e-4;
  double laplace_alpha = 1.0;  // naive Bayes only

  /// Throws ValidationError on non-positive rate/epochs/alpha or negative lambda.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& j);
};

/// A training example borrowing its features.
struct LabeledExample {
  const FeatureVector* features;
  Label label;
};

struct LogisticParameters {
  std::vector<double> weights;
  double bias = 0.0;
};

struct NaiveBayesParameters {
  // log P(term | class), indexed by feature
  std::vector<double> log_likelihood_hateful;
  std::vector<double> log_likelihood_non_hateful;
  double log_prior_hateful = 0.0;
  double log_prior_non_hateful = 0.0;
};

struct ExternalScores {
  std::unordered_map<std::string, double> scores;
};

/// p(hateful | x) from one of three model families. Immutable after
/// construction, so prediction is safe from any number of threads.
class BinaryClassifier {
 public:
  using Parameters = std::variant<LogisticParameters, NaiveBayesParameters, ExternalScores>;

  explicit BinaryClassifier(Parameters parameters, std::size_t feature_dimension = 0);

  ClassifierKind kind() const noexcept;
  std::size_t feature_dimension() const noexcept { return dimension_; }
  const Parameters& parameters() const noexcept { return parameters_; }

  /// Feature-based models only. Throws ValidationError on a dimension mismatch.
  double predict(const FeatureVector& x) const;
  /// External scores only. Throws NotFoundError("no score for document ...").
  double predict(std::string_view doc_id) const;
  bool has_score(std::string_view doc_id) const;

  nlohmann::json to_json() const;
  static BinaryClassifier from_json(const nlohmann::json& j);

 private:
  Parameters parameters_;
  std::size_t dimension_ = 0;
};

/// Deterministic training: zero-initialized full-batch gradient descent for
/// logistic regression; closed-form smoothed counts for naive Bayes.
///
/// Logistic regression needs at least one example of each class and throws
/// ValidationError("degenerate training set") otherwise.
BinaryClassifier train(ClassifierKind kind, std::span<const LabeledExample> examples, const TrainingConfig& config);
BinaryClassifier train(ClassifierKind kind, const std::vector<std::pair<FeatureVector, Label>>& examples,
                       const TrainingConfig& config);

/// Reads JSON Lines {"doc_id": ..., "score": ...}. Scores must lie in [0,1]
/// and doc_ids must be unique.
BinaryClassifier load_external_scores(std::istream& in);
BinaryClassifier load_external_scores(const std::string& path);

double sigmoid(double z) noexcept;

/// Mean cross-entropy plus (lambda/2)||w||^2; the objective gradient descent minimizes.
double logistic_loss(const LogisticParameters& params, std::span<const LabeledExample> examples, double l2_lambda);
/// Gradient of logistic_loss; `grad_weights` is resized to the weight count.
void logistic_gradient(const LogisticParameters& params, std::span<const LabeledExample> examples, double l2_lambda,
                       std::vector<double>& grad_weights, double& grad_bias);

}  // namespace rarecorpus
