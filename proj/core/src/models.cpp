#include "rarecorpus/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rarecorpus/error.hpp"

namespace rarecorpus {

using nlohmann::json;

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::logistic_regression:
      return "logistic_regression";
    case ClassifierKind::naive_bayes:
      return "naive_bayes";
    case ClassifierKind::external_scores:
      return "external_scores";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "logistic_regression" || name == "lr") return ClassifierKind::logistic_regression;
  if (name == "naive_bayes" || name == "nb") return ClassifierKind::naive_bayes;
  if (name == "external_scores" || name == "external") return ClassifierKind::external_scores;
  throw ValidationError("unknown classifier kind: " + std::string(name));
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ValidationError("l2_lambda must be nonnegative");
  if (!(laplace_alpha > 0.0) || !std::isfinite(laplace_alpha)) throw ValidationError("laplace_alpha must be positive");
}

json TrainingConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"l2_lambda", l2_lambda}, {"laplace_alpha", laplace_alpha}};
}

TrainingConfig TrainingConfig::from_json(const json& j) {
  TrainingConfig config;
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.epochs = j.value("epochs", config.epochs);
  config.l2_lambda = j.value("l2_lambda", config.l2_lambda);
  config.laplace_alpha = j.value("laplace_alpha", config.laplace_alpha);
  config.validate();
  return config;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// BinaryClassifier

BinaryClassifier::BinaryClassifier(Parameters parameters, std::size_t feature_dimension)
    : parameters_(std::move(parameters)), dimension_(feature_dimension) {
  if (const auto* lr = std::get_if<LogisticParameters>(&parameters_)) {
    dimension_ = lr->weights.size();
    if (!std::isfinite(lr->bias) || !std::all_of(lr->weights.begin(), lr->weights.end(), [](double w) { return std::isfinite(w); })) {
      throw ValidationError("logistic regression parameters must be finite");
    }
  } else if (const auto* nb = std::get_if<NaiveBayesParameters>(&parameters_)) {
    dimension_ = nb->log_likelihood_hateful.size();
    if (nb->log_likelihood_non_hateful.size() != dimension_) throw ValidationError("naive Bayes parameter size mismatch");
  } else {
    for (const auto& [doc_id, score] : std::get<ExternalScores>(parameters_).scores) {
      if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("score outside [0,1] for doc_id " + doc_id);
    }
  }
}

ClassifierKind BinaryClassifier::kind() const noexcept {
  switch (parameters_.index()) {
    case 0:
      return ClassifierKind::logistic_regression;
    case 1:
      return ClassifierKind::naive_bayes;
    default:
      return ClassifierKind::external_scores;
  }
}

double BinaryClassifier::predict(const FeatureVector& x) const {
  if (std::holds_alternative<ExternalScores>(parameters_)) {
    throw ValidationError("external score adapter predicts by doc_id, not by features");
  }
  if (x.dimension() != dimension_) {
    throw ValidationError("feature dimension " + std::to_string(x.dimension()) + " does not match model dimension " +
                          std::to_string(dimension_));
  }
  if (const auto* lr = std::get_if<LogisticParameters>(&parameters_)) return sigmoid(x.dot(lr->weights) + lr->bias);

  const auto& nb = std::get<NaiveBayesParameters>(parameters_);
  const double hateful = nb.log_prior_hateful + x.dot(nb.log_likelihood_hateful);
  const double non_hateful = nb.log_prior_non_hateful + x.dot(nb.log_likelihood_non_hateful);
  return sigmoid(hateful - non_hateful);
}

double BinaryClassifier::predict(std::string_view doc_id) const {
  const auto* external = std::get_if<ExternalScores>(&parameters_);
  if (external == nullptr) throw ValidationError("feature-based model cannot score by doc_id");
  const auto it = external->scores.find(std::string(doc_id));
  if (it == external->scores.end()) throw NotFoundError("no score for document " + std::string(doc_id));
  return it->second;
}

bool BinaryClassifier::has_score(std::string_view doc_id) const {
  const auto* external = std::get_if<ExternalScores>(&parameters_);
  return external != nullptr && external->scores.contains(std::string(doc_id));
}

json BinaryClassifier::to_json() const {
  json out;
  out["kind"] = to_string(kind());
  if (const auto* lr = std::get_if<LogisticParameters>(&parameters_)) {
    out["weights"] = lr->weights;
    out["bias"] = lr->bias;
  } else if (const auto* nb = std::get_if<NaiveBayesParameters>(&parameters_)) {
    out["log_likelihood_hateful"] = nb->log_likelihood_hateful;
    out["log_likelihood_non_hateful"] = nb->log_likelihood_non_hateful;
    out["log_prior_hateful"] = nb->log_prior_hateful;
    out["log_prior_non_hateful"] = nb->log_prior_non_hateful;
  } else {
    const auto& scores = std::get<ExternalScores>(parameters_).scores;
    std::vector<std::pair<std::string, double>> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    json rows = json::object();
    for (const auto& [doc_id, score] : sorted) rows[doc_id] = score;
    out["scores"] = rows;
  }
  return out;
}

BinaryClassifier BinaryClassifier::from_json(const json& j) {
  switch (parse_classifier_kind(j.at("kind").get<std::string>())) {
    case ClassifierKind::logistic_regression:
      return BinaryClassifier(LogisticParameters{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()});
    case ClassifierKind::naive_bayes:
      return BinaryClassifier(NaiveBayesParameters{j.at("log_likelihood_hateful").get<std::vector<double>>(),
                                                   j.at("log_likelihood_non_hateful").get<std::vector<double>>(),
                                                   j.at("log_prior_hateful").get<double>(),
                                                   j.at("log_prior_non_hateful").get<double>()});
    case ClassifierKind::external_scores: {
      ExternalScores external;
      for (const auto& [doc_id, score] : j.at("scores").items()) external.scores.emplace(doc_id, score.get<double>());
      return BinaryClassifier(std::move(external));
    }
  }
  throw ValidationError("unreachable classifier kind");
}

// ---------------------------------------------------------------------------
// Logistic regression

double logistic_loss(const LogisticParameters& params, std::span<const LabeledExample> examples, double l2_lambda) {
  double loss = 0.0;
  for (const auto& ex : examples) {
    const double z = ex.features->dot(params.weights) + params.bias;
    // log(1 + e^z) - y z, computed stably
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - (is_hateful(ex.label) ? z : 0.0);
  }
  loss /= static_cast<double>(examples.size());
  double norm = 0.0;
  for (double w : params.weights) norm += w * w;
  return loss + 0.5 * l2_lambda * norm;
}

void logistic_gradient(const LogisticParameters& params, std::span<const LabeledExample> examples, double l2_lambda,
                       std::vector<double>& grad_weights, double& grad_bias) {
  grad_weights.assign(params.weights.size(), 0.0);
  grad_bias = 0.0;
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    const double residual = sigmoid(ex.features->dot(params.weights) + params.bias) - (is_hateful(ex.label) ? 1.0 : 0.0);
    ex.features->for_each([&](std::size_t i, double x) { grad_weights[i] += residual * x * inv_n; });
    grad_bias += residual * inv_n;
  }
  for (std::size_t i = 0; i < grad_weights.size(); ++i) grad_weights[i] += l2_lambda * params.weights[i];
}

namespace {

// Rows of a design matrix restricted to the columns the training set touches.
// Untouched columns receive zero gradient from zero init, so they stay exactly
// zero and can be skipped.
struct CompactDesign {
  std::vector<std::size_t> columns;  // compact -> original
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> col;
  std::vector<double> val;
  std::vector<double> target;
};

CompactDesign compact_design(std::span<const LabeledExample> examples, std::size_t dimension) {
  CompactDesign design;
  bool any_dense = false;
  for (const auto& ex : examples) any_dense = any_dense || ex.features->is_dense();
  if (any_dense) {
    design.columns.resize(dimension);
    std::iota(design.columns.begin(), design.columns.end(), std::size_t{0});
  } else {
    for (const auto& ex : examples) {
      for (auto i : ex.features->indices()) design.columns.push_back(i);
    }
    std::sort(design.columns.begin(), design.columns.end());
    design.columns.erase(std::unique(design.columns.begin(), design.columns.end()), design.columns.end());
  }
  design.row_start.reserve(examples.size() + 1);
  design.row_start.push_back(0);
  for (const auto& ex : examples) {
    ex.features->for_each([&](std::size_t i, double x) {
      if (x == 0.0) return;
      const auto pos = std::lower_bound(design.columns.begin(), design.columns.end(), i) - design.columns.begin();
      design.col.push_back(static_cast<std::uint32_t>(pos));
      design.val.push_back(x);
    });
    design.row_start.push_back(design.col.size());
    design.target.push_back(is_hateful(ex.label) ? 1.0 : 0.0);
  }
  return design;
}

BinaryClassifier train_logistic(std::span<const LabeledExample> examples, const TrainingConfig& config) {
  const bool has_positive = std::any_of(examples.begin(), examples.end(), [](const auto& e) { return is_hateful(e.label); });
  const bool has_negative = std::any_of(examples.begin(), examples.end(), [](const auto& e) { return !is_hateful(e.label); });
  if (!has_positive || !has_negative) throw ValidationError("degenerate training set");

  const std::size_t dimension = examples.front().features->dimension();
  for (const auto& ex : examples) {
    if (ex.features->dimension() != dimension) throw ValidationError("training examples have mixed dimensions");
  }

  const CompactDesign design = compact_design(examples, dimension);
  const std::size_t n = examples.size();
  const std::size_t m = design.columns.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> w(m, 0.0);
  std::vector<double> grad(m);
  double bias = 0.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t begin = design.row_start[r];
      const std::size_t end = design.row_start[r + 1];
      // Four partial sums break the add dependency chain.
      double z0 = 0.0, z1 = 0.0, z2 = 0.0, z3 = 0.0;
      std::size_t k = begin;
      for (; k + 4 <= end; k += 4) {
        z0 += w[design.col[k]] * design.val[k];
        z1 += w[design.col[k + 1]] * design.val[k + 1];
        z2 += w[design.col[k + 2]] * design.val[k + 2];
        z3 += w[design.col[k + 3]] * design.val[k + 3];
      }
      for (; k < end; ++k) z0 += w[design.col[k]] * design.val[k];
      const double z = bias + ((z0 + z1) + (z2 + z3));
      const double residual = (sigmoid(z) - design.target[r]) * inv_n;
      for (k = begin; k < end; ++k) grad[design.col[k]] += residual * design.val[k];
      grad_bias += residual;
    }
    for (std::size_t i = 0; i < m; ++i) w[i] -= config.learning_rate * (grad[i] + config.l2_lambda * w[i]);
    bias -= config.learning_rate * grad_bias;
  }

  LogisticParameters params;
  params.weights.assign(dimension, 0.0);
  for (std::size_t i = 0; i < m; ++i) params.weights[design.columns[i]] = w[i];
  params.bias = bias;
  return BinaryClassifier(std::move(params));
}

BinaryClassifier train_naive_bayes(std::span<const LabeledExample> examples, const TrainingConfig& config) {
  const std::size_t dimension = examples.front().features->dimension();
  std::vector<double> count_hateful(dimension, 0.0);
  std::vector<double> count_non(dimension, 0.0);
  double total_hateful = 0.0;
  double total_non = 0.0;
  double docs_hateful = 0.0;
  double docs_non = 0.0;
  for (const auto& ex : examples) {
    if (ex.features->dimension() != dimension) throw ValidationError("training examples have mixed dimensions");
    auto& counts = is_hateful(ex.label) ? count_hateful : count_non;
    double& total = is_hateful(ex.label) ? total_hateful : total_non;
    ex.features->for_each([&](std::size_t i, double x) {
      if (x < 0.0) throw ValidationError("naive Bayes requires nonnegative counts");
      counts[i] += x;
      total += x;
    });
    (is_hateful(ex.label) ? docs_hateful : docs_non) += 1.0;
  }
  const double alpha = config.laplace_alpha;
  const double v = static_cast<double>(dimension);
  NaiveBayesParameters params;
  params.log_likelihood_hateful.resize(dimension);
  params.log_likelihood_non_hateful.resize(dimension);
  for (std::size_t i = 0; i < dimension; ++i) {
    params.log_likelihood_hateful[i] = std::log((count_hateful[i] + alpha) / (total_hateful + alpha * v));
    params.log_likelihood_non_hateful[i] = std::log((count_non[i] + alpha) / (total_non + alpha * v));
  }
  // Priors are smoothed like the likelihoods so a single-class training set
  // still yields finite parameters.
  const double docs = docs_hateful + docs_non;
  params.log_prior_hateful = std::log((docs_hateful + alpha) / (docs + 2.0 * alpha));
  params.log_prior_non_hateful = std::log((docs_non + alpha) / (docs + 2.0 * alpha));
  return BinaryClassifier(std::move(params));
}

}  // namespace

BinaryClassifier train(ClassifierKind kind, std::span<const LabeledExample> examples, const TrainingConfig& config) {
  config.validate();
  if (examples.empty()) throw ValidationError("no training examples");
  switch (kind) {
    case ClassifierKind::logistic_regression:
      return train_logistic(examples, config);
    case ClassifierKind::naive_bayes:
      return train_naive_bayes(examples, config);
    case ClassifierKind::external_scores:
      break;
  }
  throw ValidationError("external score adapters are loaded, not trained");
}

BinaryClassifier train(ClassifierKind kind, const std::vector<std::pair<FeatureVector, Label>>& examples,
                       const TrainingConfig& config) {
  std::vector<LabeledExample> borrowed;
  borrowed.reserve(examples.size());
  for (const auto& [x, y] : examples) borrowed.push_back({&x, y});
  return train(kind, borrowed, config);
}

// ---------------------------------------------------------------------------
// External scores

BinaryClassifier load_external_scores(std::istream& in) {
  ExternalScores external;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("score line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string doc_id = row.at("doc_id").is_string() ? row.at("doc_id").get<std::string>() : row.at("doc_id").dump();
    if (!row.at("score").is_number()) throw ValidationError("score for doc_id " + doc_id + " is not a number");
    const double score = row.at("score").get<double>();
    if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("score outside [0,1] for doc_id " + doc_id);
    if (!external.scores.emplace(doc_id, score).second) throw ValidationError("duplicate score for doc_id " + doc_id);
  }
  return BinaryClassifier(std::move(external));
}

BinaryClassifier load_external_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open score file " + path);
  return load_external_scores(in);
}

}  // namespace rarecorpus
