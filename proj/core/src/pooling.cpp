#include "rarecorpus/pooling.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "rarecorpus/error.hpp"

namespace rarecorpus {

using nlohmann::json;

Featurizer tfidf_featurizer(std::shared_ptr<const Vocabulary> vocab) {
  return [vocab = std::move(vocab)](const Document& doc) { return vectorize_tfidf(doc.text, *vocab); };
}

Featurizer count_featurizer(std::shared_ptr<const Vocabulary> vocab) {
  return [vocab = std::move(vocab)](const Document& doc) { return vectorize_counts(doc.text, *vocab); };
}

PoolModel make_pool_model(std::string name, std::shared_ptr<const BinaryClassifier> model, Featurizer featurizer) {
  return {std::move(name), [model = std::move(model), featurizer = std::move(featurizer)](
                               const Document& doc) -> std::optional<double> { return model->predict(featurizer(doc)); }};
}

PoolModel make_external_pool_model(std::string name, std::shared_ptr<const BinaryClassifier> scores) {
  if (scores->kind() != ClassifierKind::external_scores) throw ValidationError("expected an external score adapter");
  return {std::move(name), [scores = std::move(scores)](const Document& doc) -> std::optional<double> {
            if (!scores->has_score(doc.doc_id)) return std::nullopt;
            return scores->predict(doc.doc_id);
          }};
}

std::vector<PoolModel> train_pool_models(const std::vector<PriorDataset>& datasets,
                                         const std::vector<ClassifierKind>& kinds,
                                         const VocabularyOptions& vocab_options, const TrainingConfig& training) {
  std::vector<PoolModel> models;
  for (const auto& dataset : datasets) {
    if (!dataset.documents.fully_labeled()) throw ValidationError("prior dataset " + dataset.name + " has unlabeled documents");
    auto vocab = std::make_shared<const Vocabulary>(fit_vocabulary(dataset.documents, vocab_options));
    for (const auto kind : kinds) {
      Featurizer featurizer;
      if (kind == ClassifierKind::logistic_regression) {
        featurizer = tfidf_featurizer(vocab);
      } else if (kind == ClassifierKind::naive_bayes) {
        featurizer = count_featurizer(vocab);
      } else {
        throw ValidationError("only logistic_regression and naive_bayes can be trained for pooling");
      }
      std::vector<std::pair<FeatureVector, Label>> examples;
      examples.reserve(dataset.documents.size());
      for (const auto& doc : dataset.documents) examples.emplace_back(featurizer(doc), *doc.gold_label);
      auto model = std::make_shared<const BinaryClassifier>(train(kind, examples, training));
      models.push_back(make_pool_model(dataset.name + "/" + std::string(to_string(kind)), std::move(model), featurizer));
    }
  }
  return models;
}

void PoolConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0,1]");
  if (budget < 1) throw ValidationError("budget must be at least 1");
}

json PoolConfig::to_json() const { return {{"threshold", threshold}, {"budget", budget}, {"rng_seed", rng_seed}}; }

PoolResult build_pool(const DocumentCollection& collection, const std::vector<PoolModel>& models,
                      const PoolConfig& config) {
  config.validate();
  if (collection.empty()) throw ValidationError("empty collection");
  if (models.empty()) throw ValidationError("pool needs at least one model");

  PoolResult result;
  const std::size_t n_models = models.size();
  result.per_model_hit_counts.assign(n_models, 0);
  result.per_model_unscored.assign(n_models, 0);
  result.overlap.assign(n_models, std::vector<std::size_t>(n_models, 0));
  for (const auto& model : models) result.model_names.push_back(model.name);

  std::vector<std::size_t> candidates;
  std::vector<std::size_t> hit_models;
  for (std::size_t d = 0; d < collection.size(); ++d) {
    hit_models.clear();
    for (std::size_t m = 0; m < n_models; ++m) {
      const auto score = models[m].score(collection[d]);
      if (!score) {
        ++result.per_model_unscored[m];
        continue;
      }
      if (*score >= config.threshold) hit_models.push_back(m);
    }
    if (hit_models.empty()) continue;
    candidates.push_back(d);
    for (auto a : hit_models) {
      ++result.per_model_hit_counts[a];
      for (auto b : hit_models) ++result.overlap[a][b];
    }
  }
  result.candidate_count = candidates.size();
  if (candidates.empty()) {
    result.diagnostic = "no document scored at or above the threshold under any model";
    return result;
  }

  // Partial Fisher-Yates: the first k slots become a uniform sample without replacement.
  std::mt19937_64 rng(config.rng_seed);
  const std::size_t k = std::min(config.budget, candidates.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  result.selected.reserve(k);
  for (std::size_t i = 0; i < k; ++i) result.selected.push_back(collection[candidates[i]].doc_id);
  if (k < config.budget) {
    result.diagnostic = "candidate set smaller than budget; selected all " + std::to_string(k) + " candidates";
  }
  return result;
}

json PoolSummary::to_json() const {
  return {{"selected_count", selected_count},
          {"selected_with_lexicon", selected_with_lexicon},
          {"lexicon_fraction", lexicon_fraction},
          {"candidate_count", candidate_count},
          {"model_names", model_names},
          {"per_model_hit_counts", per_model_hit_counts},
          {"overlap", overlap}};
}

PoolSummary stratify_report(const PoolResult& result, const DocumentCollection& collection, const HateLexicon& lexicon) {
  PoolSummary summary;
  summary.selected_count = result.selected.size();
  for (const auto& doc_id : result.selected) {
    if (contains_hate_word(collection.by_id(doc_id), lexicon)) ++summary.selected_with_lexicon;
  }
  summary.lexicon_fraction = summary.selected_count == 0
                                 ? 0.0
                                 : static_cast<double>(summary.selected_with_lexicon) / static_cast<double>(summary.selected_count);
  summary.candidate_count = result.candidate_count;
  summary.model_names = result.model_names;
  summary.per_model_hit_counts = result.per_model_hit_counts;
  summary.overlap = result.overlap;
  return summary;
}

}  // namespace rarecorpus
