#include "rarecorpus/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "rarecorpus/error.hpp"

namespace rarecorpus {

using nlohmann::json;

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::cal:
      return "CAL";
    case Strategy::sal:
      return "SAL";
    case Strategy::spl:
      return "SPL";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "CAL" || name == "cal") return Strategy::cal;
  if (name == "SAL" || name == "sal") return Strategy::sal;
  if (name == "SPL" || name == "spl") return Strategy::spl;
  throw ValidationError("unknown strategy: " + std::string(name));
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::tfidf:
      return "tfidf";
    case FeatureMode::embedding:
      return "embedding";
    case FeatureMode::external_scores:
      return "external_scores";
  }
  return "unknown";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "tfidf") return FeatureMode::tfidf;
  if (name == "embedding") return FeatureMode::embedding;
  if (name == "external_scores" || name == "external") return FeatureMode::external_scores;
  throw ValidationError("unknown feature mode: " + std::string(name));
}

double entropy(double p) {
  const auto term = [](double q) { return q <= 0.0 ? 0.0 : -q * std::log2(q); };
  return term(p) + term(1.0 - p);
}

// ---------------------------------------------------------------------------
// ALConfig

void ALConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (budget < 1) throw ValidationError("budget must be at least 1");
  if (seed_doc_ids.size() > budget) throw ValidationError("budget is smaller than the seed set");
  std::unordered_set<std::string_view> unique(seed_doc_ids.begin(), seed_doc_ids.end());
  if (unique.size() != seed_doc_ids.size()) throw ValidationError("seed doc_ids must be unique");
  training.validate();
}

json ALConfig::to_json() const {
  return {{"strategy", to_string(strategy)},
          {"batch_size", batch_size},
          {"budget", budget},
          {"seed_doc_ids", seed_doc_ids},
          {"rng_seed", rng_seed},
          {"feature_mode", to_string(feature_mode)},
          {"training", training.to_json()}};
}

ALConfig ALConfig::from_json(const json& j) {
  ALConfig config;
  config.strategy = parse_strategy(j.value("strategy", std::string("CAL")));
  config.batch_size = j.value("batch_size", config.batch_size);
  config.budget = j.at("budget").get<std::size_t>();
  config.seed_doc_ids = j.value("seed_doc_ids", std::vector<std::string>{});
  config.rng_seed = j.value("rng_seed", config.rng_seed);
  config.feature_mode = parse_feature_mode(j.value("feature_mode", std::string("tfidf")));
  if (j.contains("training")) config.training = TrainingConfig::from_json(j.at("training"));
  return config;
}

// ---------------------------------------------------------------------------
// Learners

std::vector<double> Learner::score_all(const BinaryClassifier& model) const {
  std::vector<double> scores(size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = score(model, i);
  return scores;
}

FeatureLearner::FeatureLearner(std::vector<FeatureVector> features, TrainingConfig training)
    : features_(std::move(features)), training_(training) {
  training_.validate();
}

std::shared_ptr<const BinaryClassifier> FeatureLearner::fit(std::span<const std::size_t> doc_indices,
                                                            std::span<const Label> labels) const {
  std::vector<LabeledExample> examples;
  examples.reserve(doc_indices.size());
  for (std::size_t i = 0; i < doc_indices.size(); ++i) examples.push_back({&features_.at(doc_indices[i]), labels[i]});
  return std::make_shared<const BinaryClassifier>(train(ClassifierKind::logistic_regression, examples, training_));
}

double FeatureLearner::score(const BinaryClassifier& model, std::size_t doc_index) const {
  return model.predict(features_[doc_index]);
}

ExternalScoreLearner::ExternalScoreLearner(const DocumentCollection& collection,
                                           std::shared_ptr<const BinaryClassifier> scores)
    : model_(std::move(scores)) {
  scores_.reserve(collection.size());
  for (const auto& doc : collection) {
    if (!model_->has_score(doc.doc_id)) throw ValidationError("no score for document " + doc.doc_id);
    scores_.push_back(model_->predict(doc.doc_id));
  }
}

std::unique_ptr<Learner> make_learner(const DocumentCollection& collection, FeatureMode mode,
                                      const TrainingConfig& training, const FeatureSources& sources) {
  if (collection.empty()) throw ValidationError("empty collection");
  switch (mode) {
    case FeatureMode::tfidf: {
      const Vocabulary vocab = fit_vocabulary(collection, sources.vocabulary);
      std::vector<FeatureVector> features;
      features.reserve(collection.size());
      for (const auto& doc : collection) features.push_back(vectorize_tfidf(doc.text, vocab));
      return std::make_unique<FeatureLearner>(std::move(features), training);
    }
    case FeatureMode::embedding: {
      if (sources.embeddings == nullptr) throw ValidationError("embedding mode needs an embedding file");
      std::vector<FeatureVector> features;
      features.reserve(collection.size());
      for (const auto& doc : collection) {
        const auto it = sources.embeddings->find(doc.doc_id);
        if (it == sources.embeddings->end()) throw ValidationError("no embedding for document " + doc.doc_id);
        features.push_back(it->second);
      }
      return std::make_unique<FeatureLearner>(std::move(features), training);
    }
    case FeatureMode::external_scores:
      if (!sources.external_scores) throw ValidationError("external_scores mode needs a score file");
      return std::make_unique<ExternalScoreLearner>(collection, sources.external_scores);
  }
  throw ValidationError("unknown feature mode");
}

// ---------------------------------------------------------------------------
// Selection

std::vector<std::size_t> select_from_scores(std::span<const double> scores, const DocumentCollection& collection,
                                            const std::vector<bool>& judged, Strategy strategy, std::size_t u,
                                            std::mt19937_64& rng) {
  std::vector<std::size_t> pool;
  pool.reserve(collection.size());
  for (std::size_t i = 0; i < collection.size(); ++i) {
    if (!judged[i]) pool.push_back(i);
  }
  const std::size_t k = std::min(u, pool.size());
  if (k == 0) return {};

  if (strategy == Strategy::spl) {
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
  }

  // Lower key is better: CAL wants max p, SAL wants min |p - 0.5|.
  const auto key = [&](std::size_t i) { return strategy == Strategy::cal ? -scores[i] : std::abs(scores[i] - 0.5); };
  const auto better = [&](std::size_t a, std::size_t b) {
    const double ka = key(a);
    const double kb = key(b);
    if (ka != kb) return ka < kb;
    return collection[a].doc_id < collection[b].doc_id;
  };
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(), better);
  pool.resize(k);
  return pool;
}

std::vector<std::string> select_next(const ALState& state, const DocumentCollection& collection, const Learner& learner,
                                     Strategy strategy, std::size_t u, std::mt19937_64& rng) {
  if (!state.model) throw ValidationError("no model trained yet");
  std::vector<bool> judged(collection.size(), false);
  for (const auto& j : state.judged) {
    if (auto index = collection.index_of(j.doc_id)) judged[*index] = true;
  }
  std::vector<double> scores;
  if (strategy != Strategy::spl) scores = learner.score_all(*state.model);
  std::vector<std::string> out;
  for (auto index : select_from_scores(scores, collection, judged, strategy, u, rng)) {
    out.push_back(collection[index].doc_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ActiveLearningLoop

ActiveLearningLoop::ActiveLearningLoop(const DocumentCollection& collection, const Learner& learner, ALConfig config)
    : collection_(&collection), learner_(&learner), config_(std::move(config)) {
  config_.validate();
  if (learner.size() != collection.size()) throw ValidationError("learner does not cover the collection");
  for (const auto& id : config_.seed_doc_ids) {
    if (!collection.index_of(id)) throw ValidationError("seed document not in collection: " + id);
  }
  state_.budget = config_.budget;
  state_.remaining_budget = config_.budget;
  state_.rng.seed(config_.rng_seed);
  judged_mask_.assign(collection.size(), false);
}

void ActiveLearningLoop::add_judgment(const std::string& doc_id, Label label) {
  const auto index = collection_->index_of(doc_id);
  if (!index) throw ValidationError("unknown document " + doc_id);
  if (judged_mask_[*index]) throw ConflictError("document already judged: " + doc_id);
  if (state_.remaining_budget == 0) throw ConflictError("budget exhausted");
  judged_mask_[*index] = true;
  ++judged_count_;
  --state_.remaining_budget;
  state_.judged.push_back({doc_id, label, state_.iteration});
}

const ALState& ActiveLearningLoop::state() const {
  if (model_stale_) retrain();
  return state_;
}

void ActiveLearningLoop::retrain() const {
  std::vector<std::size_t> indices;
  std::vector<Label> labels;
  indices.reserve(state_.judged.size());
  labels.reserve(state_.judged.size());
  for (const auto& j : state_.judged) {
    indices.push_back(*collection_->index_of(j.doc_id));
    labels.push_back(j.label);
  }
  state_.model = learner_->fit(indices, labels);
  model_stale_ = false;
}

void ActiveLearningLoop::start(std::span<const std::pair<std::string, Label>> seed_labels) {
  if (started_) throw ConflictError("loop already started");
  if (seed_labels.size() != config_.seed_doc_ids.size()) throw ValidationError("seed label count does not match the seed set");
  bool positive = false;
  bool negative = false;
  for (const auto& [doc_id, label] : seed_labels) {
    if (std::find(config_.seed_doc_ids.begin(), config_.seed_doc_ids.end(), doc_id) == config_.seed_doc_ids.end()) {
      throw ValidationError("label for a document outside the seed set: " + doc_id);
    }
    (is_hateful(label) ? positive : negative) = true;
  }
  if (!positive || !negative) throw ValidationError("seeds need at least one hateful and one non-hateful label");
  for (const auto& [doc_id, label] : seed_labels) add_judgment(doc_id, label);
  retrain();
  started_ = true;
}

void ActiveLearningLoop::start(const Oracle& oracle) {
  std::vector<std::pair<std::string, Label>> labels;
  for (const auto& id : config_.seed_doc_ids) labels.emplace_back(id, oracle(id));
  start(labels);
}

bool ActiveLearningLoop::exhausted() const {
  return state_.remaining_budget < config_.batch_size || judged_count_ == collection_->size();
}

const std::vector<std::string>& ActiveLearningLoop::propose() {
  if (!started_) throw ConflictError("loop not started");
  if (!state_.outstanding.empty() || exhausted()) return state_.outstanding;

  std::vector<double> scores;
  if (config_.strategy != Strategy::spl) scores = learner_->score_all(*state_.model);
  const auto picked = select_from_scores(scores, *collection_, judged_mask_, config_.strategy, config_.batch_size, state_.rng);
  SelectionRecord record{state_.iteration + 1, {}, {}};
  for (auto index : picked) {
    record.doc_ids.push_back((*collection_)[index].doc_id);
    record.scores.push_back(scores.empty() ? learner_->score(*state_.model, index) : scores[index]);
  }
  state_.outstanding = record.doc_ids;
  state_.history.push_back(std::move(record));
  return state_.outstanding;
}

void ActiveLearningLoop::record(std::span<const std::pair<std::string, Label>> labels) {
  if (state_.outstanding.empty()) throw ConflictError("no outstanding batch");
  if (labels.size() != state_.outstanding.size()) throw ValidationError("labels must cover exactly the outstanding batch");
  std::unordered_set<std::string_view> expected(state_.outstanding.begin(), state_.outstanding.end());
  for (const auto& [doc_id, label] : labels) {
    if (expected.erase(doc_id) == 0) throw ConflictError("document not outstanding: " + doc_id);
  }
  ++state_.iteration;
  for (const auto& [doc_id, label] : labels) add_judgment(doc_id, label);
  state_.outstanding.clear();
  if (config_.strategy == Strategy::spl) {
    model_stale_ = true;
  } else {
    retrain();
  }
}

const ALState& ActiveLearningLoop::run(const Oracle& oracle, const std::function<void(const ALState&)>& on_iteration) {
  state_.abort_reason.reset();
  try {
    if (!started_) start(oracle);
  } catch (const OracleError& e) {
    state_.abort_reason = e.what();
    return state();
  }
  while (!exhausted()) {
    const auto batch = propose();
    std::vector<std::pair<std::string, Label>> labels;
    labels.reserve(batch.size());
    try {
      for (const auto& id : batch) labels.emplace_back(id, oracle(id));
    } catch (const OracleError& e) {
      state_.abort_reason = e.what();
      return state();
    }
    record(labels);
    if (on_iteration) on_iteration(state());
  }
  return state();
}

json ActiveLearningLoop::checkpoint() const {
  json judged = json::array();
  for (const auto& j : state_.judged) judged.push_back({{"doc_id", j.doc_id}, {"label", to_int(j.label)}, {"iteration", j.iteration}});
  json history = json::array();
  for (const auto& h : state_.history) history.push_back({{"iteration", h.iteration}, {"doc_ids", h.doc_ids}, {"scores", h.scores}});
  std::ostringstream rng;
  rng << state_.rng;
  return {{"config", config_.to_json()},
          {"started", started_},
          {"judged", judged},
          {"remaining_budget", state_.remaining_budget},
          {"iteration", state_.iteration},
          {"outstanding", state_.outstanding},
          {"history", history},
          {"rng_state", rng.str()},
          {"abort_reason", state_.abort_reason ? json(*state_.abort_reason) : json(nullptr)}};
}

ActiveLearningLoop ActiveLearningLoop::restore(const DocumentCollection& collection, const Learner& learner,
                                               const json& checkpoint) {
  ActiveLearningLoop loop(collection, learner, ALConfig::from_json(checkpoint.at("config")));
  for (const auto& j : checkpoint.at("judged")) {
    loop.state_.iteration = j.at("iteration").get<std::size_t>();
    loop.add_judgment(j.at("doc_id").get<std::string>(), to_label(j.at("label").get<int>() == 1));
  }
  loop.state_.iteration = checkpoint.at("iteration").get<std::size_t>();
  if (loop.state_.remaining_budget != checkpoint.at("remaining_budget").get<std::size_t>()) {
    throw ValidationError("checkpoint budget accounting is inconsistent");
  }
  loop.state_.outstanding = checkpoint.at("outstanding").get<std::vector<std::string>>();
  for (const auto& h : checkpoint.at("history")) {
    loop.state_.history.push_back({h.at("iteration").get<std::size_t>(), h.at("doc_ids").get<std::vector<std::string>>(),
                                   h.at("scores").get<std::vector<double>>()});
  }
  std::istringstream rng(checkpoint.at("rng_state").get<std::string>());
  rng >> loop.state_.rng;
  if (!checkpoint.at("abort_reason").is_null()) loop.state_.abort_reason = checkpoint.at("abort_reason").get<std::string>();
  loop.started_ = checkpoint.at("started").get<bool>();
  if (loop.started_) loop.retrain();
  return loop;
}

ALState run_loop(const DocumentCollection& collection, const Learner& learner, const Oracle& oracle,
                 const ALConfig& config) {
  ActiveLearningLoop loop(collection, learner, config);
  return loop.run(oracle);
}

std::vector<std::string> choose_seeds(const DocumentCollection& collection, std::size_t positives,
                                      std::size_t negatives, std::uint64_t rng_seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < collection.size(); ++i) {
    const auto& label = collection[i].gold_label;
    if (!label) continue;
    (is_hateful(*label) ? pos : neg).push_back(i);
  }
  if (pos.size() < positives || neg.size() < negatives) {
    throw ValidationError("not enough labeled documents to draw the requested seeds");
  }
  std::seed_seq seq{rng_seed, std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);
  const auto draw = [&](std::vector<std::size_t>& from, std::size_t k, std::vector<std::string>& out) {
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, from.size() - 1);
      std::swap(from[i], from[pick(rng)]);
      out.push_back(collection[from[i]].doc_id);
    }
  };
  std::vector<std::string> seeds;
  draw(pos, positives, seeds);
  draw(neg, negatives, seeds);
  return seeds;
}

}  // namespace rarecorpus
