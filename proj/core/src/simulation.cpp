#include "rarecorpus/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <thread>
#include <unordered_set>

#include "rarecorpus/error.hpp"
#include "rarecorpus/metrics.hpp"

namespace rarecorpus {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Synthetic corpus

void SyntheticSpec::validate() const {
  if (n_docs < 2) throw ValidationError("synthetic corpus needs at least 2 documents");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw ValidationError("positive_rate must lie in (0, 1)");
  const auto positives = static_cast<std::size_t>(std::llround(positive_rate * static_cast<double>(n_docs)));
  if (positives == 0 || positives == n_docs) throw ValidationError("positive_rate leaves one class empty");
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) throw ValidationError("signal_strength must lie in [0, 1]");
  if (!(negative_leak >= 0.0 && negative_leak <= 1.0)) throw ValidationError("negative_leak must lie in [0, 1]");
  if (indicative_terms == 0 || noise_terms == 0) throw ValidationError("term pools must be non-empty");
  if (min_length == 0 || min_length > max_length) throw ValidationError("invalid document length range");
  if (min_indicative > min_length) throw ValidationError("min_indicative exceeds the minimum document length");
}

json SyntheticSpec::to_json() const {
  return {{"n_docs", n_docs},
          {"positive_rate", positive_rate},
          {"signal_strength", signal_strength},
          {"negative_leak", negative_leak},
          {"min_indicative", min_indicative},
          {"indicative_terms", indicative_terms},
          {"noise_terms", noise_terms},
          {"min_length", min_length},
          {"max_length", max_length},
          {"rng_seed", rng_seed}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  s.n_docs = j.value("n_docs", s.n_docs);
  s.positive_rate = j.value("positive_rate", s.positive_rate);
  s.signal_strength = j.value("signal_strength", s.signal_strength);
  s.negative_leak = j.value("negative_leak", s.negative_leak);
  s.min_indicative = j.value("min_indicative", s.min_indicative);
  s.indicative_terms = j.value("indicative_terms", s.indicative_terms);
  s.noise_terms = j.value("noise_terms", s.noise_terms);
  s.min_length = j.value("min_length", s.min_length);
  s.max_length = j.value("max_length", s.max_length);
  s.rng_seed = j.value("rng_seed", s.rng_seed);
  return s;
}

namespace {

// Three consonant-vowel syllables per word keeps the stemmer from merging terms.
std::string synthetic_word(std::size_t index) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  constexpr std::size_t syllables = 14 * 5;
  std::string word;
  for (int s = 0; s < 3; ++s) {
    const std::size_t syl = index % syllables;
    index /= syllables;
    word.push_back(consonants[syl / vowels.size()]);
    word.push_back(vowels[syl % vowels.size()]);
  }
  return word;
}

}  // namespace

DocumentCollection make_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  const auto positives = static_cast<std::size_t>(std::llround(spec.positive_rate * static_cast<double>(spec.n_docs)));

  std::vector<bool> is_positive(spec.n_docs, false);
  std::fill(is_positive.begin(), is_positive.begin() + static_cast<std::ptrdiff_t>(positives), true);
  std::shuffle(is_positive.begin(), is_positive.end(), rng);

  std::vector<std::string> indicative;
  std::vector<std::string> noise;
  for (std::size_t i = 0; i < spec.indicative_terms; ++i) indicative.push_back(synthetic_word(i * 7919 + 1));
  for (std::size_t i = 0; i < spec.noise_terms; ++i) noise.push_back(synthetic_word((spec.indicative_terms + i) * 7919 + 1));

  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  std::uniform_int_distribution<std::size_t> pick_indicative(0, indicative.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_noise(0, noise.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::unordered_set<std::string> seen;
  std::vector<Document> docs;
  docs.reserve(spec.n_docs);
  const int width = static_cast<int>(std::to_string(spec.n_docs).size());
  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    const double p_signal = is_positive[d] ? spec.signal_strength : spec.signal_strength * spec.negative_leak;
    std::string text;
    do {
      text.clear();
      const std::size_t n = length(rng);
      std::vector<bool> forced(n, false);
      if (is_positive[d]) {
        for (std::size_t k = 0; k < spec.min_indicative; ++k) forced[k] = true;
        std::shuffle(forced.begin(), forced.end(), rng);
      }
      for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) text.push_back(' ');
        text += forced[t] || coin(rng) < p_signal ? indicative[pick_indicative(rng)] : noise[pick_noise(rng)];
      }
    } while (!seen.insert(text).second);
    char id[32];
    std::snprintf(id, sizeof id, "syn-%0*zu", width, d);
    Document doc;
    doc.doc_id = id;
    doc.text = std::move(text);
    doc.gold_label = to_label(is_positive[d]);
    docs.push_back(std::move(doc));
  }
  return DocumentCollection(std::move(docs), "synthetic " + spec.to_json().dump());
}

// ---------------------------------------------------------------------------
// SimulationSpec

void SimulationSpec::validate() const {
  if (strategies.empty()) throw ValidationError("no strategies to simulate");
  if (feature_modes.empty()) throw ValidationError("no feature modes to simulate");
  if (checkpoints.empty()) throw ValidationError("no checkpoints");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] > 0.0 && checkpoints[i] <= 1.0)) throw ValidationError("checkpoints must lie in (0, 1]");
    if (i > 0 && !(checkpoints[i] > checkpoints[i - 1])) throw ValidationError("checkpoints must be strictly increasing");
  }
  if (repetitions == 0) throw ValidationError("repetitions must be at least 1");
  if (seed_positives == 0 || seed_negatives == 0) throw ValidationError("seeds need both classes");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ValidationError("label_noise must lie in [0, 1]");
  if (al_template.batch_size == 0) throw ValidationError("batch size must be positive");
  al_template.training.validate();
}

json SimulationSpec::to_json() const {
  json s = json::array();
  for (auto x : strategies) s.push_back(to_string(x));
  json m = json::array();
  for (auto x : feature_modes) m.push_back(to_string(x));
  return {{"strategies", s},
          {"feature_modes", m},
          {"checkpoints", checkpoints},
          {"repetitions", repetitions},
          {"base_seed", base_seed},
          {"seed_positives", seed_positives},
          {"seed_negatives", seed_negatives},
          {"label_noise", label_noise},
          {"batch_size", al_template.batch_size},
          {"training", al_template.training.to_json()}};
}

SimulationSpec SimulationSpec::from_json(const json& j) {
  SimulationSpec s;
  if (j.contains("strategies")) {
    s.strategies.clear();
    for (const auto& x : j.at("strategies")) s.strategies.push_back(parse_strategy(x.get<std::string>()));
  }
  if (j.contains("feature_modes")) {
    s.feature_modes.clear();
    for (const auto& x : j.at("feature_modes")) s.feature_modes.push_back(parse_feature_mode(x.get<std::string>()));
  }
  s.checkpoints = j.value("checkpoints", s.checkpoints);
  s.repetitions = j.value("repetitions", s.repetitions);
  s.base_seed = j.value("base_seed", s.base_seed);
  s.seed_positives = j.value("seed_positives", s.seed_positives);
  s.seed_negatives = j.value("seed_negatives", s.seed_negatives);
  s.label_noise = j.value("label_noise", s.label_noise);
  s.al_template.batch_size = j.value("batch_size", s.al_template.batch_size);
  if (j.contains("training")) s.al_template.training = TrainingConfig::from_json(j.at("training"));
  return s;
}

// ---------------------------------------------------------------------------
// Results

double SimulationResult::mean_at(Strategy strategy, FeatureMode mode, double cost_fraction, bool hate_found) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : points) {
    if (p.strategy != strategy || p.feature_mode != mode || std::abs(p.cost_fraction - cost_fraction) > 1e-9) continue;
    sum += hate_found ? p.hate_found_fraction : p.f1_hybrid;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

double SimulationResult::mean_auc(Strategy strategy, FeatureMode mode, bool hate_found) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : curves) {
    if (c.strategy != strategy || c.feature_mode != mode) continue;
    sum += hate_found ? c.auc_hate_found : c.auc_f1_hybrid;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

namespace {

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

void SimulationResult::write_csv(std::ostream& out) const {
  out << "strategy,feature_mode,seed,cost_fraction,f1_hybrid,hate_found_fraction\n";
  for (const auto& p : points) {
    out << to_string(p.strategy) << ',' << to_string(p.feature_mode) << ',' << p.seed << ',' << format_real(p.cost_fraction)
        << ',' << format_real(p.f1_hybrid) << ',' << format_real(p.hate_found_fraction) << '\n';
  }
}

json SimulationResult::auc_summary() const {
  json per_curve = json::array();
  std::map<std::pair<std::string, std::string>, std::pair<Strategy, FeatureMode>> groups;
  for (const auto& c : curves) {
    per_curve.push_back({{"strategy", to_string(c.strategy)},
                         {"feature_mode", to_string(c.feature_mode)},
                         {"seed", c.seed},
                         {"auc_f1_hybrid", c.auc_f1_hybrid},
                         {"auc_hate_found", c.auc_hate_found}});
    groups.emplace(std::pair{std::string(to_string(c.feature_mode)), std::string(to_string(c.strategy))},
                   std::pair{c.strategy, c.feature_mode});
  }
  json means = json::array();
  for (const auto& [key, value] : groups) {
    means.push_back({{"strategy", key.second},
                     {"feature_mode", key.first},
                     {"mean_auc_f1_hybrid", mean_auc(value.first, value.second, false)},
                     {"mean_auc_hate_found", mean_auc(value.first, value.second, true)}});
  }
  return {{"curves", per_curve}, {"means", means}};
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct RunTask {
  Strategy strategy;
  FeatureMode mode;
  std::size_t learner;
  std::uint64_t seed;
};

struct RunOutput {
  std::vector<CurvePoint> points;
  CurveSummary summary;
};

RunOutput run_one(const DocumentCollection& collection, const Learner& learner, const SimulationSpec& spec,
                  const RunTask& task, const std::vector<Label>& gold) {
  const std::size_t n = collection.size();
  const auto total_positives = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), Label::hateful));

  ALConfig config = spec.al_template;
  config.strategy = task.strategy;
  config.feature_mode = task.mode;
  config.budget = n;
  config.rng_seed = task.seed;
  config.seed_doc_ids = choose_seeds(collection, spec.seed_positives, spec.seed_negatives, task.seed);

  std::mt19937_64 noise_rng(task.seed ^ 0x6e6f697365ULL);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const Oracle oracle = [&](const std::string& doc_id) {
    const Label truth = gold[*collection.index_of(doc_id)];
    if (spec.label_noise > 0.0 && coin(noise_rng) < spec.label_noise) return to_label(!is_hateful(truth));
    return truth;
  };

  ActiveLearningLoop loop(collection, learner, config);
  loop.start(oracle);

  RunOutput out;
  out.summary = {task.strategy, task.mode, task.seed, 0.0, 0.0};
  std::size_t positives_judged = 0;
  std::vector<std::optional<Label>> judged(n);
  std::size_t judged_seen = 0;

  const auto sync = [&]() {
    const auto& history = loop.state().judged;
    for (; judged_seen < history.size(); ++judged_seen) {
      const auto index = *collection.index_of(history[judged_seen].doc_id);
      judged[index] = history[judged_seen].label;
      positives_judged += is_hateful(gold[index]) ? 1 : 0;
    }
  };
  const auto sample = [&]() {
    sync();
    const auto& state = loop.state();
    CurvePoint p;
    p.strategy = task.strategy;
    p.feature_mode = task.mode;
    p.seed = task.seed;
    p.judged = state.judged.size();
    p.cost_fraction = static_cast<double>(p.judged) / static_cast<double>(n);
    p.hate_found_fraction = static_cast<double>(positives_judged) / static_cast<double>(total_positives);
    if (p.judged == n) {
      p.f1_hybrid = 1.0;
    } else {
      const auto probs = learner.score_all(*state.model);
      p.f1_hybrid = hybrid_f1(gold, judged, probs);
    }
    out.points.push_back(p);
  };

  sample();
  std::size_t next_checkpoint = 0;
  const auto target = [&](std::size_t k) {
    return static_cast<std::size_t>(std::llround(spec.checkpoints[k] * static_cast<double>(n)));
  };
  while (next_checkpoint < spec.checkpoints.size() && target(next_checkpoint) <= out.points.back().judged) ++next_checkpoint;

  while (next_checkpoint < spec.checkpoints.size()) {
    if (loop.exhausted()) break;
    const auto batch = loop.propose();
    std::vector<std::pair<std::string, Label>> labels;
    labels.reserve(batch.size());
    for (const auto& id : batch) labels.emplace_back(id, oracle(id));
    loop.record(labels);
    const std::size_t judged_now = loop.state().judged.size();
    if (judged_now >= target(next_checkpoint)) {
      sample();
      while (next_checkpoint < spec.checkpoints.size() && target(next_checkpoint) <= judged_now) ++next_checkpoint;
    }
  }

  std::vector<CurveXY> f1_curve;
  std::vector<CurveXY> found_curve;
  for (const auto& p : out.points) {
    f1_curve.emplace_back(p.cost_fraction, p.f1_hybrid);
    found_curve.emplace_back(p.cost_fraction, p.hate_found_fraction);
  }
  if (out.points.size() >= 2) {
    out.summary.auc_f1_hybrid = trapezoid_auc(f1_curve);
    out.summary.auc_hate_found = trapezoid_auc(found_curve);
  }
  return out;
}

}  // namespace

SimulationResult simulate(const DocumentCollection& collection, const SimulationSpec& spec, const FeatureSources& sources) {
  spec.validate();
  if (collection.empty()) throw ValidationError("empty collection");
  std::vector<Label> gold;
  gold.reserve(collection.size());
  for (const auto& doc : collection) {
    if (!doc.gold_label) throw ValidationError("document without gold label: " + doc.doc_id);
    gold.push_back(*doc.gold_label);
  }

  std::vector<std::unique_ptr<Learner>> learners;
  for (auto mode : spec.feature_modes) learners.push_back(make_learner(collection, mode, spec.al_template.training, sources));

  std::vector<RunTask> tasks;
  for (std::size_t m = 0; m < spec.feature_modes.size(); ++m) {
    for (auto strategy : spec.strategies) {
      for (std::size_t r = 0; r < spec.repetitions; ++r) tasks.push_back({strategy, spec.feature_modes[m], m, spec.base_seed + r});
    }
  }

  std::vector<RunOutput> outputs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        outputs[i] = run_one(collection, *learners[tasks[i].learner], spec, tasks[i], gold);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t n_threads = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SimulationResult result;
  for (auto& o : outputs) {
    result.points.insert(result.points.end(), o.points.begin(), o.points.end());
    result.curves.push_back(o.summary);
  }
  return result;
}

}  // namespace rarecorpus
