#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "rarecorpus/active_learning.hpp"
#include "rarecorpus/corpus.hpp"

namespace rarecorpus {

/// Generator settings for a labeled corpus with planted class signal.
/// Each token slot of a positive document draws from the indicative terms
/// with probability `signal_strength`, otherwise from the shared noise terms.
/// Negative documents do the same at `signal_strength * negative_leak`.
/// Positive documents carry at least `min_indicative` indicative tokens.
struct SyntheticSpec {
  std::size_t n_docs = 2000;
  double positive_rate = 0.05;
  double signal_strength = 0.5;
  double negative_leak = 0.1;
  std::size_t min_indicative = 0;
  std::size_t indicative_terms = 10;
  std::size_t noise_terms = 600;
  std::size_t min_length = 3;
  std::size_t max_length = 6;
  std::uint64_t rng_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

/// Exactly round(n_docs * positive_rate) positives, placed at random.
DocumentCollection make_synthetic_corpus(const SyntheticSpec& spec);

struct SimulationSpec {
  std::vector<Strategy> strategies{Strategy::spl, Strategy::sal, Strategy::cal};
  std::vector<FeatureMode> feature_modes{FeatureMode::tfidf};
  std::vector<double> checkpoints{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t repetitions = 5;
  std::uint64_t base_seed = 0;
  std::size_t seed_positives = 5;
  std::size_t seed_negatives = 5;
  /// Probability that the simulated annotator flips a gold label.
  double label_noise = 0.0;
  /// Worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 0;
  /// Strategy, budget, seeds and rng seed are filled per run.
  ALConfig al_template;

  void validate() const;
  nlohmann::json to_json() const;
  static SimulationSpec from_json(const nlohmann::json& j);
};

struct CurvePoint {
  Strategy strategy = Strategy::cal;
  FeatureMode feature_mode = FeatureMode::tfidf;
  std::uint64_t seed = 0;
  std::size_t judged = 0;
  double cost_fraction = 0.0;
  double f1_hybrid = 0.0;
  double hate_found_fraction = 0.0;
};

struct CurveSummary {
  Strategy strategy = Strategy::cal;
  FeatureMode feature_mode = FeatureMode::tfidf;
  std::uint64_t seed = 0;
  double auc_f1_hybrid = 0.0;
  double auc_hate_found = 0.0;
};

struct SimulationResult {
  std::vector<CurvePoint> points;  // grouped by run, ordered by cost
  std::vector<CurveSummary> curves;

  /// Mean value at `cost_fraction` across seeds; NaN when no run sampled it.
  double mean_at(Strategy strategy, FeatureMode mode, double cost_fraction, bool hate_found) const;
  double mean_auc(Strategy strategy, FeatureMode mode, bool hate_found) const;

  void write_csv(std::ostream& out) const;
  nlohmann::json auc_summary() const;
};

/// Runs every (feature mode, strategy, repetition) with a gold-label oracle
/// and the budget set to the whole collection. Each curve starts at the
/// seed-set cost and then samples the checkpoints. Repetition r uses rng
/// seed base_seed + r for both seed selection and the loop, so strategies
/// share seed sets.
SimulationResult simulate(const DocumentCollection& collection, const SimulationSpec& spec,
                          const FeatureSources& sources = {});

}  // namespace rarecorpus
