#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rarecorpus/annotation.hpp"
#include "rarecorpus/corpus.hpp"

namespace rarecorpus {

/// Items x categories count matrix with the same number of raters per item.
class AgreementTable {
 public:
  explicit AgreementTable(std::vector<std::vector<std::size_t>> counts);

  /// One row of category indices per item, each in [0, categories).
  static AgreementTable from_ratings(std::span<const std::vector<std::size_t>> ratings, std::size_t categories);

  std::size_t items() const noexcept { return counts_.size(); }
  std::size_t categories() const noexcept { return categories_; }
  std::size_t raters() const noexcept { return raters_; }
  std::size_t count(std::size_t item, std::size_t category) const { return counts_[item][category]; }
  const std::vector<std::vector<std::size_t>>& rows() const noexcept { return counts_; }

  /// Share of all ratings falling in each category.
  std::vector<double> category_proportions() const;

 private:
  std::vector<std::vector<std::size_t>> counts_;
  std::size_t categories_ = 0;
  std::size_t raters_ = 0;
};

double prevalence(std::span<const Label> labels);

/// 100 * (N_T - N_TH) / N_TH.
double relative_coverage(std::size_t n_total_hateful, std::size_t n_hateful_with_lexicon);
/// Alternate reading: share of hateful posts without lexicon terms, 100 * (N_T - N_TH) / N_T.
double relative_coverage_of_total(std::size_t n_total_hateful, std::size_t n_hateful_with_lexicon);

double raw_agreement(const AgreementTable& table);
double fleiss_kappa(const AgreementTable& table);
double gwet_ac1(const AgreementTable& table);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  nlohmann::json to_json() const;
};

ClassMetrics class_metrics(std::span<const Label> predictions, std::span<const Label> gold, Label positive);

struct LexiconPartition {
  std::vector<std::size_t> without_hate_words;  // indices into the input
  std::vector<std::size_t> with_hate_words;
};

LexiconPartition partition_by_lexicon(std::span<const Document> docs, const HateLexicon& lexicon);

/// Human labels where present, thresholded model probabilities elsewhere;
/// returns F1 of the hateful class against gold.
double hybrid_f1(std::span<const Label> gold, std::span<const std::optional<Label>> judged,
                 std::span<const double> probabilities, double threshold = 0.5);
/// Same over a gold-labeled collection and a doc_id keyed judgment map;
/// `probabilities` is aligned with the collection.
double hybrid_f1(const DocumentCollection& collection, const std::unordered_map<std::string, Label>& judged,
                 std::span<const double> probabilities, double threshold = 0.5);

using CurveXY = std::pair<double, double>;

double trapezoid_auc(std::span<const CurveXY> points);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split; each class contributes round(test_fraction * size) test items.
Split stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t rng_seed);

/// Rows are items, entries are each rater's label.
AgreementTable binary_agreement_table(std::span<const std::vector<Label>> labels_per_item);

/// Final judgments of every document annotated by exactly `raters` workers.
/// Documents with a different count are skipped.
AgreementTable final_judgment_table(std::span<const Annotation> annotations, std::size_t raters);

/// Token-level rationale table: one row per token of every document
/// annotated by exactly `raters` workers, counting annotators marking it
/// out/in.
AgreementTable rationale_agreement_table(const DocumentCollection& collection, std::span<const Annotation> annotations,
                                         RationaleField field, std::size_t raters);

}  // namespace rarecorpus
