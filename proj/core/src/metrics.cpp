#include "rarecorpus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "rarecorpus/error.hpp"

namespace rarecorpus {

using nlohmann::json;

AgreementTable::AgreementTable(std::vector<std::vector<std::size_t>> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw ValidationError("agreement table has no items");
  categories_ = counts_.front().size();
  if (categories_ == 0) throw ValidationError("agreement table has no categories");
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i].size() != categories_) throw ValidationError("agreement table rows differ in width");
    std::size_t r = 0;
    for (auto c : counts_[i]) r += c;
    if (i == 0) raters_ = r;
    if (r != raters_) throw ValidationError("agreement table rows differ in rater count at item " + std::to_string(i));
  }
  if (raters_ < 2) throw ValidationError("agreement needs at least 2 raters per item");
}

AgreementTable AgreementTable::from_ratings(std::span<const std::vector<std::size_t>> ratings, std::size_t categories) {
  std::vector<std::vector<std::size_t>> counts;
  counts.reserve(ratings.size());
  for (const auto& item : ratings) {
    std::vector<std::size_t> row(categories, 0);
    for (auto c : item) {
      if (c >= categories) throw ValidationError("rating category out of range");
      ++row[c];
    }
    counts.push_back(std::move(row));
  }
  return AgreementTable(std::move(counts));
}

std::vector<double> AgreementTable::category_proportions() const {
  std::vector<double> p(categories_, 0.0);
  for (const auto& row : counts_) {
    for (std::size_t q = 0; q < categories_; ++q) p[q] += static_cast<double>(row[q]);
  }
  const double total = static_cast<double>(items() * raters_);
  for (auto& x : p) x /= total;
  return p;
}

double prevalence(std::span<const Label> labels) {
  if (labels.empty()) throw ValidationError("prevalence of an empty label list");
  const auto positives = std::count(labels.begin(), labels.end(), Label::hateful);
  return static_cast<double>(positives) / static_cast<double>(labels.size());
}

double relative_coverage(std::size_t n_total_hateful, std::size_t n_hateful_with_lexicon) {
  if (n_hateful_with_lexicon == 0) throw ValidationError("relative coverage undefined");
  if (n_hateful_with_lexicon > n_total_hateful) throw ValidationError("lexicon matches exceed hateful total");
  return 100.0 * static_cast<double>(n_total_hateful - n_hateful_with_lexicon) / static_cast<double>(n_hateful_with_lexicon);
}

double relative_coverage_of_total(std::size_t n_total_hateful, std::size_t n_hateful_with_lexicon) {
  if (n_total_hateful == 0) throw ValidationError("relative coverage undefined");
  if (n_hateful_with_lexicon > n_total_hateful) throw ValidationError("lexicon matches exceed hateful total");
  return 100.0 * static_cast<double>(n_total_hateful - n_hateful_with_lexicon) / static_cast<double>(n_total_hateful);
}

double raw_agreement(const AgreementTable& table) {
  const double r = static_cast<double>(table.raters());
  double sum = 0.0;
  for (const auto& row : table.rows()) {
    double pairs = 0.0;
    for (auto n : row) pairs += static_cast<double>(n) * (static_cast<double>(n) - 1.0);
    sum += pairs / (r * (r - 1.0));
  }
  return sum / static_cast<double>(table.items());
}

double fleiss_kappa(const AgreementTable& table) {
  const double p_bar = raw_agreement(table);
  double pe = 0.0;
  for (double p : table.category_proportions()) pe += p * p;
  if (pe >= 1.0) return 1.0;
  return (p_bar - pe) / (1.0 - pe);
}

double gwet_ac1(const AgreementTable& table) {
  if (table.categories() < 2) throw ValidationError("AC1 needs at least 2 categories");
  const double p_bar = raw_agreement(table);
  double pe = 0.0;
  for (double p : table.category_proportions()) pe += p * (1.0 - p);
  pe /= static_cast<double>(table.categories() - 1);
  return (p_bar - pe) / (1.0 - pe);
}

json ClassMetrics::to_json() const {
  return {{"precision", precision}, {"recall", recall}, {"f1", f1}, {"support", support}};
}

ClassMetrics class_metrics(std::span<const Label> predictions, std::span<const Label> gold, Label positive) {
  if (predictions.size() != gold.size()) throw ValidationError("predictions and gold differ in length");
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predictions[i] == positive;
    const bool g = gold[i] == positive;
    tp += (p && g) ? 1 : 0;
    fp += (p && !g) ? 1 : 0;
    fn += (!p && g) ? 1 : 0;
  }
  ClassMetrics m;
  m.support = tp + fn;
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

LexiconPartition partition_by_lexicon(std::span<const Document> docs, const HateLexicon& lexicon) {
  LexiconPartition out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    (contains_hate_word(docs[i], lexicon) ? out.with_hate_words : out.without_hate_words).push_back(i);
  }
  return out;
}

double hybrid_f1(std::span<const Label> gold, std::span<const std::optional<Label>> judged,
                 std::span<const double> probabilities, double threshold) {
  if (judged.size() != gold.size() || probabilities.size() != gold.size()) {
    throw ValidationError("hybrid F1 inputs differ in length");
  }
  std::vector<Label> assembled(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    assembled[i] = judged[i] ? *judged[i] : to_label(probabilities[i] >= threshold);
  }
  return class_metrics(assembled, gold, Label::hateful).f1;
}

double hybrid_f1(const DocumentCollection& collection, const std::unordered_map<std::string, Label>& judged,
                 std::span<const double> probabilities, double threshold) {
  std::vector<Label> gold;
  std::vector<std::optional<Label>> human(collection.size());
  gold.reserve(collection.size());
  for (std::size_t i = 0; i < collection.size(); ++i) {
    const auto& doc = collection[i];
    if (!doc.gold_label) throw ValidationError("document without gold label: " + doc.doc_id);
    gold.push_back(*doc.gold_label);
    if (auto it = judged.find(doc.doc_id); it != judged.end()) human[i] = it->second;
  }
  for (const auto& [doc_id, label] : judged) {
    if (!collection.index_of(doc_id)) throw ValidationError("judged document not in collection: " + doc_id);
  }
  return hybrid_f1(gold, human, probabilities, threshold);
}

double trapezoid_auc(std::span<const CurveXY> points) {
  if (points.size() < 2) throw ValidationError("trapezoid AUC needs at least 2 points");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto [x0, y0] = points[i - 1];
    const auto [x1, y1] = points[i];
    if (!(x1 > x0)) throw ValidationError("curve x values must be strictly increasing");
    area += (x1 - x0) * (y0 + y1) / 2.0;
  }
  return area;
}

Split stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t rng_seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test fraction must lie in (0, 1)");
  std::mt19937_64 rng(rng_seed);
  Split split;
  for (Label cls : {Label::non_hateful, Label::hateful}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

AgreementTable binary_agreement_table(std::span<const std::vector<Label>> labels_per_item) {
  std::vector<std::vector<std::size_t>> counts;
  counts.reserve(labels_per_item.size());
  for (const auto& item : labels_per_item) {
    std::vector<std::size_t> row(2, 0);
    for (Label l : item) ++row[static_cast<std::size_t>(to_int(l))];
    counts.push_back(std::move(row));
  }
  return AgreementTable(std::move(counts));
}

namespace {

std::map<std::string, std::vector<const Annotation*>> group_by_doc(std::span<const Annotation> annotations) {
  std::map<std::string, std::vector<const Annotation*>> out;
  for (const auto& a : annotations) out[a.doc_id].push_back(&a);
  return out;
}

}  // namespace

AgreementTable final_judgment_table(std::span<const Annotation> annotations, std::size_t raters) {
  std::vector<std::vector<Label>> items;
  for (const auto& [doc_id, group] : group_by_doc(annotations)) {
    if (group.size() != raters) continue;
    std::vector<Label> labels;
    for (const auto* a : group) labels.push_back(to_label(a->final_hateful));
    items.push_back(std::move(labels));
  }
  return binary_agreement_table(items);
}

AgreementTable rationale_agreement_table(const DocumentCollection& collection, std::span<const Annotation> annotations,
                                         RationaleField field, std::size_t raters) {
  std::vector<std::vector<std::size_t>> counts;
  for (const auto& [doc_id, group] : group_by_doc(annotations)) {
    if (group.size() != raters) continue;
    const auto& doc = collection.by_id(doc_id);
    std::vector<std::vector<std::size_t>> rows;
    for (const auto* a : group) {
      const auto marks = rationale_token_labels(doc, *a, field);
      if (rows.empty()) rows.assign(marks.size(), std::vector<std::size_t>(2, 0));
      for (std::size_t t = 0; t < marks.size(); ++t) ++rows[t][marks[t]];
    }
    counts.insert(counts.end(), rows.begin(), rows.end());
  }
  return AgreementTable(std::move(counts));
}

}  // namespace rarecorpus
