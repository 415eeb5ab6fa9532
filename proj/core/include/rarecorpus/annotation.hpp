#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rarecorpus/corpus.hpp"

namespace rarecorpus {

/// Half-open range [start, end) of Unicode scalar-value offsets into a
/// document's cleaned text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

enum class ImplicitAction { inciting_violence, derogatory_language };

enum class TargetGroup { body, gender, ideology, race, religion, sexual_orientation, other };

/// Aggregated target group: one of the seven categories, or no majority.
enum class TargetDecision { body, gender, ideology, race, religion, sexual_orientation, other, undecided };

enum class Explicitness { explicit_target, implicit_target, undecided };

std::string_view to_string(ImplicitAction action);
std::string_view to_string(TargetGroup group);
std::string_view to_string(TargetDecision decision);
std::string_view to_string(Explicitness explicitness);
ImplicitAction parse_implicit_action(std::string_view text);
TargetGroup parse_target_group(std::string_view text);

/// One worker's pass over the seven-step labeling form.
struct Annotation {
  std::string doc_id;
  std::string worker_id;
  std::vector<Span> violence_spans;    // step 1
  std::vector<Span> derogatory_spans;  // step 2
  std::optional<ImplicitAction> implicit_action;  // step 3
  std::vector<Span> target_spans;                 // step 4, explicit target
  std::optional<std::string> implicit_target_name;  // step 4, implicit target
  std::optional<TargetGroup> target_group;          // step 5
  bool final_hateful = false;                       // step 6
  std::optional<std::string> explanation;           // step 7, stored verbatim
  bool pornographic = false;

  friend bool operator==(const Annotation&, const Annotation&) = default;

  nlohmann::json to_json() const;
  static Annotation from_json(const nlohmann::json& j);
};

/// Throws ValidationError when a span is empty, exceeds the text, or overlaps
/// another span of the same field.
void validate_spans(const Annotation& annotation, std::string_view text);

/// Hate evidence (highlighted violence or derogatory language, or an implicit
/// action) together with a target (highlighted or named).
bool infer_hateful(const Annotation& annotation);

/// The direct judgment agrees with what the sub-task answers imply.
bool self_consistent(const Annotation& annotation);

struct AggregatedLabel {
  std::string doc_id;
  Label final_label = Label::non_hateful;
  bool consistent = true;
  std::optional<TargetDecision> target_group;  // hateful only
  std::optional<Explicitness> explicitness;    // hateful only
  std::size_t annotator_count = 0;

  friend bool operator==(const AggregatedLabel&, const AggregatedLabel&) = default;

  nlohmann::json to_json() const;
  static AggregatedLabel from_json(const nlohmann::json& j);
};

struct AggregateOptions {
  /// Any self-inconsistent annotator makes the document inconsistent.
  bool strict_consistency = false;
};

/// Strict-majority vote over final judgments (ties go to non_hateful). The
/// document is consistent when that vote matches the strict-majority vote of
/// the inferred labels. For hateful documents the target group and
/// explicitness need a strict majority of all annotators, else UNDECIDED.
AggregatedLabel aggregate(const Document& doc, std::span<const Annotation> annotations,
                          const AggregateOptions& options = {});

struct ConsistencyPartition {
  std::vector<AggregatedLabel> kept;
  std::vector<AggregatedLabel> discarded;
};

ConsistencyPartition filter_consistent(std::vector<AggregatedLabel> labels);

struct ConsistencyCounts {
  std::size_t annotations = 0;
  std::size_t consistent_annotations = 0;
  std::size_t documents = 0;
  std::size_t consistent_documents = 0;  // every annotator self-consistent
};

/// Per-annotation and per-document self-consistency tallies.
ConsistencyCounts consistency_counts(std::span<const Annotation> annotations);

enum class RationaleField { violence, derogatory, target, all };

/// One entry per word token of the document (unstemmed): 1 when every
/// character of the token lies inside the field's highlighted spans.
std::vector<std::uint8_t> rationale_token_labels(const Document& doc, const Annotation& annotation, RationaleField field);

}  // namespace rarecorpus
