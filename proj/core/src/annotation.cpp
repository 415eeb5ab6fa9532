#include "rarecorpus/annotation.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "rarecorpus/error.hpp"
#include "rarecorpus/text.hpp"
#include "rarecorpus/unicode.hpp"

namespace rarecorpus {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kGroupNames{"BODY",     "GENDER", "IDEOLOGY", "RACE",
                                                       "RELIGION", "SEXUAL_ORIENTATION", "OTHER"};

json spans_to_json(const std::vector<Span>& spans) {
  json out = json::array();
  for (const auto& s : spans) out.push_back({{"start", s.start}, {"end", s.end}});
  return out;
}

std::vector<Span> spans_from_json(const json& j, const char* field) {
  std::vector<Span> out;
  if (!j.contains(field) || j.at(field).is_null()) return out;
  for (const auto& s : j.at(field)) {
    if (s.is_array()) {
      out.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    } else {
      out.push_back({s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()});
    }
  }
  return out;
}

std::optional<std::string> optional_string(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  return j.at(field).get<std::string>();
}

}  // namespace

std::string_view to_string(ImplicitAction action) {
  return action == ImplicitAction::inciting_violence ? "inciting_violence" : "derogatory_language";
}

std::string_view to_string(TargetGroup group) { return kGroupNames[static_cast<std::size_t>(group)]; }

std::string_view to_string(TargetDecision decision) {
  if (decision == TargetDecision::undecided) return "UNDECIDED";
  return kGroupNames[static_cast<std::size_t>(decision)];
}

std::string_view to_string(Explicitness explicitness) {
  switch (explicitness) {
    case Explicitness::explicit_target:
      return "explicit";
    case Explicitness::implicit_target:
      return "implicit";
    case Explicitness::undecided:
      return "UNDECIDED";
  }
  return "UNDECIDED";
}

ImplicitAction parse_implicit_action(std::string_view text) {
  if (text == "inciting_violence") return ImplicitAction::inciting_violence;
  if (text == "derogatory_language") return ImplicitAction::derogatory_language;
  throw ValidationError("unknown implicit action: " + std::string(text));
}

TargetGroup parse_target_group(std::string_view text) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i) {
    if (kGroupNames[i] == text) return static_cast<TargetGroup>(i);
  }
  throw ValidationError("unknown target group: " + std::string(text));
}

namespace {

TargetDecision parse_target_decision(std::string_view text) {
  if (text == "UNDECIDED") return TargetDecision::undecided;
  return static_cast<TargetDecision>(parse_target_group(text));
}

Explicitness parse_explicitness(std::string_view text) {
  if (text == "explicit") return Explicitness::explicit_target;
  if (text == "implicit") return Explicitness::implicit_target;
  if (text == "UNDECIDED") return Explicitness::undecided;
  throw ValidationError("unknown explicitness: " + std::string(text));
}

}  // namespace

// ---------------------------------------------------------------------------
// JSON

json Annotation::to_json() const {
  return {{"doc_id", doc_id},
          {"worker_id", worker_id},
          {"violence_spans", spans_to_json(violence_spans)},
          {"derogatory_spans", spans_to_json(derogatory_spans)},
          {"implicit_action", implicit_action ? json(to_string(*implicit_action)) : json(nullptr)},
          {"target_spans", spans_to_json(target_spans)},
          {"implicit_target_name", implicit_target_name ? json(*implicit_target_name) : json(nullptr)},
          {"target_group", target_group ? json(to_string(*target_group)) : json(nullptr)},
          {"final_hateful", final_hateful},
          {"explanation", explanation ? json(*explanation) : json(nullptr)},
          {"pornographic", pornographic}};
}

Annotation Annotation::from_json(const json& j) {
  Annotation a;
  try {
    a.doc_id = j.at("doc_id").get<std::string>();
    a.worker_id = j.at("worker_id").get<std::string>();
    a.violence_spans = spans_from_json(j, "violence_spans");
    a.derogatory_spans = spans_from_json(j, "derogatory_spans");
    if (auto action = optional_string(j, "implicit_action")) a.implicit_action = parse_implicit_action(*action);
    a.target_spans = spans_from_json(j, "target_spans");
    a.implicit_target_name = optional_string(j, "implicit_target_name");
    if (a.implicit_target_name && a.implicit_target_name->empty()) a.implicit_target_name.reset();
    if (auto group = optional_string(j, "target_group")) a.target_group = parse_target_group(*group);
    a.final_hateful = j.at("final_hateful").get<bool>();
    a.explanation = optional_string(j, "explanation");
    a.pornographic = j.value("pornographic", false);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed annotation: ") + e.what());
  }
  return a;
}

json AggregatedLabel::to_json() const {
  return {{"doc_id", doc_id},
          {"final_label", to_string(final_label)},
          {"consistent", consistent},
          {"target_group", target_group ? json(to_string(*target_group)) : json(nullptr)},
          {"explicitness", explicitness ? json(to_string(*explicitness)) : json(nullptr)},
          {"annotator_count", annotator_count}};
}

AggregatedLabel AggregatedLabel::from_json(const json& j) {
  AggregatedLabel label;
  label.doc_id = j.at("doc_id").get<std::string>();
  const auto final_label = parse_label(j.at("final_label").get<std::string>());
  if (!final_label) throw ValidationError("unknown final_label");
  label.final_label = *final_label;
  label.consistent = j.at("consistent").get<bool>();
  if (auto group = optional_string(j, "target_group")) label.target_group = parse_target_decision(*group);
  if (auto explicitness = optional_string(j, "explicitness")) label.explicitness = parse_explicitness(*explicitness);
  label.annotator_count = j.at("annotator_count").get<std::size_t>();
  return label;
}

// ---------------------------------------------------------------------------
// Rules

void validate_spans(const Annotation& annotation, std::string_view text) {
  const std::size_t length = unicode::scalar_length(text);
  const auto check = [&](std::vector<Span> spans, std::string_view field) {
    for (const auto& s : spans) {
      if (s.start >= s.end || s.end > length) {
        throw ValidationError(std::string(field) + " span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                              ") is outside the text (length " + std::to_string(length) + ")");
      }
    }
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].start < spans[i - 1].end) throw ValidationError(std::string(field) + " spans overlap");
    }
  };
  check(annotation.violence_spans, "violence");
  check(annotation.derogatory_spans, "derogatory");
  check(annotation.target_spans, "target");
}

bool infer_hateful(const Annotation& a) {
  const bool action = !a.violence_spans.empty() || !a.derogatory_spans.empty() || a.implicit_action.has_value();
  const bool target = !a.target_spans.empty() || a.implicit_target_name.has_value();
  return action && target;
}

bool self_consistent(const Annotation& a) { return a.final_hateful == infer_hateful(a); }

AggregatedLabel aggregate(const Document& doc, std::span<const Annotation> annotations, const AggregateOptions& options) {
  if (annotations.empty()) throw ValidationError("no annotations for " + doc.doc_id);
  for (const auto& a : annotations) {
    if (a.doc_id != doc.doc_id) throw ValidationError("annotation for " + a.doc_id + " passed with document " + doc.doc_id);
  }
  const std::size_t n = annotations.size();
  const auto strict_majority = [n](std::size_t votes) { return 2 * votes > n; };

  std::size_t final_votes = 0;
  std::size_t inferred_votes = 0;
  bool all_consistent = true;
  for (const auto& a : annotations) {
    final_votes += a.final_hateful ? 1 : 0;
    inferred_votes += infer_hateful(a) ? 1 : 0;
    all_consistent = all_consistent && self_consistent(a);
  }

  AggregatedLabel out;
  out.doc_id = doc.doc_id;
  out.annotator_count = n;
  out.final_label = to_label(strict_majority(final_votes));
  out.consistent = options.strict_consistency ? all_consistent : out.final_label == to_label(strict_majority(inferred_votes));
  if (!is_hateful(out.final_label)) return out;

  // Annotators without a group still count toward n, so they can block a majority.
  std::map<TargetGroup, std::size_t> groups;
  std::size_t explicit_votes = 0;
  std::size_t implicit_votes = 0;
  for (const auto& a : annotations) {
    if (a.target_group) ++groups[*a.target_group];
    if (!a.target_spans.empty()) {
      ++explicit_votes;
    } else if (a.implicit_target_name) {
      ++implicit_votes;
    }
  }
  out.target_group = TargetDecision::undecided;
  for (const auto& [group, votes] : groups) {
    if (strict_majority(votes)) out.target_group = static_cast<TargetDecision>(group);
  }
  out.explicitness = strict_majority(explicit_votes)   ? Explicitness::explicit_target
                     : strict_majority(implicit_votes) ? Explicitness::implicit_target
                                                       : Explicitness::undecided;
  return out;
}

ConsistencyPartition filter_consistent(std::vector<AggregatedLabel> labels) {
  ConsistencyPartition out;
  for (auto& label : labels) (label.consistent ? out.kept : out.discarded).push_back(std::move(label));
  return out;
}

ConsistencyCounts consistency_counts(std::span<const Annotation> annotations) {
  ConsistencyCounts counts;
  std::map<std::string_view, bool> per_doc;
  for (const auto& a : annotations) {
    const bool ok = self_consistent(a);
    ++counts.annotations;
    counts.consistent_annotations += ok ? 1 : 0;
    auto [it, inserted] = per_doc.emplace(a.doc_id, ok);
    if (!inserted) it->second = it->second && ok;
  }
  counts.documents = per_doc.size();
  for (const auto& [doc_id, ok] : per_doc) counts.consistent_documents += ok ? 1 : 0;
  return counts;
}

std::vector<std::uint8_t> rationale_token_labels(const Document& doc, const Annotation& annotation, RationaleField field) {
  const std::size_t length = unicode::scalar_length(doc.text);
  std::vector<bool> covered(length, false);
  const auto mark = [&](const std::vector<Span>& spans) {
    for (const auto& s : spans) {
      if (s.start >= s.end || s.end > length) {
        throw ValidationError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") is out of bounds for " + doc.doc_id);
      }
      std::fill(covered.begin() + static_cast<std::ptrdiff_t>(s.start), covered.begin() + static_cast<std::ptrdiff_t>(s.end), true);
    }
  };
  if (field == RationaleField::violence || field == RationaleField::all) mark(annotation.violence_spans);
  if (field == RationaleField::derogatory || field == RationaleField::all) mark(annotation.derogatory_spans);
  if (field == RationaleField::target || field == RationaleField::all) mark(annotation.target_spans);

  const auto tokens = token_spans(doc.text);
  std::vector<std::uint8_t> out(tokens.size(), 0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const bool all = std::all_of(covered.begin() + static_cast<std::ptrdiff_t>(tokens[t].begin),
                                 covered.begin() + static_cast<std::ptrdiff_t>(tokens[t].end), [](bool c) { return c; });
    out[t] = all ? 1 : 0;
  }
  return out;
}

}  // namespace rarecorpus
