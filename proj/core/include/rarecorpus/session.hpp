#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rarecorpus/active_learning.hpp"
#include "rarecorpus/annotation.hpp"
#include "rarecorpus/corpus.hpp"

namespace rarecorpus {

/// Shown to annotators before the first document.
extern const char* const kContentWarning;

enum class SessionStatus { active, exhausted, aborted };
std::string_view to_string(SessionStatus status);

/// Which per-annotation label feeds the model.
enum class LabelSource { final_judgment, inferred };

struct SessionConfig {
  ALConfig al;
  /// Seed labels; when empty the seeds' gold labels are used.
  std::vector<std::pair<std::string, Label>> seed_labels;
  /// When al.seed_doc_ids is empty, seeds are drawn from gold labels.
  std::size_t seed_positives = 5;
  std::size_t seed_negatives = 5;
  std::size_t annotators_per_doc = 1;
  LabelSource label_source = LabelSource::final_judgment;
  bool strict_consistency = false;

  nlohmann::json to_json() const;
  /// `budget` defaults to the collection size when absent.
  static SessionConfig from_json(const nlohmann::json& j, std::size_t collection_size);
};

struct SubmitResult {
  bool consistent = false;
  bool inferred_hateful = false;
  bool batch_complete = false;
  SessionStatus status = SessionStatus::active;

  nlohmann::json to_json() const;
};

/// One live annotation session. Selection is eager: a new batch is chosen as
/// soon as the previous one is fully labeled, so replaying the same
/// submissions reproduces the same state. Methods are thread-safe.
class Session {
 public:
  /// Resolves seeds, trains the initial model and selects the first batch.
  Session(std::string session_id, std::string collection_ref, std::shared_ptr<const DocumentCollection> collection,
          std::shared_ptr<const Learner> learner, SessionConfig config);

  const std::string& id() const noexcept { return id_; }
  const std::string& collection_ref() const noexcept { return collection_ref_; }
  const SessionConfig& config() const noexcept { return config_; }
  SessionStatus status() const;

  /// Outstanding documents this worker has not annotated yet; empty when exhausted.
  std::vector<const Document*> next(const std::string& worker_id) const;
  /// Throws ValidationError or ConflictError without changing state.
  void check(const Annotation& annotation) const;
  SubmitResult submit(const Annotation& annotation);

  nlohmann::json state() const;
  std::vector<AggregatedLabel> aggregated() const;
  /// JSON Lines: seeds, annotations in arrival order, then aggregated labels.
  std::string export_jsonl() const;
  /// Retrain summary recorded in the event log after each completed batch.
  nlohmann::json progress() const;

 private:
  void check_locked(const Annotation& annotation) const;
  SessionStatus status_locked() const;

  std::string id_;
  std::string collection_ref_;
  std::shared_ptr<const DocumentCollection> collection_;
  std::shared_ptr<const Learner> learner_;
  SessionConfig config_;
  std::unique_ptr<ActiveLearningLoop> loop_;
  std::vector<std::pair<std::string, Label>> seeds_;
  std::vector<Annotation> annotations_;
  std::map<std::string, std::vector<std::size_t>> by_doc_;  // doc_id -> annotation positions
  std::vector<std::string> completed_;                       // docs in completion order
  std::optional<std::string> abort_reason_;
  mutable std::mutex mutex_;
};

/// Owns sessions and their append-only event logs (one JSONL file each).
/// Events: create, annotate, retrain. Recovery replays annotate events;
/// retrain events are checked against the replayed state.
class SessionManager {
 public:
  SessionManager(std::filesystem::path log_dir, std::map<std::string, std::shared_ptr<const DocumentCollection>> collections,
                 FeatureSources sources = {});

  /// Replays every log in the directory. Returns the number of sessions loaded.
  std::size_t recover();

  /// Body: {"collection": name (optional when only one is loaded), "config": {...}}.
  std::string create(const nlohmann::json& body);
  std::shared_ptr<Session> get(const std::string& session_id) const;
  SubmitResult submit(const std::string& session_id, const Annotation& annotation);
  std::vector<std::string> session_ids() const;

 private:
  std::shared_ptr<const Learner> learner_for(const std::string& collection_ref, const ALConfig& config);
  std::shared_ptr<Session> build(const std::string& session_id, const nlohmann::json& create_event);
  void append(const std::string& session_id, const nlohmann::json& event);
  std::filesystem::path log_path(const std::string& session_id) const;

  std::filesystem::path log_dir_;
  std::map<std::string, std::shared_ptr<const DocumentCollection>> collections_;
  FeatureSources sources_;
  std::map<std::string, std::shared_ptr<const Learner>> learners_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::unique_ptr<std::mutex>> log_locks_;
  std::size_t next_number_ = 1;
  mutable std::mutex mutex_;
};

}  // namespace rarecorpus
