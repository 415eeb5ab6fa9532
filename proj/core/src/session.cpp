#include "rarecorpus/session.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "rarecorpus/error.hpp"

namespace rarecorpus {

using nlohmann::json;

const char* const kContentWarning =
    "Content warning: the posts in this task may contain hateful, offensive or violent language. "
    "Take a break whenever you need one. If the material affects you, support resources are available online.";

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::active:
      return "active";
    case SessionStatus::exhausted:
      return "exhausted";
    case SessionStatus::aborted:
      return "aborted";
  }
  return "aborted";
}

namespace {

Label label_from_json(const json& j) {
  if (j.is_boolean()) return to_label(j.get<bool>());
  if (j.is_number_integer()) {
    const auto v = j.get<int>();
    if (v == 0 || v == 1) return to_label(v == 1);
  }
  if (j.is_string()) {
    if (auto l = parse_label(j.get<std::string>())) return *l;
  }
  throw ValidationError("invalid label: " + j.dump());
}

std::string_view to_string(LabelSource source) {
  return source == LabelSource::final_judgment ? "final" : "inferred";
}

LabelSource parse_label_source(std::string_view text) {
  if (text == "final") return LabelSource::final_judgment;
  if (text == "inferred") return LabelSource::inferred;
  throw ValidationError("label_source must be \"final\" or \"inferred\"");
}

}  // namespace

json SessionConfig::to_json() const {
  json j = al.to_json();
  json seeds = json::array();
  for (const auto& [doc_id, label] : seed_labels) seeds.push_back({{"doc_id", doc_id}, {"label", rarecorpus::to_string(label)}});
  j["seed_labels"] = seeds;
  j["seed_positives"] = seed_positives;
  j["seed_negatives"] = seed_negatives;
  j["annotators_per_doc"] = annotators_per_doc;
  j["label_source"] = to_string(label_source);
  j["strict_consistency"] = strict_consistency;
  return j;
}

SessionConfig SessionConfig::from_json(const json& j, std::size_t collection_size) {
  if (!j.is_object()) throw ValidationError("session config must be a JSON object");
  SessionConfig config;
  try {
    json al = j;
    if (!al.contains("budget")) al["budget"] = collection_size;
    config.al = ALConfig::from_json(al);
    for (const auto& s : j.value("seed_labels", json::array())) {
      config.seed_labels.emplace_back(s.at("doc_id").get<std::string>(), label_from_json(s.at("label")));
    }
    config.seed_positives = j.value("seed_positives", config.seed_positives);
    config.seed_negatives = j.value("seed_negatives", config.seed_negatives);
    config.annotators_per_doc = j.value("annotators_per_doc", config.annotators_per_doc);
    config.label_source = parse_label_source(j.value("label_source", std::string("final")));
    config.strict_consistency = j.value("strict_consistency", config.strict_consistency);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid session config: ") + e.what());
  }
  if (config.annotators_per_doc == 0) throw ValidationError("annotators_per_doc must be at least 1");
  return config;
}

json SubmitResult::to_json() const {
  return {{"consistent", consistent},
          {"inferred_hateful", inferred_hateful},
          {"batch_complete", batch_complete},
          {"status", to_string(status)}};
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string session_id, std::string collection_ref, std::shared_ptr<const DocumentCollection> collection,
                 std::shared_ptr<const Learner> learner, SessionConfig config)
    : id_(std::move(session_id)),
      collection_ref_(std::move(collection_ref)),
      collection_(std::move(collection)),
      learner_(std::move(learner)),
      config_(std::move(config)) {
  auto& al = config_.al;
  if (al.seed_doc_ids.empty()) {
    if (!config_.seed_labels.empty()) {
      for (const auto& [doc_id, label] : config_.seed_labels) al.seed_doc_ids.push_back(doc_id);
    } else {
      al.seed_doc_ids = choose_seeds(*collection_, config_.seed_positives, config_.seed_negatives, al.rng_seed);
    }
  }
  if (config_.seed_labels.empty()) {
    for (const auto& doc_id : al.seed_doc_ids) {
      const auto& doc = collection_->by_id(doc_id);
      if (!doc.gold_label) throw ValidationError("seed document " + doc_id + " has no label; supply seed_labels");
      config_.seed_labels.emplace_back(doc_id, *doc.gold_label);
    }
  }
  for (const auto& [doc_id, label] : config_.seed_labels) {
    if (!collection_->index_of(doc_id)) throw ValidationError("seed document not in collection: " + doc_id);
  }
  loop_ = std::make_unique<ActiveLearningLoop>(*collection_, *learner_, al);
  loop_->start(config_.seed_labels);
  seeds_ = config_.seed_labels;
  loop_->propose();
}

SessionStatus Session::status_locked() const {
  if (abort_reason_) return SessionStatus::aborted;
  return loop_->exhausted() ? SessionStatus::exhausted : SessionStatus::active;
}

SessionStatus Session::status() const {
  std::lock_guard lock(mutex_);
  return status_locked();
}

std::vector<const Document*> Session::next(const std::string& worker_id) const {
  std::lock_guard lock(mutex_);
  std::vector<const Document*> out;
  if (status_locked() != SessionStatus::active) return out;
  for (const auto& doc_id : loop_->state().outstanding) {
    const auto it = by_doc_.find(doc_id);
    if (it != by_doc_.end()) {
      if (it->second.size() >= config_.annotators_per_doc) continue;
      const bool mine = std::any_of(it->second.begin(), it->second.end(),
                                    [&](std::size_t k) { return annotations_[k].worker_id == worker_id; });
      if (mine) continue;
    }
    out.push_back(&collection_->by_id(doc_id));
  }
  return out;
}

void Session::check_locked(const Annotation& a) const {
  if (a.worker_id.empty()) throw ValidationError("worker_id is required");
  if (!collection_->index_of(a.doc_id)) throw NotFoundError("unknown document " + a.doc_id);
  const auto status = status_locked();
  if (status != SessionStatus::active) throw ConflictError("session is " + std::string(to_string(status)));
  const auto& outstanding = loop_->state().outstanding;
  if (std::find(outstanding.begin(), outstanding.end(), a.doc_id) == outstanding.end()) {
    throw ConflictError("document " + a.doc_id + " is not outstanding");
  }
  if (const auto it = by_doc_.find(a.doc_id); it != by_doc_.end()) {
    for (auto k : it->second) {
      if (annotations_[k].worker_id == a.worker_id) {
        throw ConflictError("worker " + a.worker_id + " already annotated " + a.doc_id);
      }
    }
    if (it->second.size() >= config_.annotators_per_doc) throw ConflictError("document " + a.doc_id + " is fully annotated");
  }
  validate_spans(a, collection_->by_id(a.doc_id).text);
}

void Session::check(const Annotation& annotation) const {
  std::lock_guard lock(mutex_);
  check_locked(annotation);
}

SubmitResult Session::submit(const Annotation& annotation) {
  std::lock_guard lock(mutex_);
  check_locked(annotation);

  SubmitResult result;
  result.consistent = self_consistent(annotation);
  result.inferred_hateful = infer_hateful(annotation);

  annotations_.push_back(annotation);
  auto& positions = by_doc_[annotation.doc_id];
  positions.push_back(annotations_.size() - 1);
  if (positions.size() == config_.annotators_per_doc) completed_.push_back(annotation.doc_id);

  const auto& outstanding = loop_->state().outstanding;
  const bool complete = std::all_of(outstanding.begin(), outstanding.end(), [&](const std::string& doc_id) {
    const auto it = by_doc_.find(doc_id);
    return it != by_doc_.end() && it->second.size() >= config_.annotators_per_doc;
  });
  if (complete) {
    std::vector<std::pair<std::string, Label>> labels;
    for (const auto& doc_id : outstanding) {
      std::size_t votes = 0;
      const auto& ks = by_doc_.at(doc_id);
      for (auto k : ks) {
        const auto& a = annotations_[k];
        votes += (config_.label_source == LabelSource::final_judgment ? a.final_hateful : infer_hateful(a)) ? 1 : 0;
      }
      labels.emplace_back(doc_id, to_label(2 * votes > ks.size()));
    }
    try {
      loop_->record(labels);
      loop_->propose();
    } catch (const std::exception& e) {
      abort_reason_ = e.what();
    }
    result.batch_complete = true;
  }
  result.status = status_locked();
  return result;
}

std::vector<AggregatedLabel> Session::aggregated() const {
  std::lock_guard lock(mutex_);
  std::vector<AggregatedLabel> out;
  out.reserve(completed_.size());
  for (const auto& doc_id : completed_) {
    std::vector<Annotation> group;
    for (auto k : by_doc_.at(doc_id)) group.push_back(annotations_[k]);
    out.push_back(aggregate(collection_->by_id(doc_id), group, {config_.strict_consistency}));
  }
  return out;
}

json Session::state() const {
  const auto labels = aggregated();
  std::lock_guard lock(mutex_);
  const auto& st = loop_->state();
  std::size_t hateful = 0;
  std::size_t consistent_docs = 0;
  for (const auto& l : labels) {
    hateful += is_hateful(l.final_label) ? 1 : 0;
    consistent_docs += l.consistent ? 1 : 0;
  }
  const auto counts = consistency_counts(annotations_);
  json j = {{"session_id", id_},
            {"collection", collection_ref_},
            {"status", to_string(status_locked())},
            {"strategy", to_string(config_.al.strategy)},
            {"feature_mode", to_string(config_.al.feature_mode)},
            {"batch_size", config_.al.batch_size},
            {"annotators_per_doc", config_.annotators_per_doc},
            {"label_source", to_string(config_.label_source)},
            {"budget", st.budget},
            {"spent", st.budget - st.remaining_budget},
            {"remaining_budget", st.remaining_budget},
            {"iteration", st.iteration},
            {"judged", st.judged.size()},
            {"outstanding", st.outstanding},
            {"annotations", annotations_.size()},
            {"completed_documents", labels.size()},
            {"prevalence", labels.empty() ? json(nullptr) : json(static_cast<double>(hateful) / static_cast<double>(labels.size()))},
            {"consistency",
             {{"annotations", counts.annotations},
              {"consistent_annotations", counts.consistent_annotations},
              {"documents", labels.size()},
              {"consistent_documents", consistent_docs},
              {"all_annotators_consistent_documents", counts.consistent_documents}}}};
  if (abort_reason_) j["abort_reason"] = *abort_reason_;
  return j;
}

std::string Session::export_jsonl() const {
  const auto labels = aggregated();
  std::lock_guard lock(mutex_);
  std::ostringstream out;
  for (const auto& [doc_id, label] : seeds_) {
    out << json{{"type", "seed"}, {"doc_id", doc_id}, {"label", to_string(label)}}.dump() << '\n';
  }
  for (const auto& a : annotations_) {
    json j = a.to_json();
    j["type"] = "annotation";
    out << j.dump() << '\n';
  }
  for (const auto& l : labels) {
    json j = l.to_json();
    j["type"] = "aggregated";
    out << j.dump() << '\n';
  }
  return out.str();
}

json Session::progress() const {
  std::lock_guard lock(mutex_);
  const auto& st = loop_->state();
  return {{"iteration", st.iteration},
          {"judged", st.judged.size()},
          {"remaining_budget", st.remaining_budget},
          {"outstanding", st.outstanding}};
}

// ---------------------------------------------------------------------------
// SessionManager

SessionManager::SessionManager(std::filesystem::path log_dir,
                               std::map<std::string, std::shared_ptr<const DocumentCollection>> collections,
                               FeatureSources sources)
    : log_dir_(std::move(log_dir)), collections_(std::move(collections)), sources_(std::move(sources)) {
  if (collections_.empty()) throw ValidationError("no collections to serve");
  if (!log_dir_.empty()) std::filesystem::create_directories(log_dir_);
}

std::filesystem::path SessionManager::log_path(const std::string& session_id) const {
  return log_dir_ / (session_id + ".jsonl");
}

std::shared_ptr<const Learner> SessionManager::learner_for(const std::string& collection_ref, const ALConfig& config) {
  const std::string key = collection_ref + '|' + std::string(to_string(config.feature_mode)) + '|' + config.training.to_json().dump();
  if (auto it = learners_.find(key); it != learners_.end()) return it->second;
  std::shared_ptr<const Learner> learner = make_learner(*collections_.at(collection_ref), config.feature_mode, config.training, sources_);
  learners_.emplace(key, learner);
  return learner;
}

std::shared_ptr<Session> SessionManager::build(const std::string& session_id, const json& create_event) {
  const std::string ref = create_event.at("collection").get<std::string>();
  const auto collection = collections_.find(ref);
  if (collection == collections_.end()) throw NotFoundError("unknown collection " + ref);
  const auto config = SessionConfig::from_json(create_event.at("config"), collection->second->size());
  config.al.validate();
  auto learner = learner_for(ref, config.al);
  return std::make_shared<Session>(session_id, ref, collection->second, std::move(learner), config);
}

void SessionManager::append(const std::string& session_id, const json& event) {
  if (log_dir_.empty()) return;
  std::ofstream out(log_path(session_id), std::ios::app | std::ios::binary);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot write event log for " + session_id);
}

namespace {

std::optional<std::size_t> session_number(std::string_view id) {
  constexpr std::string_view prefix = "session-";
  if (id.substr(0, prefix.size()) != prefix) return std::nullopt;
  std::size_t n = 0;
  const auto* first = id.data() + prefix.size();
  const auto* last = id.data() + id.size();
  const auto [ptr, ec] = std::from_chars(first, last, n);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return n;
}

}  // namespace

std::string SessionManager::create(const json& body) {
  std::lock_guard lock(mutex_);
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  std::string ref;
  if (body.contains("collection")) {
    ref = body.at("collection").get<std::string>();
  } else if (collections_.size() == 1) {
    ref = collections_.begin()->first;
  } else {
    throw ValidationError("collection is required when several are loaded");
  }
  char id[32];
  std::snprintf(id, sizeof id, "session-%04zu", next_number_);
  json event = {{"event", "create"}, {"session_id", id}, {"collection", ref}, {"config", body.value("config", json::object())}};
  auto session = build(id, event);
  event["config"] = session->config().to_json();
  if (!log_dir_.empty() && std::filesystem::exists(log_path(id))) throw ConflictError(std::string("log already exists for ") + id);
  append(id, event);
  append(id, {{"event", "retrain"}, {"progress", session->progress()}});
  sessions_.emplace(id, session);
  log_locks_.emplace(id, std::make_unique<std::mutex>());
  ++next_number_;
  return id;
}

std::shared_ptr<Session> SessionManager::get(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  return it->second;
}

SubmitResult SessionManager::submit(const std::string& session_id, const Annotation& annotation) {
  std::mutex* log_lock = nullptr;
  std::shared_ptr<Session> session;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
    session = it->second;
    log_lock = log_locks_.at(session_id).get();
  }
  std::lock_guard lock(*log_lock);
  session->check(annotation);
  append(session_id, {{"event", "annotate"}, {"annotation", annotation.to_json()}});
  const auto result = session->submit(annotation);
  if (result.batch_complete) append(session_id, {{"event", "retrain"}, {"progress", session->progress()}});
  return result;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, session] : sessions_) ids.push_back(id);
  return ids;
}

std::size_t SessionManager::recover() {
  std::lock_guard lock(mutex_);
  if (log_dir_.empty()) return 0;
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(log_dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  std::size_t loaded = 0;
  for (const auto& path : logs) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    std::shared_ptr<Session> session;
    std::size_t good_end = 0;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool retrain_pending = false;
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;  // torn final write
      const std::string line = content.substr(pos, nl - pos);
      ++line_no;
      const json event = json::parse(line, nullptr, false);
      if (event.is_discarded()) throw Error(path.string() + ":" + std::to_string(line_no) + ": corrupt event");
      const auto type = event.value("event", std::string());
      if (type == "create") {
        if (session) throw Error(path.string() + ": duplicate create event");
        session = build(event.at("session_id").get<std::string>(), event);
      } else if (!session) {
        throw Error(path.string() + ": log does not start with a create event");
      } else if (type == "annotate") {
        retrain_pending = session->submit(Annotation::from_json(event.at("annotation"))).batch_complete;
      } else if (type == "retrain") {
        retrain_pending = false;
        if (session->progress() != event.at("progress")) {
          throw Error(path.string() + ":" + std::to_string(line_no) + ": replay diverged from the recorded retrain");
        }
      } else {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": unknown event " + type);
      }
      pos = nl + 1;
      good_end = pos;
    }
    if (!session) continue;
    if (good_end < content.size()) std::filesystem::resize_file(path, good_end);
    const auto& id = session->id();
    // A crash between an annotate event and its retrain event leaves the
    // retrain unrecorded; the replay has redone it, so record it now.
    if (retrain_pending) append(id, {{"event", "retrain"}, {"progress", session->progress()}});
    if (auto n = session_number(id)) next_number_ = std::max(next_number_, *n + 1);
    sessions_.emplace(id, session);
    log_locks_.emplace(id, std::make_unique<std::mutex>());
    ++loaded;
  }
  return loaded;
}

}  // namespace rarecorpus
