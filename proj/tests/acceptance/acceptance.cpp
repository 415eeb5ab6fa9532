// End-to-end acceptance checks. Prints one PASS/FAIL (or SKIP) line per
// criterion and exits non-zero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "rarecorpus/active_learning.hpp"
#include "rarecorpus/annotation.hpp"
#include "rarecorpus/corpus.hpp"
#include "rarecorpus/metrics.hpp"
#include "rarecorpus/pooling.hpp"
#include "rarecorpus/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rarecorpus;

namespace {

struct Outcome {
  enum class Kind { pass, fail, skip } kind = Kind::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::Kind::pass : Outcome::Kind::fail, std::move(detail)}; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

Document make_doc(std::string id, std::string text, std::optional<Label> label = {}) {
  Document d;
  d.doc_id = std::move(id);
  d.text = std::move(text);
  d.gold_label = label;
  return d;
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  std::vector<std::string> failures;
  const auto near = [&](const char* name, double got, double want) {
    if (!(std::abs(got - want) <= 1e-9)) failures.push_back(std::string(name) + "=" + fmt(got, 12));
  };
  const AgreementTable binary({{3, 0}, {0, 3}, {2, 1}, {1, 2}, {0, 3}, {0, 3}, {1, 2}, {0, 3}, {3, 0}, {0, 3}});
  near("raw", raw_agreement(binary), 0.8);
  near("fleiss", fleiss_kappa(binary), 0.55);
  near("gwet", gwet_ac1(binary), 0.64);
  const AgreementTable multi(
      {{4, 0, 0}, {2, 2, 0}, {1, 1, 2}, {0, 4, 0}, {3, 0, 1}, {0, 0, 4}, {1, 3, 0}, {2, 1, 1}, {0, 2, 2}, {4, 0, 0}});
  near("raw3", raw_agreement(multi), 0.6);
  near("fleiss3", fleiss_kappa(multi), 201.0 / 521.0);
  near("gwet3", gwet_ac1(multi), 439.0 / 1079.0);

  std::vector<Label> pred;
  std::vector<Label> gold;
  for (int v : {1, 1, 0, 1, 0, 0, 1, 0, 0, 1}) pred.push_back(to_label(v == 1));
  for (int v : {1, 0, 0, 1, 1, 0, 1, 0, 0, 0}) gold.push_back(to_label(v == 1));
  const auto pos = class_metrics(pred, gold, Label::hateful);
  const auto neg = class_metrics(pred, gold, Label::non_hateful);
  near("P1", pos.precision, 0.6);
  near("R1", pos.recall, 0.75);
  near("F1", pos.f1, 2.0 / 3.0);
  near("P0", neg.precision, 0.8);
  near("R0", neg.recall, 2.0 / 3.0);
  near("F0", neg.f1, 0.72727272727272729);

  std::vector<CurveXY> curve;
  const std::vector<double> ys{0.05, 0.2, 0.33, 0.41, 0.6, 0.62, 0.7, 0.85, 0.9, 1.0};
  for (std::size_t i = 0; i < ys.size(); ++i) curve.emplace_back(0.1 * static_cast<double>(i + 1), ys[i]);
  near("auc", trapezoid_auc(curve), 0.5135);

  const HateLexicon lexicon({"trash", "vermin", "go back home"});
  const std::vector<std::pair<const char*, int>> docs{
      {"you are trash", 1},    {"vermin everywhere", 1}, {"they should go back home now", 1},
      {"trashy day", 1},       {"nobody wants you here", 1}, {"what a lovely morning", 0},
      {"Trash talk aside", 0}, {"back home at last", 1}, {"Vermin!!", 1},
      {"I hate mondays", 0},   {"people like them are a disease", 1}, {"go back   home", 1}};
  std::size_t n_t = 0;
  std::size_t n_th = 0;
  for (const auto& [text, y] : docs) {
    if (y != 1) continue;
    ++n_t;
    n_th += lexicon.matches(text) ? 1 : 0;
  }
  near("coverage", relative_coverage(n_t, n_th), 80.0);

  std::string detail = failures.empty() ? "19 values within 1e-9" : "mismatch:";
  for (const auto& f : failures) detail += " " + f;
  return verdict(failures.empty(), detail);
}

// ---------------------------------------------------------------------------

Outcome pooling_invariants() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t cases = 1000;
  std::size_t violations = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = 1 + rng() % 80;
    const std::size_t m = 1 + rng() % 4;
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back(make_doc("d" + std::to_string(i), "doc " + std::to_string(i)));
    const DocumentCollection collection(std::move(docs));
    std::vector<std::vector<double>> scores(m, std::vector<double>(n));
    for (auto& row : scores) {
      for (auto& s : row) s = rng() % 4 == 0 ? static_cast<double>(rng() % 11) / 10.0 : unit(rng);
    }
    std::vector<PoolModel> models;
    for (std::size_t k = 0; k < m; ++k) {
      const auto* row = &scores[k];
      const auto* coll = &collection;
      models.push_back({"m" + std::to_string(k), [row, coll](const Document& d) {
                          return std::optional<double>((*row)[*coll->index_of(d.doc_id)]);
                        }});
    }
    PoolConfig config;
    config.threshold = unit(rng);
    config.budget = 1 + rng() % 90;
    config.rng_seed = rng();
    const auto in_s = [&](std::size_t i, double t) {
      return std::any_of(scores.begin(), scores.end(), [&](const auto& row) { return row[i] >= t; });
    };
    std::size_t s_size = 0;
    for (std::size_t i = 0; i < n; ++i) s_size += in_s(i, config.threshold) ? 1 : 0;

    const auto result = build_pool(collection, models, config);
    bool ok = result.selected.size() == std::min(config.budget, s_size);
    std::set<std::string> unique(result.selected.begin(), result.selected.end());
    ok = ok && unique.size() == result.selected.size();
    for (const auto& id : result.selected) ok = ok && in_s(*collection.index_of(id), config.threshold);
    ok = ok && build_pool(collection, models, config).selected == result.selected;
    PoolConfig higher = config;
    higher.threshold = config.threshold + (1.0 - config.threshold) * unit(rng);
    ok = ok && build_pool(collection, models, higher).candidate_count <= result.candidate_count;
    violations += ok ? 0 : 1;
  }
  return verdict(violations == 0, std::to_string(cases) + " random cases, " + std::to_string(violations) + " violations");
}

// ---------------------------------------------------------------------------

Outcome al_invariants() {
  std::size_t batches = 0;
  std::size_t violations = 0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    SyntheticSpec spec;
    spec.n_docs = 200;
    spec.positive_rate = 0.1;
    spec.rng_seed = seed;
    const auto collection = make_synthetic_corpus(spec);
    const auto learner = make_learner(collection, FeatureMode::tfidf, TrainingConfig{});
    for (Strategy strategy : {Strategy::cal, Strategy::sal, Strategy::spl}) {
      ALConfig config;
      config.strategy = strategy;
      config.batch_size = 2;
      config.budget = 81;
      config.rng_seed = seed;
      config.seed_doc_ids = choose_seeds(collection, 3, 3, seed);
      ActiveLearningLoop loop(collection, *learner, config);
      const Oracle oracle = [&](const std::string& id) { return *collection.by_id(id).gold_label; };
      loop.start(oracle);
      std::set<std::string> seen(config.seed_doc_ids.begin(), config.seed_doc_ids.end());
      while (!loop.exhausted()) {
        std::vector<std::string> expected;
        if (strategy != Strategy::spl) {
          const auto scores = learner->score_all(*loop.state().model);
          std::vector<std::size_t> order;
          for (std::size_t i = 0; i < collection.size(); ++i) {
            if (!loop.is_judged(i)) order.push_back(i);
          }
          const auto key = [&](std::size_t i) { return strategy == Strategy::cal ? -scores[i] : std::abs(scores[i] - 0.5); };
          std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return key(a) != key(b) ? key(a) < key(b) : collection[a].doc_id < collection[b].doc_id;
          });
          for (std::size_t k = 0; k < std::min<std::size_t>(2, order.size()); ++k) expected.push_back(collection[order[k]].doc_id);
        }
        const auto batch = loop.propose();
        bool ok = strategy == Strategy::spl || batch == expected;
        std::vector<std::pair<std::string, Label>> labels;
        for (const auto& id : batch) {
          ok = ok && seen.insert(id).second;
          labels.emplace_back(id, oracle(id));
        }
        loop.record(labels);
        const auto& st = loop.state();
        ok = ok && st.judged.size() == seen.size() && st.remaining_budget + st.judged.size() == st.budget;
        violations += ok ? 0 : 1;
        ++batches;
      }
      if (loop.state().judged.size() != 80) ++violations;  // 6 seeds + 37 batches of 2; 1 left over
    }
  }
  return verdict(violations == 0,
                 std::to_string(batches) + " batches on 200-doc corpora, " + std::to_string(violations) + " violations");
}

// ---------------------------------------------------------------------------

struct SimulationRun {
  SimulationResult result;
  double seconds = 0.0;
  std::size_t repetitions = 0;
};

SimulationRun run_default_simulation() {
  const auto collection = make_synthetic_corpus(SyntheticSpec{});
  SimulationSpec spec;  // SPL, SAL, CAL; TF-IDF; five repetitions
  const auto start = std::chrono::steady_clock::now();
  SimulationRun run{simulate(collection, spec), 0.0, spec.repetitions};
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

Outcome headline(const SimulationRun& run) {
  const double found = run.result.mean_at(Strategy::cal, FeatureMode::tfidf, 0.5, true);
  const double f1 = run.result.mean_at(Strategy::cal, FeatureMode::tfidf, 0.5, false);
  const bool ok = found >= 0.8 && f1 >= 0.9 && run.seconds < 300.0;
  return verdict(ok, "CAL at cost 0.5 over " + std::to_string(run.repetitions) + " seeds: hate found " + fmt(found) +
                         ", hybrid F1 " + fmt(f1) + "; simulation " + fmt(run.seconds, 1) + " s");
}

Outcome auc_ordering(const SimulationRun& run) {
  const double cal = run.result.mean_auc(Strategy::cal, FeatureMode::tfidf, true);
  const double sal = run.result.mean_auc(Strategy::sal, FeatureMode::tfidf, true);
  const double spl = run.result.mean_auc(Strategy::spl, FeatureMode::tfidf, true);
  std::size_t cal_wins = 0;
  for (const auto& a : run.result.curves) {
    if (a.strategy != Strategy::cal) continue;
    for (const auto& b : run.result.curves) {
      if (b.strategy == Strategy::sal && b.seed == a.seed && a.auc_hate_found > b.auc_hate_found) ++cal_wins;
    }
  }
  const bool ok = cal > sal && sal > spl && run.seconds < 300.0;
  return verdict(ok, "AUC CAL " + fmt(cal) + ", SAL " + fmt(sal) + ", SPL " + fmt(spl) + "; CAL above SAL in " +
                         std::to_string(cal_wins) + " of " + std::to_string(run.repetitions) + " seeds");
}

// ---------------------------------------------------------------------------

Outcome aggregation_suite() {
  const Document doc = make_doc("d", "those vermin should go");
  std::vector<std::string> failures;
  const auto hateful_vote = [](std::string worker, TargetGroup group) {
    Annotation a;
    a.doc_id = "d";
    a.worker_id = std::move(worker);
    a.derogatory_spans = {{6, 12}};
    a.target_spans = {{0, 5}};
    a.target_group = group;
    a.final_hateful = true;
    return a;
  };
  const std::vector<Annotation> three{hateful_vote("a", TargetGroup::race), hateful_vote("b", TargetGroup::religion),
                                      hateful_vote("c", TargetGroup::ideology)};
  const auto undecided = aggregate(doc, three);
  if (!(undecided.final_label == Label::hateful && undecided.consistent &&
        undecided.target_group == TargetDecision::undecided))
    failures.push_back("three distinct groups");

  Annotation bare;
  bare.doc_id = "d";
  bare.worker_id = "a";
  bare.final_hateful = true;  // judged hateful, no evidence selected
  Annotation bare2 = bare;
  bare2.worker_id = "b";
  Annotation no;
  no.doc_id = "d";
  no.worker_id = "c";
  const std::vector<Annotation> unsupported{bare, bare2, no};
  const auto inconsistent = aggregate(doc, unsupported);
  if (self_consistent(bare) || inconsistent.consistent || inconsistent.final_label != Label::hateful)
    failures.push_back("unsupported hateful judgment");

  Annotation partial = hateful_vote("a", TargetGroup::race);
  partial.derogatory_spans = {{6, 11}};  // "vermi": one character short
  if (rationale_token_labels(doc, partial, RationaleField::derogatory) != std::vector<std::uint8_t>{0, 0, 0, 0})
    failures.push_back("partial token");
  if (rationale_token_labels(doc, hateful_vote("a", TargetGroup::race), RationaleField::derogatory) !=
      std::vector<std::uint8_t>{0, 1, 0, 0})
    failures.push_back("whole token");
  if (rationale_token_labels(doc, hateful_vote("a", TargetGroup::race), RationaleField::all) !=
      std::vector<std::uint8_t>{1, 1, 0, 0})
    failures.push_back("all fields");

  std::string detail = failures.empty() ? "UNDECIDED target, evidence-free inconsistency, whole-token rationale rule"
                                        : "failed:";
  for (const auto& f : failures) detail += " [" + f + "]";
  return verdict(failures.empty(), detail);
}

// ---------------------------------------------------------------------------

Outcome released_dataset() {
  const char* env = std::getenv("RARECORPUS_RELEASED_DATASET");
  const fs::path dir = env ? fs::path(env) : fs::path(RARECORPUS_FIXTURE_DIR) / "released";
  const auto collection_path = dir / "collection.jsonl";
  const auto annotations_path = dir / "annotations.jsonl";
  const auto lexicon_path = dir / "lexicon.txt";
  if (!fs::exists(collection_path) || !fs::exists(annotations_path) || !fs::exists(lexicon_path)) {
    return {Outcome::Kind::skip, "fixture absent (" + dir.string() + ")"};
  }
  const auto collection = read_collection(collection_path.string());
  const auto lexicon = HateLexicon::load(lexicon_path.string());
  std::vector<Annotation> annotations;
  {
    std::ifstream in(annotations_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) annotations.push_back(Annotation::from_json(json::parse(line)));
    }
  }
  std::map<std::string, std::vector<Annotation>> by_doc;
  for (const auto& a : annotations) by_doc[a.doc_id].push_back(a);
  std::vector<AggregatedLabel> labels;
  for (const auto& d : collection) {
    const auto it = by_doc.find(d.doc_id);
    if (it != by_doc.end()) labels.push_back(aggregate(d, it->second));
  }
  const auto partition = filter_consistent(labels);
  std::vector<Label> kept_labels;
  std::size_t n_t = 0;
  std::size_t n_th = 0;
  for (const auto& l : partition.kept) {
    kept_labels.push_back(l.final_label);
    if (!is_hateful(l.final_label)) continue;
    ++n_t;
    n_th += contains_hate_word(collection.by_id(l.doc_id), lexicon) ? 1 : 0;
  }
  const double prev = 100.0 * prevalence(kept_labels);
  const double coverage = n_th > 0 ? relative_coverage(n_t, n_th) : NAN;
  const auto table = final_judgment_table(annotations, 3);
  const double kappa = fleiss_kappa(table);
  const double ac1 = gwet_ac1(table);
  const bool ok = std::abs(prev - 14.12) <= 0.05 && std::abs(coverage - 14.60) <= 0.1 && std::abs(kappa - 0.16) <= 0.01 &&
                  std::abs(ac1 - 0.58) <= 0.01 && partition.discarded.size() == 274 && partition.kept.size() == 4725;
  return verdict(ok, "prevalence " + fmt(prev, 2) + "%, coverage " + fmt(coverage, 2) + "%, kappa " + fmt(kappa, 3) +
                         ", AC1 " + fmt(ac1, 3) + ", discarded " + std::to_string(partition.discarded.size()) +
                         ", kept " + std::to_string(partition.kept.size()));
}

// ---------------------------------------------------------------------------
// Crash recovery against the real server process.

#ifdef RARECORPUS_CLI

class ServerProcess {
 public:
  ServerProcess(const fs::path& collection, const fs::path& log_dir, const fs::path& port_file) {
    fs::remove(port_file);
    const std::string fx = "fx=" + collection.string();
    std::vector<std::string> args{RARECORPUS_CLI, "serve", "--collection", fx, "--log-dir", log_dir.string(),
                                  "--port", "0", "--port-file", port_file.string()};
    pid_ = fork();
    if (pid_ == 0) {
      const int null = open("/dev/null", O_WRONLY);
      dup2(null, STDOUT_FILENO);
      dup2(null, STDERR_FILENO);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      execv(argv[0], argv.data());
      _exit(127);
    }
    for (int i = 0; i < 500 && port_ == 0; ++i) {
      std::ifstream in(port_file);
      if (!(in >> port_)) port_ = 0;
      if (port_ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    if (port_ == 0) throw std::runtime_error("server did not report a port");
  }
  ~ServerProcess() {
    if (pid_ > 0) kill_with(SIGKILL);
  }

  int port() const { return port_; }

  int kill_with(int sig) {
    ::kill(pid_, sig);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    return status;
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

json vote_for(const Document& doc, const std::string& worker) {
  Annotation a;
  a.doc_id = doc.doc_id;
  a.worker_id = worker;
  if (is_hateful(*doc.gold_label)) {
    a.violence_spans = {{0, 1}};
    a.target_spans = {{1, 2}};
    a.target_group = TargetGroup::other;
    a.final_hateful = true;
  }
  return a.to_json();
}

// Submits up to `limit` annotations; returns how many were sent.
std::size_t drive(httplib::Client& client, const std::string& id, const DocumentCollection& c, std::size_t limit) {
  std::size_t sent = 0;
  while (sent < limit) {
    auto next = client.Get("/sessions/" + id + "/next?worker=w1");
    if (!next || next->status != 200) throw std::runtime_error("next failed");
    const auto docs = json::parse(next->body).at("documents");
    if (docs.empty()) break;
    for (const auto& d : docs) {
      auto r = client.Post("/sessions/" + id + "/annotations",
                           vote_for(c.by_id(d.at("doc_id").get<std::string>()), "w1").dump(), "application/json");
      if (!r || r->status != 200) throw std::runtime_error("submit failed");
      if (++sent >= limit) break;
    }
  }
  return sent;
}

Outcome crash_recovery() {
  const auto root = fs::temp_directory_path() / ("rarecorpus-acceptance-" + std::to_string(getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  SyntheticSpec spec;
  spec.n_docs = 150;
  spec.positive_rate = 0.15;
  spec.rng_seed = 21;
  const auto collection = make_synthetic_corpus(spec);
  {
    std::ofstream out(root / "fx.jsonl");
    write_collection(out, collection);
  }
  const std::string body = json{{"collection", "fx"},
                                {"config", {{"strategy", "CAL"}, {"budget", 40}, {"batch_size", 2}, {"rng_seed", 3}}}}
                               .dump();
  try {
    std::string reference;
    {
      ServerProcess server(root / "fx.jsonl", root / "log-a", root / "port-a");
      httplib::Client client("127.0.0.1", server.port());
      const auto id = json::parse(client.Post("/sessions", body, "application/json")->body).at("session_id").get<std::string>();
      drive(client, id, collection, 1000);
      reference = client.Get("/sessions/" + id + "/export")->body;
      const int status = server.kill_with(SIGTERM);
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return verdict(false, "server did not stop cleanly on SIGTERM");
    }
    const std::size_t before_crash = 13;
    std::string id;
    {
      ServerProcess server(root / "fx.jsonl", root / "log-b", root / "port-b");
      httplib::Client client("127.0.0.1", server.port());
      id = json::parse(client.Post("/sessions", body, "application/json")->body).at("session_id").get<std::string>();
      drive(client, id, collection, before_crash);
      server.kill_with(SIGKILL);
    }
    ServerProcess server(root / "fx.jsonl", root / "log-b", root / "port-b");
    httplib::Client client("127.0.0.1", server.port());
    const auto state = json::parse(client.Get("/sessions/" + id + "/state")->body);
    const auto recovered = state.at("annotations").get<std::size_t>();
    drive(client, id, collection, 1000);
    const auto resumed = client.Get("/sessions/" + id + "/export")->body;
    server.kill_with(SIGTERM);
    fs::remove_all(root);
    const bool ok = recovered == before_crash && resumed == reference && !reference.empty();
    return verdict(ok, "killed after " + std::to_string(before_crash) + " submissions, " + std::to_string(recovered) +
                           " recovered; export " + (resumed == reference ? "identical" : "differs") + " (" +
                           std::to_string(reference.size()) + " bytes)");
  } catch (const std::exception& e) {
    fs::remove_all(root);
    return verdict(false, e.what());
  }
}

#else

Outcome crash_recovery() { return verdict(false, "command-line tool not built"); }

#endif

}  // namespace

int main() {
  std::signal(SIGPIPE, SIG_IGN);
  int failed = 0;
  const auto emit = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = verdict(false, std::string("exception: ") + e.what());
    }
    const char* tag = outcome.kind == Outcome::Kind::pass ? "PASS" : outcome.kind == Outcome::Kind::skip ? "SKIP" : "FAIL";
    if (outcome.kind == Outcome::Kind::fail) ++failed;
    std::cout << tag << "  " << name << ": " << outcome.detail << std::endl;
  };

  emit("metric-oracles", metric_oracles);
  emit("pooling-invariants", pooling_invariants);
  emit("active-learning-invariants", al_invariants);
  std::optional<SimulationRun> run;
  const auto simulation = [&]() -> const SimulationRun& {
    if (!run) run = run_default_simulation();
    return *run;
  };
  emit("headline-cal-cost-half", [&] { return headline(simulation()); });
  emit("auc-ordering", [&] { return auc_ordering(simulation()); });
  emit("aggregation-rules", aggregation_suite);
  emit("released-dataset", released_dataset);
  emit("service-crash-recovery", crash_recovery);
  return failed == 0 ? 0 : 1;
}
