// rarecorpus: command-line front end.

#include <algorithm>
#include <csignal>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "json_config.hpp"
#include "output_file.hpp"
#include "rarecorpus/active_learning.hpp"
#include "rarecorpus/annotation.hpp"
#include "rarecorpus/corpus.hpp"
#include "rarecorpus/error.hpp"
#include "rarecorpus/features.hpp"
#include "rarecorpus/http_service.hpp"
#include "rarecorpus/metrics.hpp"
#include "rarecorpus/models.hpp"
#include "rarecorpus/pooling.hpp"
#include "rarecorpus/session.hpp"
#include "rarecorpus/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rarecorpus;
using rarecorpus::cli::OutputFile;

namespace {

// ---------------------------------------------------------------------------
// Run manifest

json echo_options(const CLI::App& app) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options({})) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (const auto d = opt->get_default_str(); !d.empty()) {
      if (d.size() >= 2 && d.front() == '[' && d.back() == ']') {
        j[name] = CLI::detail::split(d.substr(1, d.size() - 2), ',');
      } else {
        j[name] = d;
      }
    }
  }
  if (const CLI::App* root = app.get_parent()) {
    const CLI::Option* config = root->get_option_no_throw("--config");
    if (config && config->count() > 0) j["config"] = config->as<std::string>();
  }
  return j;
}

class Manifest {
 public:
  explicit Manifest(const CLI::App& app) : command_(app.get_name()), config_(echo_options(app)) {
    if (config_.contains("config")) inputs_.push_back(config_["config"]);
  }

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const fs::path& primary) const {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json j = {{"command", command_},
              {"config", config_},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"rng_seeds", seeds_},
              {"toolkit_version", RARECORPUS_VERSION},
              {"wall_clock_seconds", seconds}};
    if (!extra_.empty()) j["details"] = extra_;
    OutputFile out(primary.string() + ".manifest.json");
    out.stream() << j.dump(2) << '\n';
    out.commit();
  }

 private:
  std::string command_;
  json config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  json seeds_ = json::object();
  json extra_ = json::object();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Helpers

std::pair<std::string, std::string> split_named(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Annotation> read_annotations(const std::string& path) {
  std::vector<Annotation> out;
  for (const auto& j : read_jsonl(path)) {
    if (j.contains("type") && j.at("type") != "annotation") continue;  // session exports mix record types
    out.push_back(Annotation::from_json(j));
  }
  return out;
}

void write_json_file(const fs::path& path, const json& j) {
  OutputFile out(path);
  out.stream() << j.dump(2) << '\n';
  out.commit();
}

template <typename T>
std::vector<T> parse_list(const std::vector<std::string>& names, T (*parse)(std::string_view)) {
  std::vector<T> out;
  for (const auto& n : names) {
    std::stringstream ss(n);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(parse(part));
    }
  }
  return out;
}

FeatureSources load_sources(const std::string& embeddings, std::size_t embedding_dim, const std::string& external,
                            std::unordered_map<std::string, FeatureVector>& embedding_store) {
  FeatureSources sources;
  if (!embeddings.empty()) {
    if (embedding_dim == 0) throw ValidationError("--embedding-dim is required with --embeddings");
    embedding_store = load_embeddings(embeddings, embedding_dim);
    sources.embeddings = &embedding_store;
  }
  if (!external.empty()) sources.external_scores = std::make_shared<const BinaryClassifier>(load_external_scores(external));
  return sources;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  std::string input;
  std::string output;
  std::string report;
  std::string source_note;
  bool keep_retweets = false;
};

void run_ingest(const CLI::App& app, const IngestOptions& o) {
  Manifest manifest(app);
  std::ifstream in(o.input);
  if (!in) throw ValidationError("cannot open " + o.input);
  CleaningConfig cleaning;
  cleaning.drop_retweets = !o.keep_retweets;
  const auto result = ingest(in, cleaning, o.source_note.empty() ? o.input : o.source_note);
  const auto& r = result.report;
  const json report = {{"records", r.records},         {"accepted", r.accepted}, {"malformed", r.malformed},
                       {"empty", r.empty},             {"duplicate", r.duplicate}, {"duplicate_id", r.duplicate_id},
                       {"filtered", r.filtered},       {"retweets", r.retweets}};
  OutputFile out(o.output);
  write_collection(out.stream(), result.collection);
  out.commit();
  manifest.input(o.input);
  manifest.output(o.output);
  if (!o.report.empty()) {
    write_json_file(o.report, report);
    manifest.output(o.report);
  }
  manifest.note("report", report);
  manifest.write(o.output);
  std::cout << report.dump() << '\n';
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string output;
  SyntheticSpec spec;
};

void run_synth(const CLI::App& app, const SynthOptions& o) {
  Manifest manifest(app);
  const auto collection = make_synthetic_corpus(o.spec);
  OutputFile out(o.output);
  write_collection(out.stream(), collection);
  out.commit();
  manifest.output(o.output);
  manifest.seed("corpus", o.spec.rng_seed);
  manifest.note("synthetic_spec", o.spec.to_json());
  manifest.write(o.output);
}

// ---------------------------------------------------------------------------
// pool

struct PoolOptions {
  std::string collection;
  std::vector<std::string> priors;
  std::vector<std::string> classifiers{"lr", "nb"};
  std::vector<std::string> external;
  std::vector<int> orders{1, 2, 3};
  bool no_stem = false;
  PoolConfig pool;
  std::string output;
  std::string report;
  std::string lexicon;
  TrainingConfig training;
};

void run_pool(const CLI::App& app, const PoolOptions& o) {
  Manifest manifest(app);
  const auto collection = read_collection(o.collection);
  manifest.input(o.collection);

  std::vector<PriorDataset> datasets;
  for (const auto& spec : o.priors) {
    auto [name, path] = split_named(spec);
    datasets.push_back({name, read_collection(path)});
    manifest.input(path);
  }
  VocabularyOptions vocab;
  vocab.orders = o.orders;
  vocab.stem = !o.no_stem;
  std::vector<PoolModel> models;
  if (!datasets.empty()) {
    models = train_pool_models(datasets, parse_list<ClassifierKind>(o.classifiers, parse_classifier_kind), vocab, o.training);
  }
  for (const auto& spec : o.external) {
    auto [name, path] = split_named(spec);
    models.push_back(make_external_pool_model(name, std::make_shared<const BinaryClassifier>(load_external_scores(path))));
    manifest.input(path);
  }
  if (models.empty()) throw ValidationError("pool needs at least one --prior or --external model");

  const auto result = build_pool(collection, models, o.pool);
  std::vector<Document> selected;
  for (const auto& id : result.selected) selected.push_back(collection.by_id(id));
  OutputFile out(o.output);
  write_collection(out.stream(), DocumentCollection(std::move(selected)));
  out.commit();
  manifest.output(o.output);
  manifest.seed("pool", o.pool.rng_seed);

  json report = {{"selected", result.selected.size()},
                 {"candidate_count", result.candidate_count},
                 {"models", result.model_names},
                 {"per_model_hit_counts", result.per_model_hit_counts},
                 {"per_model_unscored", result.per_model_unscored},
                 {"overlap", result.overlap},
                 {"config", o.pool.to_json()}};
  if (!result.diagnostic.empty()) report["diagnostic"] = result.diagnostic;
  if (!o.lexicon.empty()) {
    report["lexicon_summary"] = stratify_report(result, collection, HateLexicon::load(o.lexicon)).to_json();
    manifest.input(o.lexicon);
  }
  if (!o.report.empty()) {
    write_json_file(o.report, report);
    manifest.output(o.report);
  }
  manifest.write(o.output);
  std::cout << report.dump() << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string collection;
  std::vector<std::string> strategies{"SPL", "SAL", "CAL"};
  std::vector<std::string> feature_modes{"tfidf"};
  SimulationSpec spec;
  std::string embeddings;
  std::size_t embedding_dim = 0;
  std::string external_scores;
  std::string curves;
  std::string auc;
};

void run_simulate(const CLI::App& app, SimulateOptions o) {
  Manifest manifest(app);
  const auto collection = read_collection(o.collection);
  manifest.input(o.collection);
  o.spec.strategies = parse_list<Strategy>(o.strategies, parse_strategy);
  o.spec.feature_modes = parse_list<FeatureMode>(o.feature_modes, parse_feature_mode);
  std::unordered_map<std::string, FeatureVector> embedding_store;
  const auto sources = load_sources(o.embeddings, o.embedding_dim, o.external_scores, embedding_store);
  if (!o.embeddings.empty()) manifest.input(o.embeddings);
  if (!o.external_scores.empty()) manifest.input(o.external_scores);

  const auto result = simulate(collection, o.spec, sources);
  OutputFile curves(o.curves);
  result.write_csv(curves.stream());
  curves.commit();
  write_json_file(o.auc, result.auc_summary());
  manifest.output(o.curves);
  manifest.output(o.auc);
  for (std::size_t r = 0; r < o.spec.repetitions; ++r) manifest.seed("repetition_" + std::to_string(r), o.spec.base_seed + r);
  manifest.note("simulation_spec", o.spec.to_json());
  manifest.write(o.curves);
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateOptions_ {
  std::string collection;
  std::string annotations;
  std::string output;
  std::string report;
  std::size_t raters = 0;
  bool strict = false;
};

void run_aggregate(const CLI::App& app, const AggregateOptions_& o) {
  Manifest manifest(app);
  const auto collection = read_collection(o.collection);
  const auto annotations = read_annotations(o.annotations);
  manifest.input(o.collection);
  manifest.input(o.annotations);

  std::map<std::string, std::vector<Annotation>> by_doc;
  for (const auto& a : annotations) {
    validate_spans(a, collection.by_id(a.doc_id).text);
    by_doc[a.doc_id].push_back(a);
  }
  std::vector<AggregatedLabel> labels;
  std::size_t skipped = 0;
  for (const auto& doc : collection) {
    const auto it = by_doc.find(doc.doc_id);
    if (it == by_doc.end()) continue;
    if (o.raters != 0 && it->second.size() != o.raters) {
      ++skipped;
      continue;
    }
    labels.push_back(aggregate(doc, it->second, {o.strict}));
  }
  const auto partition = filter_consistent(labels);
  const auto counts = consistency_counts(annotations);

  OutputFile out(o.output);
  for (const auto& l : labels) out.stream() << l.to_json().dump() << '\n';
  out.commit();
  manifest.output(o.output);

  json discarded = json::array();
  for (const auto& l : partition.discarded) discarded.push_back(l.doc_id);
  const json report = {{"documents", labels.size()},
                       {"kept", partition.kept.size()},
                       {"discarded", partition.discarded.size()},
                       {"discarded_doc_ids", discarded},
                       {"skipped_wrong_rater_count", skipped},
                       {"annotations", counts.annotations},
                       {"self_consistent_annotations", counts.consistent_annotations},
                       {"strict_consistency", o.strict}};
  if (!o.report.empty()) {
    write_json_file(o.report, report);
    manifest.output(o.report);
  }
  manifest.write(o.output);
  std::cout << report.dump() << '\n';
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsOptions {
  std::string collection;
  std::string labels;
  bool include_inconsistent = false;
  std::string annotations;
  std::size_t raters = 3;
  std::string agreement_table;
  std::string lexicon;
  bool coverage_of_total = false;
  std::string predictions;
  std::string output;
};

json agreement_json(const AgreementTable& table) {
  return {{"items", table.items()},
          {"raters", table.raters()},
          {"categories", table.categories()},
          {"raw_agreement", raw_agreement(table)},
          {"fleiss_kappa", fleiss_kappa(table)},
          {"gwet_ac1", gwet_ac1(table)}};
}

void run_metrics(const CLI::App& app, const MetricsOptions& o) {
  Manifest manifest(app);
  json report = json::object();

  if (!o.agreement_table.empty()) {
    std::ifstream in(o.agreement_table);
    if (!in) throw ValidationError("cannot open " + o.agreement_table);
    json j;
    in >> j;
    report["agreement_table"] = agreement_json(AgreementTable(j.at("counts").get<std::vector<std::vector<std::size_t>>>()));
    manifest.input(o.agreement_table);
  }

  std::optional<DocumentCollection> collection;
  if (!o.collection.empty()) {
    collection = read_collection(o.collection);
    manifest.input(o.collection);
  }
  std::optional<HateLexicon> lexicon;
  if (!o.lexicon.empty()) {
    lexicon = HateLexicon::load(o.lexicon);
    manifest.input(o.lexicon);
  }

  // Final labels: aggregated labels when given, else gold labels.
  std::vector<std::pair<const Document*, Label>> labeled;
  if (collection) {
    if (!o.labels.empty()) {
      manifest.input(o.labels);
      std::size_t discarded = 0;
      for (const auto& j : read_jsonl(o.labels)) {
        const auto l = AggregatedLabel::from_json(j);
        if (!l.consistent && !o.include_inconsistent) {
          ++discarded;
          continue;
        }
        labeled.emplace_back(&collection->by_id(l.doc_id), l.final_label);
      }
      report["discarded_inconsistent"] = discarded;
    } else {
      for (const auto& doc : *collection) {
        if (doc.gold_label) labeled.emplace_back(&doc, *doc.gold_label);
      }
    }
    report["labeled_documents"] = labeled.size();
    if (!labeled.empty()) {
      std::vector<Label> labels;
      for (const auto& [doc, label] : labeled) labels.push_back(label);
      report["prevalence"] = prevalence(labels);
    }
    if (lexicon && !labeled.empty()) {
      std::size_t hateful = 0;
      std::size_t with_lexicon = 0;
      for (const auto& [doc, label] : labeled) {
        if (!is_hateful(label)) continue;
        ++hateful;
        with_lexicon += contains_hate_word(*doc, *lexicon) ? 1 : 0;
      }
      json coverage = {{"hateful", hateful}, {"hateful_with_lexicon", with_lexicon}};
      if (with_lexicon > 0) coverage["formula"] = relative_coverage(hateful, with_lexicon);
      if (hateful > 0) coverage["of_total"] = relative_coverage_of_total(hateful, with_lexicon);
      coverage["definition"] = o.coverage_of_total ? "of_total" : "formula";
      report["relative_coverage"] = coverage.value(o.coverage_of_total ? "of_total" : "formula", json(nullptr));
      report["relative_coverage_detail"] = coverage;
    }
  }

  if (!o.annotations.empty()) {
    const auto annotations = read_annotations(o.annotations);
    manifest.input(o.annotations);
    report["final_judgment_agreement"] = agreement_json(final_judgment_table(annotations, o.raters));
    const auto counts = consistency_counts(annotations);
    report["self_consistency"] = {{"annotations", counts.annotations},
                                  {"consistent_annotations", counts.consistent_annotations},
                                  {"documents", counts.documents},
                                  {"documents_all_consistent", counts.consistent_documents}};
    if (collection) {
      json rationale = json::object();
      for (auto [name, field] : {std::pair{"violence", RationaleField::violence},
                                 std::pair{"derogatory", RationaleField::derogatory},
                                 std::pair{"target", RationaleField::target}}) {
        try {
          rationale[name] = agreement_json(rationale_agreement_table(*collection, annotations, field, o.raters));
        } catch (const ValidationError&) {
          rationale[name] = nullptr;  // no documents with the requested rater count
        }
      }
      report["rationale_agreement"] = rationale;
    }
  }

  if (!o.predictions.empty()) {
    if (!collection) throw ValidationError("--predictions needs --collection for gold labels");
    manifest.input(o.predictions);
    std::vector<const Document*> docs;
    std::vector<Label> predicted;
    for (const auto& j : read_jsonl(o.predictions)) {
      const auto& doc = collection->by_id(j.at("doc_id").get<std::string>());
      if (!doc.gold_label) throw ValidationError("prediction for unlabeled document " + doc.doc_id);
      docs.push_back(&doc);
      if (j.contains("label")) {
        const auto& v = j.at("label");
        predicted.push_back(v.is_string() ? parse_label(v.get<std::string>()).value() : to_label(v.get<int>() == 1));
      } else {
        predicted.push_back(to_label(j.at("score").get<double>() >= 0.5));
      }
    }
    const auto evaluate = [&](const std::vector<std::size_t>& rows) {
      std::vector<Label> p;
      std::vector<Label> g;
      for (auto r : rows) {
        p.push_back(predicted[r]);
        g.push_back(*docs[r]->gold_label);
      }
      return json{{"documents", rows.size()},
                  {"hateful", class_metrics(p, g, Label::hateful).to_json()},
                  {"non_hateful", class_metrics(p, g, Label::non_hateful).to_json()}};
    };
    std::vector<std::size_t> all(docs.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    json classification = {{"all", evaluate(all)}};
    if (lexicon) {
      std::vector<Document> plain;
      for (const auto* d : docs) plain.push_back(*d);
      const auto parts = partition_by_lexicon(plain, *lexicon);
      classification["without_hate_words"] = evaluate(parts.without_hate_words);
      classification["with_hate_words"] = evaluate(parts.with_hate_words);
    }
    report["classification"] = classification;
  }

  write_json_file(o.output, report);
  manifest.output(o.output);
  manifest.write(o.output);
  std::cout << report.dump() << '\n';
}

// ---------------------------------------------------------------------------
// serve

struct ServeOptions {
  std::vector<std::string> collections;
  std::string log_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string port_file;
  std::string embeddings;
  std::size_t embedding_dim = 0;
  std::string external_scores;
};

void run_serve(const CLI::App& app, const ServeOptions& o) {
  Manifest manifest(app);
  // Handle SIGINT/SIGTERM on a dedicated thread so the server can stop cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::map<std::string, std::shared_ptr<const DocumentCollection>> collections;
  for (const auto& spec : o.collections) {
    auto [name, path] = split_named(spec);
    collections.emplace(name, std::make_shared<const DocumentCollection>(read_collection(path)));
    manifest.input(path);
  }
  std::unordered_map<std::string, FeatureVector> embedding_store;
  const auto sources = load_sources(o.embeddings, o.embedding_dim, o.external_scores, embedding_store);

  SessionManager manager(o.log_dir, collections, sources);
  const auto recovered = manager.recover();
  HttpService service(manager);
  const int port = service.bind(o.host, o.port);
  if (port < 0) throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
  if (!o.port_file.empty()) {
    OutputFile out(o.port_file);
    out.stream() << port << '\n';
    out.commit();
  }
  manifest.output(o.log_dir);
  manifest.note("port", port);
  manifest.note("recovered_sessions", recovered);
  manifest.write(fs::path(o.log_dir) / "serve");
  std::cerr << "rarecorpus: serving on " << o.host << ':' << port << " (" << recovered << " sessions recovered)\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-class corpus construction: ingest, pooling, active learning, annotation and evaluation"};
  app.set_version_flag("--version", std::string(RARECORPUS_VERSION));
  app.require_subcommand(1);
  // --config may follow the subcommand name; its keys fill that subcommand's options.
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<rarecorpus::cli::JsonConfig>([&app] {
    const auto selected = app.get_subcommands();
    return selected.empty() ? std::string() : selected.front()->get_name();
  }));
  app.set_config("--config", "", "JSON file of subcommand option values; command-line flags take precedence");
  const auto add_command = [&](const std::string& name, const std::string& description) {
    return app.add_subcommand(name, description);
  };

  IngestOptions ingest_o;
  auto* ingest_cmd = add_command("ingest", "Clean and deduplicate raw posts into a collection");
  ingest_cmd->add_option("--input", ingest_o.input, "Raw posts, JSON Lines")->required();
  ingest_cmd->add_option("--output", ingest_o.output, "Collection output, JSON Lines")->required();
  ingest_cmd->add_option("--report", ingest_o.report, "Rejection counts, JSON");
  ingest_cmd->add_option("--source-note", ingest_o.source_note, "Provenance note");
  ingest_cmd->add_flag("--keep-retweets", ingest_o.keep_retweets, "Keep posts starting with RT");

  SynthOptions synth_o;
  auto* synth_cmd = add_command("synth", "Write a synthetic labeled collection");
  synth_cmd->add_option("--output", synth_o.output, "Collection output, JSON Lines")->required();
  synth_cmd->add_option("--docs", synth_o.spec.n_docs, "Number of documents")->capture_default_str();
  synth_cmd->add_option("--positive-rate", synth_o.spec.positive_rate, "Share of hateful documents")->capture_default_str();
  synth_cmd->add_option("--signal", synth_o.spec.signal_strength, "Per-token indicative probability")->capture_default_str();
  synth_cmd->add_option("--leak", synth_o.spec.negative_leak, "Signal multiplier for negatives")->capture_default_str();
  synth_cmd->add_option("--min-indicative", synth_o.spec.min_indicative, "Guaranteed indicative tokens per positive")->capture_default_str();
  synth_cmd->add_option("--indicative-terms", synth_o.spec.indicative_terms, "Indicative vocabulary size")->capture_default_str();
  synth_cmd->add_option("--noise-terms", synth_o.spec.noise_terms, "Shared vocabulary size")->capture_default_str();
  synth_cmd->add_option("--min-length", synth_o.spec.min_length, "Minimum tokens per document")->capture_default_str();
  synth_cmd->add_option("--max-length", synth_o.spec.max_length, "Maximum tokens per document")->capture_default_str();
  synth_cmd->add_option("--seed", synth_o.spec.rng_seed, "Random seed")->capture_default_str();

  PoolOptions pool_o;
  auto* pool_cmd = add_command("pool", "Select documents to annotate with an ensemble of prior models");
  pool_cmd->add_option("--collection", pool_o.collection, "Collection to select from")->required();
  pool_cmd->add_option("--prior", pool_o.priors, "Labeled prior dataset, NAME=PATH (repeatable)");
  pool_cmd->add_option("--classifier", pool_o.classifiers, "Classifier kinds trained per prior: lr, nb")->capture_default_str();
  pool_cmd->add_option("--external", pool_o.external, "External score file, NAME=PATH (repeatable)");
  pool_cmd->add_option("--orders", pool_o.orders, "N-gram orders")->capture_default_str();
  pool_cmd->add_flag("--no-stem", pool_o.no_stem, "Disable Porter stemming");
  pool_cmd->add_option("--threshold", pool_o.pool.threshold, "Score threshold t")->capture_default_str();
  pool_cmd->add_option("--budget", pool_o.pool.budget, "Pool size b")->required();
  pool_cmd->add_option("--seed", pool_o.pool.rng_seed, "Sampling seed")->capture_default_str();
  pool_cmd->add_option("--lexicon", pool_o.lexicon, "Hate lexicon for the selection summary");
  pool_cmd->add_option("--output", pool_o.output, "Selected documents, JSON Lines")->required();
  pool_cmd->add_option("--report", pool_o.report, "Pool statistics, JSON");

  SimulateOptions sim_o;
  auto* sim_cmd = add_command("simulate", "Retrospective active-learning runs with a gold-label oracle");
  sim_cmd->add_option("--collection", sim_o.collection, "Gold-labeled collection")->required();
  sim_cmd->add_option("--strategies", sim_o.strategies, "SPL, SAL, CAL")->capture_default_str();
  sim_cmd->add_option("--feature-modes", sim_o.feature_modes, "tfidf, embedding, external")->capture_default_str();
  sim_cmd->add_option("--checkpoints", sim_o.spec.checkpoints, "Cost fractions to sample")->capture_default_str();
  sim_cmd->add_option("--repetitions", sim_o.spec.repetitions, "Seeds per strategy")->capture_default_str();
  sim_cmd->add_option("--seed", sim_o.spec.base_seed, "First seed")->capture_default_str();
  sim_cmd->add_option("--batch-size", sim_o.spec.al_template.batch_size, "Documents per iteration u")->capture_default_str();
  sim_cmd->add_option("--seed-positives", sim_o.spec.seed_positives, "Hateful seed documents")->capture_default_str();
  sim_cmd->add_option("--seed-negatives", sim_o.spec.seed_negatives, "Non-hateful seed documents")->capture_default_str();
  sim_cmd->add_option("--label-noise", sim_o.spec.label_noise, "Oracle flip probability")->capture_default_str();
  sim_cmd->add_option("--threads", sim_o.spec.threads, "Worker threads, 0 for all cores")->capture_default_str();
  sim_cmd->add_option("--learning-rate", sim_o.spec.al_template.training.learning_rate, "LR step size")->capture_default_str();
  sim_cmd->add_option("--epochs", sim_o.spec.al_template.training.epochs, "LR epochs")->capture_default_str();
  sim_cmd->add_option("--l2", sim_o.spec.al_template.training.l2_lambda, "LR L2 penalty")->capture_default_str();
  sim_cmd->add_option("--embeddings", sim_o.embeddings, "Embedding file, JSON Lines");
  sim_cmd->add_option("--embedding-dim", sim_o.embedding_dim, "Embedding dimension");
  sim_cmd->add_option("--external-scores", sim_o.external_scores, "External score file, JSON Lines");
  sim_cmd->add_option("--curves", sim_o.curves, "Curve points, CSV")->required();
  sim_cmd->add_option("--auc", sim_o.auc, "AUC summary, JSON")->required();

  AggregateOptions_ agg_o;
  auto* agg_cmd = add_command("aggregate", "Majority-vote annotations into per-document labels");
  agg_cmd->add_option("--collection", agg_o.collection, "Annotated collection")->required();
  agg_cmd->add_option("--annotations", agg_o.annotations, "Annotations, JSON Lines")->required();
  agg_cmd->add_option("--output", agg_o.output, "Aggregated labels, JSON Lines")->required();
  agg_cmd->add_option("--report", agg_o.report, "Discard report, JSON");
  agg_cmd->add_option("--raters", agg_o.raters, "Only aggregate documents with exactly this many annotators (0: any)")->capture_default_str();
  agg_cmd->add_flag("--strict", agg_o.strict, "Any self-inconsistent annotator discards the document");

  MetricsOptions met_o;
  auto* met_cmd = add_command("metrics", "Prevalence, coverage, agreement and classification report");
  met_cmd->add_option("--collection", met_o.collection, "Collection with gold labels");
  met_cmd->add_option("--labels", met_o.labels, "Aggregated labels, JSON Lines (default: gold labels)");
  met_cmd->add_flag("--include-inconsistent", met_o.include_inconsistent, "Keep inconsistent aggregated labels");
  met_cmd->add_option("--annotations", met_o.annotations, "Annotations for agreement, JSON Lines");
  met_cmd->add_option("--raters", met_o.raters, "Annotators per document for agreement tables")->capture_default_str();
  met_cmd->add_option("--agreement-table", met_o.agreement_table, "JSON {\"counts\": [[...], ...]} item x category table");
  met_cmd->add_option("--lexicon", met_o.lexicon, "Hate lexicon, one term per line");
  met_cmd->add_flag("--coverage-of-total", met_o.coverage_of_total, "Report coverage relative to all hateful posts");
  met_cmd->add_option("--predictions", met_o.predictions, "Model predictions, JSON Lines {doc_id, label|score}");
  met_cmd->add_option("--output", met_o.output, "Report, JSON")->required();

  ServeOptions serve_o;
  auto* serve_cmd = add_command("serve", "Run the annotation session service");
  serve_cmd->add_option("--collection", serve_o.collections, "Collection, NAME=PATH or PATH (repeatable)")->required();
  serve_cmd->add_option("--log-dir", serve_o.log_dir, "Event log directory")->required();
  serve_cmd->add_option("--host", serve_o.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve_o.port, "Port, 0 for any free port")->capture_default_str();
  serve_cmd->add_option("--port-file", serve_o.port_file, "Write the bound port here");
  serve_cmd->add_option("--embeddings", serve_o.embeddings, "Embedding file, JSON Lines");
  serve_cmd->add_option("--embedding-dim", serve_o.embedding_dim, "Embedding dimension");
  serve_cmd->add_option("--external-scores", serve_o.external_scores, "External score file, JSON Lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest_cmd) run_ingest(*ingest_cmd, ingest_o);
    if (*synth_cmd) run_synth(*synth_cmd, synth_o);
    if (*pool_cmd) run_pool(*pool_cmd, pool_o);
    if (*sim_cmd) run_simulate(*sim_cmd, sim_o);
    if (*agg_cmd) run_aggregate(*agg_cmd, agg_o);
    if (*met_cmd) run_metrics(*met_cmd, met_o);
    if (*serve_cmd) run_serve(*serve_cmd, serve_o);
  } catch (const std::exception& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::cerr << "rarecorpus: error: " << message << '\n';
    return 1;
  }
  return 0;
}
