#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <unordered_map>

#include "helpers.hpp"
#include "rarecorpus/error.hpp"
#include "rarecorpus/pooling.hpp"

using namespace rarecorpus;

namespace {

struct Instance {
  DocumentCollection collection;
  std::vector<PoolModel> models;
  std::vector<std::unordered_map<std::string, std::optional<double>>> tables;
};

Instance random_instance(std::mt19937_64& rng) {
  const std::size_t n = 1 + rng() % 60;
  const std::size_t m = 1 + rng() % 4;
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(testutil::doc("d" + std::to_string(i), "text " + std::to_string(i)));
  Instance inst{DocumentCollection(std::move(docs)), {}, {}};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  inst.tables.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    for (const auto& d : inst.collection) {
      // a few unscorable documents, and some scores exactly on a grid so ties with t occur
      const auto roll = rng() % 10;
      if (roll == 0) {
        inst.tables[k][d.doc_id] = std::nullopt;
      } else if (roll < 3) {
        inst.tables[k][d.doc_id] = static_cast<double>(rng() % 11) / 10.0;
      } else {
        inst.tables[k][d.doc_id] = unit(rng);
      }
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    const auto* table = &inst.tables[k];
    inst.models.push_back({"m" + std::to_string(k), [table](const Document& d) { return table->at(d.doc_id); }});
  }
  return inst;
}

std::set<std::string> brute_force_candidates(const Instance& inst, double t) {
  std::set<std::string> s;
  for (const auto& d : inst.collection) {
    for (const auto& table : inst.tables) {
      const auto score = table.at(d.doc_id);
      if (score && *score >= t) s.insert(d.doc_id);
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("pooling") {
  TEST_CASE("pool invariants over random instances") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t cases = 1200;
    for (std::size_t c = 0; c < cases; ++c) {
      const auto inst = random_instance(rng);
      PoolConfig config;
      config.threshold = (rng() % 3 == 0) ? static_cast<double>(rng() % 11) / 10.0 : unit(rng);
      config.budget = 1 + rng() % 70;
      config.rng_seed = rng();
      const auto result = build_pool(inst.collection, inst.models, config);
      const auto s = brute_force_candidates(inst, config.threshold);

      // membership and size
      CHECK(result.candidate_count == s.size());
      CHECK(result.selected.size() == std::min(config.budget, s.size()));
      std::set<std::string> unique(result.selected.begin(), result.selected.end());
      CHECK(unique.size() == result.selected.size());
      for (const auto& id : result.selected) CHECK(s.contains(id));
      if (s.empty()) CHECK_FALSE(result.diagnostic.empty());

      // seed determinism
      const auto again = build_pool(inst.collection, inst.models, config);
      CHECK(again.selected == result.selected);

      // raising the threshold never grows the candidate set
      PoolConfig higher = config;
      higher.threshold = std::min(1.0, config.threshold + unit(rng) * (1.0 - config.threshold));
      const auto narrowed = build_pool(inst.collection, inst.models, higher);
      const auto s_high = brute_force_candidates(inst, higher.threshold);
      CHECK(narrowed.candidate_count <= result.candidate_count);
      CHECK(std::includes(s.begin(), s.end(), s_high.begin(), s_high.end()));
      CHECK(narrowed.selected.size() <= std::max(result.selected.size(), std::min(config.budget, s_high.size())));

      // per-model statistics
      for (std::size_t k = 0; k < inst.models.size(); ++k) {
        std::size_t hits = 0;
        std::size_t unscored = 0;
        for (const auto& [id, score] : inst.tables[k]) {
          if (!score) ++unscored;
          else if (*score >= config.threshold) ++hits;
        }
        CHECK(result.per_model_hit_counts[k] == hits);
        CHECK(result.per_model_unscored[k] == unscored);
        CHECK(result.overlap[k][k] == hits);
      }
    }
  }

  TEST_CASE("different seeds sample different pools") {
    std::vector<Document> docs;
    for (int i = 0; i < 100; ++i) docs.push_back(testutil::doc("d" + std::to_string(i), "t" + std::to_string(i)));
    DocumentCollection collection(std::move(docs));
    std::vector<PoolModel> models{{"all", [](const Document&) { return std::optional<double>(0.9); }}};
    PoolConfig a;
    a.budget = 10;
    a.rng_seed = 1;
    PoolConfig b = a;
    b.rng_seed = 2;
    CHECK(build_pool(collection, models, a).selected != build_pool(collection, models, b).selected);
  }

  TEST_CASE("configuration is validated") {
    PoolConfig config;
    config.threshold = 1.5;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.threshold = 0.5;
    config.budget = 0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
  }

  TEST_CASE("trained ensemble members and the lexicon summary") {
    std::vector<Document> prior_docs;
    for (int i = 0; i < 20; ++i) {
      const bool hateful = i % 2 == 0;
      prior_docs.push_back(testutil::doc("p" + std::to_string(i),
                                         (hateful ? "vile scum number " : "lovely sunny number ") + std::to_string(i),
                                         to_label(hateful)));
    }
    std::vector<PriorDataset> datasets{{"prior", DocumentCollection(prior_docs)}};
    VocabularyOptions vocab;
    vocab.orders = {1};
    const auto models = train_pool_models(
        datasets, {ClassifierKind::logistic_regression, ClassifierKind::naive_bayes}, vocab, TrainingConfig{});
    REQUIRE(models.size() == 2);
    DocumentCollection target({testutil::doc("a", "vile scum everywhere"), testutil::doc("b", "a lovely sunny day"),
                               testutil::doc("c", "scum")});
    PoolConfig config;
    config.budget = 5;
    const auto result = build_pool(target, models, config);
    CHECK(std::find(result.selected.begin(), result.selected.end(), "a") != result.selected.end());
    CHECK(std::find(result.selected.begin(), result.selected.end(), "b") == result.selected.end());
    const auto summary = stratify_report(result, target, HateLexicon({"scum"}));
    CHECK(summary.selected_count == result.selected.size());
    CHECK(summary.selected_with_lexicon == summary.selected_count);
    CHECK(summary.lexicon_fraction == 1.0);
  }
}
