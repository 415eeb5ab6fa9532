#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rarecorpus/error.hpp"
#include "rarecorpus/features.hpp"
#include "rarecorpus/metrics.hpp"
#include "rarecorpus/text.hpp"
#include "rarecorpus/simulation.hpp"

using namespace rarecorpus;

TEST_SUITE("simulation") {
  TEST_CASE("synthetic corpus has the requested shape") {
    SyntheticSpec spec;
    spec.n_docs = 500;
    spec.positive_rate = 0.05;
    spec.rng_seed = 9;
    const auto c = make_synthetic_corpus(spec);
    CHECK(c.size() == 500);
    CHECK(c.fully_labeled());
    std::size_t positives = 0;
    for (const auto& d : c) positives += is_hateful(*d.gold_label) ? 1 : 0;
    CHECK(positives == 25);
    CHECK(make_synthetic_corpus(spec) == c);
    spec.rng_seed = 10;
    CHECK_FALSE(make_synthetic_corpus(spec) == c);
    CHECK(SyntheticSpec::from_json(spec.to_json()).to_json() == spec.to_json());
    spec.min_length = 0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
  }

  TEST_CASE("curves start at the seed cost and end with everything judged") {
    SyntheticSpec corpus_spec;
    corpus_spec.n_docs = 150;
    corpus_spec.positive_rate = 0.1;
    const auto c = make_synthetic_corpus(corpus_spec);
    SimulationSpec spec;
    spec.repetitions = 2;
    spec.checkpoints = {0.5, 1.0};
    spec.seed_positives = 2;
    spec.seed_negatives = 3;
    spec.threads = 2;
    const auto result = simulate(c, spec);
    CHECK(result.curves.size() == 6);
    CHECK(result.points.size() == 18);
    for (std::size_t i = 0; i < result.points.size(); i += 3) {
      const auto& first = result.points[i];
      CHECK(first.judged == 5);
      CHECK(first.cost_fraction == doctest::Approx(5.0 / 150.0));
      CHECK(result.points[i + 1].judged == 75);
      const auto& last = result.points[i + 2];
      CHECK(last.judged == 150);
      CHECK(last.hate_found_fraction == 1.0);
      CHECK(last.f1_hybrid == 1.0);
    }
    // strategies share the seed set of each repetition
    CHECK(result.points[0].hate_found_fraction == result.points[6].hate_found_fraction);
    for (const auto& curve : result.curves) {
      CHECK(curve.auc_hate_found > 0.0);
      CHECK(curve.auc_hate_found < 1.0);
    }
    const auto again = simulate(c, spec);
    std::ostringstream a;
    std::ostringstream b;
    result.write_csv(a);
    again.write_csv(b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("strategy,feature_mode,seed,cost_fraction,f1_hybrid,hate_found_fraction\n", 0) == 0);
    CHECK(std::isnan(result.mean_at(Strategy::cal, FeatureMode::tfidf, 0.3, true)));
    CHECK(result.mean_at(Strategy::cal, FeatureMode::tfidf, 1.0, true) == 1.0);
  }

  TEST_CASE("label noise and validation") {
    SyntheticSpec corpus_spec;
    corpus_spec.n_docs = 100;
    corpus_spec.positive_rate = 0.1;
    const auto c = make_synthetic_corpus(corpus_spec);
    SimulationSpec spec;
    spec.repetitions = 1;
    spec.strategies = {Strategy::cal};
    spec.checkpoints = {1.0};
    spec.label_noise = 0.2;
    const auto noisy = simulate(c, spec);
    CHECK(noisy.points.back().judged == 100);
    spec.label_noise = 1.5;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.label_noise = 0.0;
    spec.checkpoints = {0.5, 0.2};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    CHECK(SimulationSpec::from_json(SimulationSpec{}.to_json()).to_json() == SimulationSpec{}.to_json());

    std::vector<Document> docs(c.begin(), c.end());
    docs[0].gold_label.reset();
    CHECK_THROWS_AS(simulate(DocumentCollection(docs), SimulationSpec{}), ValidationError);
  }

  TEST_CASE("zero signal gives identical class distributions") {
    SyntheticSpec spec;
    spec.signal_strength = 0.0;
    const auto c = make_synthetic_corpus(spec);
    std::set<std::string> positive_tokens;
    std::set<std::string> negative_tokens;
    for (const auto& d : c) {
      for (const auto& t : word_tokens(d.text)) (is_hateful(*d.gold_label) ? positive_tokens : negative_tokens).insert(t);
    }
    CHECK(negative_tokens.size() == spec.noise_terms);
    CHECK(std::includes(negative_tokens.begin(), negative_tokens.end(), positive_tokens.begin(), positive_tokens.end()));
  }

  TEST_CASE("default corpus is learnable") {
    const auto c = make_synthetic_corpus(SyntheticSpec{});
    std::vector<Label> y;
    for (const auto& d : c) y.push_back(*d.gold_label);
    const auto split = stratified_split(y, 0.2, 1);
    const auto learner = make_learner(c, FeatureMode::tfidf, TrainingConfig{});
    std::vector<Label> train_labels;
    for (auto i : split.train) train_labels.push_back(y[i]);
    const auto model = learner->fit(split.train, train_labels);
    std::size_t correct = 0;
    for (auto i : split.test) correct += (to_label(learner->score(*model, i) >= 0.5) == y[i]) ? 1 : 0;
    CHECK(static_cast<double>(correct) / static_cast<double>(split.test.size()) > 0.8);
  }

  TEST_CASE("CAL with a perfect scorer finds every positive first") {
    SyntheticSpec corpus_spec;
    corpus_spec.n_docs = 200;
    corpus_spec.positive_rate = 0.1;
    const auto c = make_synthetic_corpus(corpus_spec);
    std::string lines;
    for (const auto& d : c) {
      lines += nlohmann::json{{"doc_id", d.doc_id}, {"score", is_hateful(*d.gold_label) ? 0.9 : 0.1}}.dump() + "\n";
    }
    std::istringstream in(lines);
    FeatureSources sources;
    sources.external_scores = std::make_shared<const BinaryClassifier>(load_external_scores(in));
    SimulationSpec spec;
    spec.strategies = {Strategy::cal, Strategy::spl};
    spec.feature_modes = {FeatureMode::external_scores};
    spec.repetitions = 3;
    // 20 positives; the seeds hold 5 of them plus 5 negatives, so 25 judgments finish the job
    spec.checkpoints = {0.12, 0.125, 0.5, 1.0};
    const auto result = simulate(c, spec, sources);
    CHECK(result.mean_at(Strategy::cal, FeatureMode::external_scores, 0.12, true) < 1.0);
    CHECK(result.mean_at(Strategy::cal, FeatureMode::external_scores, 0.125, true) == 1.0);
    for (double cost : {0.12, 0.5}) {
      CHECK(result.mean_at(Strategy::cal, FeatureMode::external_scores, cost, true) >=
            result.mean_at(Strategy::spl, FeatureMode::external_scores, cost, true));
    }
    // found fraction never decreases along a run
    for (std::size_t i = 1; i < result.points.size(); ++i) {
      const auto& a = result.points[i - 1];
      const auto& b = result.points[i];
      if (a.strategy == b.strategy && a.seed == b.seed) CHECK(b.hate_found_fraction >= a.hate_found_fraction);
    }
  }
}
