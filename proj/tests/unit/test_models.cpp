#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rarecorpus/error.hpp"
#include "rarecorpus/models.hpp"

using namespace rarecorpus;

namespace {

std::vector<std::pair<FeatureVector, Label>> one_hot_pair() {
  return {{FeatureVector::sparse(2, {0}, {1.0}), Label::hateful}, {FeatureVector::sparse(2, {1}, {1.0}), Label::non_hateful}};
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("logistic regression matches hand-rolled gradient descent") {
    const auto model = train(ClassifierKind::logistic_regression, one_hot_pair(), TrainingConfig{});
    const auto& p = std::get<LogisticParameters>(model.parameters());
    CHECK(std::abs(p.weights[0] - 1.5072977912786842) < 1e-9);
    CHECK(std::abs(p.weights[1] + 1.5072977912786845) < 1e-9);
    CHECK(std::abs(p.bias) < 1e-9);
    CHECK(std::abs(model.predict(FeatureVector::sparse(2, {0}, {1.0})) - 0.81866039433588711) < 1e-9);
    CHECK(std::abs(model.predict(FeatureVector::sparse(2, {1}, {1.0})) - 0.18133960566411289) < 1e-9);
  }

  TEST_CASE("training loss decreases monotonically") {
    const auto data = one_hot_pair();
    std::vector<LabeledExample> examples;
    for (const auto& [x, y] : data) examples.push_back({&x, y});
    LogisticParameters params{{0.0, 0.0}, 0.0};
    double previous = logistic_loss(params, examples, 1e-4);
    std::vector<double> gw;
    double gb = 0.0;
    for (int epoch = 0; epoch < 100; ++epoch) {
      logistic_gradient(params, examples, 1e-4, gw, gb);
      for (std::size_t j = 0; j < gw.size(); ++j) params.weights[j] -= 0.1 * gw[j];
      params.bias -= 0.1 * gb;
      const double loss = logistic_loss(params, examples, 1e-4);
      CHECK(loss <= previous);
      previous = loss;
    }
  }

  TEST_CASE("gradient agrees with central finite differences") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t dim = 6;
      std::vector<FeatureVector> xs;
      std::vector<LabeledExample> examples;
      for (int i = 0; i < 8; ++i) {
        std::vector<std::uint32_t> idx;
        std::vector<double> vals;
        for (std::uint32_t j = 0; j < dim; ++j) {
          if (rng() % 2 == 0) {
            idx.push_back(j);
            vals.push_back(unit(rng));
          }
        }
        xs.push_back(FeatureVector::sparse(dim, idx, vals));
      }
      for (std::size_t i = 0; i < xs.size(); ++i) examples.push_back({&xs[i], to_label(i % 3 == 0)});
      LogisticParameters params;
      for (std::size_t j = 0; j < dim; ++j) params.weights.push_back(unit(rng));
      params.bias = unit(rng);
      const double lambda = 0.01;
      std::vector<double> gw;
      double gb = 0.0;
      logistic_gradient(params, examples, lambda, gw, gb);
      const double h = 1e-6;
      for (std::size_t j = 0; j <= dim; ++j) {
        auto plus = params;
        auto minus = params;
        double& up = j < dim ? plus.weights[j] : plus.bias;
        double& down = j < dim ? minus.weights[j] : minus.bias;
        up += h;
        down -= h;
        const double numeric = (logistic_loss(plus, examples, lambda) - logistic_loss(minus, examples, lambda)) / (2 * h);
        const double analytic = j < dim ? gw[j] : gb;
        CHECK(std::abs(numeric - analytic) < 1e-6);
      }
    }
  }

  TEST_CASE("logistic regression needs both classes") {
    std::vector<std::pair<FeatureVector, Label>> one_class{{FeatureVector::sparse(2, {0}, {1.0}), Label::hateful}};
    CHECK_THROWS_AS(train(ClassifierKind::logistic_regression, one_class, TrainingConfig{}), ValidationError);
  }

  TEST_CASE("naive Bayes posterior matches hand computation") {
    std::vector<std::pair<FeatureVector, Label>> data{{FeatureVector::sparse(2, {0}, {2.0}), Label::hateful},
                                                      {FeatureVector::sparse(2, {1}, {2.0}), Label::non_hateful}};
    const auto model = train(ClassifierKind::naive_bayes, data, TrainingConfig{});
    CHECK(std::abs(model.predict(FeatureVector::sparse(2, {0}, {1.0})) - 0.75) < 1e-12);
    CHECK(std::abs(model.predict(FeatureVector::sparse(2, {0, 1}, {1.0, 3.0})) - 0.1) < 1e-12);
  }

  TEST_CASE("classifiers round-trip through JSON") {
    const auto lr = train(ClassifierKind::logistic_regression, one_hot_pair(), TrainingConfig{});
    const auto again = BinaryClassifier::from_json(lr.to_json());
    const auto x = FeatureVector::sparse(2, {0}, {1.0});
    CHECK(again.predict(x) == lr.predict(x));
    CHECK(again.kind() == ClassifierKind::logistic_regression);
    CHECK_THROWS_AS(lr.predict(FeatureVector::sparse(3, {0}, {1.0})), ValidationError);
  }

  TEST_CASE("external scores") {
    std::istringstream in(R"({"doc_id": "a", "score": 0.9})"
                          "\n"
                          R"({"doc_id": "b", "score": 0.1})"
                          "\n");
    const auto model = load_external_scores(in);
    CHECK(model.kind() == ClassifierKind::external_scores);
    CHECK(model.predict("a") == 0.9);
    CHECK(model.has_score("b"));
    CHECK_THROWS_AS(model.predict("c"), NotFoundError);
    std::istringstream out_of_range(R"({"doc_id": "a", "score": 1.5})"
                                    "\n");
    CHECK_THROWS_AS(load_external_scores(out_of_range), ValidationError);
    std::istringstream duplicate(R"({"doc_id": "a", "score": 0.5})"
                                 "\n"
                                 R"({"doc_id": "a", "score": 0.5})"
                                 "\n");
    CHECK_THROWS_AS(load_external_scores(duplicate), ValidationError);
  }

  TEST_CASE("training config validation") {
    TrainingConfig config;
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config = {};
    config.l2_lambda = -1.0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config = {};
    config.epochs = 7;
    CHECK(TrainingConfig::from_json(config.to_json()).epochs == 7);
  }
}
