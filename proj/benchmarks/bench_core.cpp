#include <benchmark/benchmark.h>

#include <random>

#include "rarecorpus/active_learning.hpp"
#include "rarecorpus/features.hpp"
#include "rarecorpus/models.hpp"
#include "rarecorpus/simulation.hpp"

using namespace rarecorpus;

namespace {

const DocumentCollection& corpus() {
  static const DocumentCollection c = make_synthetic_corpus(SyntheticSpec{});
  return c;
}

void BM_VocabularyFit(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fit_vocabulary(corpus()));
}
BENCHMARK(BM_VocabularyFit)->Unit(benchmark::kMillisecond);

void BM_VectorizeTfidf(benchmark::State& state) {
  const auto vocab = fit_vocabulary(corpus());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vectorize_tfidf(corpus()[i % corpus().size()], vocab));
    ++i;
  }
}
BENCHMARK(BM_VectorizeTfidf);

void BM_LogisticFit(benchmark::State& state) {
  const auto learner = make_learner(corpus(), FeatureMode::tfidf, TrainingConfig{});
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> idx(n);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = i;
    y[i] = *corpus()[i].gold_label;
  }
  y[0] = Label::hateful;
  y[1] = Label::non_hateful;
  for (auto _ : state) benchmark::DoNotOptimize(learner->fit(idx, y));
}
BENCHMARK(BM_LogisticFit)->Arg(100)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SelectFromScores(benchmark::State& state) {
  const auto strategy = static_cast<Strategy>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> scores(corpus().size());
  for (auto& s : scores) s = unit(rng);
  std::vector<bool> judged(corpus().size(), false);
  for (std::size_t i = 0; i < judged.size(); i += 3) judged[i] = true;
  for (auto _ : state) benchmark::DoNotOptimize(select_from_scores(scores, corpus(), judged, strategy, 10, rng));
}
BENCHMARK(BM_SelectFromScores)->Arg(static_cast<int>(Strategy::cal))->Arg(static_cast<int>(Strategy::sal))
    ->Arg(static_cast<int>(Strategy::spl));

}  // namespace
BENCHMARK_MAIN();
