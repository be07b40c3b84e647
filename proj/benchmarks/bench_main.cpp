#include <benchmark/benchmark.h>
#include <bovir/clustering.hpp>
#include <bovir/index.hpp>
#include <bovir/retrieval.hpp>
#include <fmt/format.h>

#include <random>

using namespace bovir;

namespace {

EmbeddingSpace random_space(std::size_t words, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  EmbeddingSpace space(dim);
  Vector v(dim);
  for (std::size_t i = 0; i < words; ++i) {
    for (auto& x : v) x = normal(rng);
    space.set(fmt::format("w{}", i), v);
  }
  return unit_normalize(space);
}

std::vector<ParsedDoc> zipf_corpus(std::size_t docs, std::size_t length, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> weights(vocab);
  for (std::size_t r = 0; r < vocab; ++r) weights[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<ParsedDoc> corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    for (std::size_t i = 0; i < length; ++i) text += fmt::format("w{} ", pick(rng));
    corpus.push_back({fmt::format("D{}", d), std::move(text)});
  }
  return corpus;
}

AnalyzerConfig plain() {
  AnalyzerConfig a;
  a.stemming = false;
  return a;
}

void BM_KMeans(benchmark::State& state) {
  const auto space = random_space(static_cast<std::size_t>(state.range(0)), 100, 1);
  KMeansConfig kc;
  kc.k = static_cast<std::size_t>(state.range(1));
  kc.max_iterations = 10;
  for (auto _ : state) benchmark::DoNotOptimize(cluster_vocabulary(space, kc).sse);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Args({5000, 50})->Args({20000, 100})->Unit(benchmark::kMillisecond);

void BM_BuildIndex(benchmark::State& state) {
  const auto space = random_space(5000, 50, 2);
  KMeansConfig kc;
  kc.k = 50;
  const auto model = cluster_vocabulary(space, kc);
  const auto corpus = zipf_corpus(static_cast<std::size_t>(state.range(0)), 100, 5000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(build_index(corpus, plain(), space, model).num_docs());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Search(benchmark::State& state) {
  const auto space = random_space(5000, 50, 4);
  KMeansConfig kc;
  kc.k = 50;
  const auto model = cluster_vocabulary(space, kc);
  const auto index = build_index(zipf_corpus(5000, 100, 5000, 5), plain(), space, model);
  const auto query = make_query("q", {"w10", "w200", "w3000"}, index.term_vectors());
  ScoringConfig sc;
  sc.variant = static_cast<Variant>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(combine_and_rank(index, query, sc).docs.size());
  state.SetLabel(std::string(to_string(sc.variant)));
}
BENCHMARK(BM_Search)
    ->Arg(static_cast<int>(Variant::lm_only))
    ->Arg(static_cast<int>(Variant::kmeans))
    ->Arg(static_cast<int>(Variant::no_cluster))
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
