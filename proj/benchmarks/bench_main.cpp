#include <random>

#include <benchmark/benchmark.h>

#include "spforge/dsl.hpp"
#include "spforge/rouge.hpp"
#include "spforge/search.hpp"

using namespace spforge;

namespace {

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t n) {
  static const char* words[] = {"the", "police", "said", "a", "man", "was", "arrested", "on",
                                "monday", "in", "city", "after", "attack", "near", "river", "old"};
  std::vector<std::string> out(n);
  for (auto& w : out) w = words[rng() % std::size(words)];
  return out;
}

const Document kDoc{"bench",
                    {"The mayor of the city, who was elected last year, announced a new budget on Monday.",
                     "The budget includes funding for schools and roads (officials said).",
                     "Critics said the plan was too expensive, according to a local report.",
                     "Officials expect the council to vote next week.",
                     "Several residents attended the meeting in the old town hall."}};
const SummaryTarget kSummary{{"The mayor announced a budget for schools and roads.",
                              "Critics said the plan was expensive."}};

}  // namespace

static void BM_RougeL(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto a = random_tokens(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_tokens(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->Arg(20)->Arg(60)->Arg(200);

static void BM_Rouge2(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto a = random_tokens(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_tokens(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_n(a, b, 2));
}
BENCHMARK(BM_Rouge2)->Arg(20)->Arg(200);

static void BM_TargetScorer(benchmark::State& state) {
  const TargetScorer scorer(kSummary.sentences[0], Metric::rougeL);
  for (auto _ : state) benchmark::DoNotOptimize(scorer(kDoc.sentences[0]));
}
BENCHMARK(BM_TargetScorer);

static void BM_ParseDsl(benchmark::State& state) {
  const std::string text =
      "fusion ( compression ( <D1> ) paraphrase ( <D2> ) ) ; compression ( fusion ( <D3> <D4> ) ) ; ( <D5> )";
  for (auto _ : state) benchmark::DoNotOptimize(parse(text, 5));
}
BENCHMARK(BM_ParseDsl);

static void BM_Search(benchmark::State& state) {
  ReferenceBackend backend;
  SearchConfig config;
  config.queue_size = static_cast<std::size_t>(state.range(0));
  config.generations = 3;
  for (auto _ : state) benchmark::DoNotOptimize(sp_search(kDoc, kSummary, config, backend));
}
BENCHMARK(BM_Search)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
