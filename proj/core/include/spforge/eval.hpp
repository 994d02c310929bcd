#pragma once

// Corpus-level scoring, significance tests and configuration sweeps.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spforge/backend.hpp"
#include "spforge/corpus_io.hpp"
#include "spforge/rouge.hpp"
#include "spforge/search.hpp"

namespace spforge {

using Summary = std::vector<std::string>;

struct SystemOutputs {
  std::string name;
  std::vector<Summary> summaries;
};

struct EvalOptions {
  std::size_t bootstrap_resamples = 10000;
  std::uint64_t seed = 0;
  bool significance = true;
  TokenizerConfig tokenizer;
};

// F-measures, x100.
struct MetricMeans {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double rougeLsum = 0.0;
};

struct SystemReport {
  std::string name;
  MetricMeans means;
  std::vector<RougeScores> per_example;
};

struct PairwiseTest {
  std::string a;
  std::string b;
  std::string metric;  // "rouge1", "rouge2", "rougeL", "rougeLsum"
  double mean_difference = 0.0;  // a - b, x100
  double p_value = 1.0;          // one-sided, H1: a > b
};

struct EvalReport {
  std::vector<SystemReport> systems;
  std::vector<PairwiseTest> tests;  // every ordered pair i < j
};

// Throws LengthMismatch when any system's output count differs from the
// references.
EvalReport evaluate(const std::vector<SystemOutputs>& systems,
                    const std::vector<Summary>& references,
                    const EvalOptions& options = {});

// Paired bootstrap: fraction of resampled mean differences (a - b) that are
// <= 0. Throws LengthMismatch.
double paired_bootstrap_p(const std::vector<double>& a, const std::vector<double>& b,
                          std::size_t resamples, std::uint64_t seed);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

// Searches every record (summaries required) on `threads` workers. Output
// order follows the corpus.
std::vector<ProgramRecord> search_corpus(const std::vector<CorpusRecord>& corpus,
                                         const SearchConfig& config, ModuleBackend& backend,
                                         std::size_t threads = 1);

struct SweepRow {
  SearchConfig config;
  MetricMeans means;
  double seconds_per_sample = 0.0;
};

// One row per grid entry, in grid order.
std::vector<SweepRow> sweep(const std::vector<CorpusRecord>& corpus,
                            const std::vector<SearchConfig>& grid, ModuleBackend& backend,
                            std::size_t threads = 1);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace spforge
