#pragma once

// Random programs, extractive baselines and structure statistics.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spforge/dsl.hpp"
#include "spforge/program.hpp"

namespace spforge {

struct StructureDistribution {
  enum class Source { shipped_default, computed_from_corpus };

  struct Entry {
    std::string signature;
    double probability = 0.0;
  };

  std::vector<Entry> entries;
  Source source = Source::shipped_default;
};

// The ten most frequent tree shapes of searched CNN/DailyMail programs,
// renormalized to sum to one.
StructureDistribution shipped_structure_distribution();

// Throws InvalidArgument when probabilities do not sum to 1 (within 1e-9),
// any is negative, or a signature does not parse.
void check_distribution(const StructureDistribution& dist);

// Relative frequencies of tree signatures over a set of programs.
StructureDistribution distribution_from_programs(const std::vector<SummarizationProgram>& programs);

// splitmix64-style mix of a base seed and an example id, so every example
// gets its own reproducible stream regardless of processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view example_id);

// Samples 1-4 trees uniformly, a shape per tree from `dist`, then leaves per
// tree without replacement from `leaf_pool` (assigned left to right in
// document order). Throws InsufficientLeaves when a sampled shape needs more
// leaves than the pool holds.
ProgramSkeleton random_program(const Document& doc, const std::vector<std::size_t>& leaf_pool,
                               const StructureDistribution& dist, std::uint64_t seed);

// Distinct leaf sentences of an executed program, in document order.
std::vector<std::string> leaves_baseline(const SummarizationProgram& program);

std::vector<std::string> topk_baseline(const Document& doc, const SummaryTarget& summary,
                                       std::size_t k);

struct StructureStats {
  std::size_t programs = 0;
  std::size_t trees = 0;
  // Sorted by count (descending), then signature.
  std::vector<std::pair<std::string, std::size_t>> signatures;
  std::map<int, std::size_t> heights;
  // Number of distinct document sentences a program uses -> programs.
  std::map<std::size_t, std::size_t> distinct_leaves;
};

StructureStats structure_stats(const std::vector<SummarizationProgram>& programs);
nlohmann::json stats_to_json(const StructureStats& stats);
std::string stats_to_table(const StructureStats& stats);

}  // namespace spforge
