#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "spforge/backend.hpp"
#include "spforge/dsl.hpp"
#include "spforge/program.hpp"
#include "spforge/rouge.hpp"

namespace spforge {

enum class CandidateSelection {
  // Highest metric against the tree's target sentence (search-time choice).
  best_vs_target,
  // The backend's first candidate; the only option without a target.
  top1,
};

struct ExecutionConfig {
  std::size_t generations = 5;
  CandidateSelection selection = CandidateSelection::top1;
  bool normalize_whitespace = true;
  Metric metric = Metric::rougeL;
  TokenizerConfig tokenizer;
};

struct ExecutionResult {
  SummarizationProgram program;
  std::vector<std::string> summary;
};

// Executes bottom-up, batching all nodes of equal height across trees into
// one backend call. With a target, node scores are filled in against the
// tree's target sentence. Throws InvalidArgument for a skeleton that does not
// fit the document (or best_vs_target without enough target sentences),
// EmptyGeneration when the backend yields nothing for a node.
ExecutionResult execute_skeleton(const ProgramSkeleton& skeleton, const Document& doc,
                                 ModuleBackend& backend, const ExecutionConfig& config,
                                 const SummaryTarget* target = nullptr);

struct FirstWellformedResult {
  std::vector<std::string> summary;
  // Index into the candidate list, or empty when the fallback was used.
  std::optional<std::size_t> chosen;
  std::optional<ExecutionResult> execution;
};

// Executes the first candidate that passes check_wellformed; if none does,
// returns the fallback sentences verbatim in document order.
FirstWellformedResult execute_first_wellformed(const std::vector<std::string>& candidates,
                                               const Document& doc, ModuleBackend& backend,
                                               const std::vector<std::size_t>& fallback,
                                               const ExecutionConfig& config = {});

}  // namespace spforge
