#pragma once

// Best-first search for the program that best reproduces each summary
// sentence. One search per summary sentence:
//
//   1. Leaves are the top-k document sentences by unigram overlap with the
//      whole summary, each scored against the target sentence.
//   2. The queue starts with every admissible module application on leaves.
//      An application's priority is the max of its operands' scores.
//   3. Waves: rank the queue (score desc, height asc, insertion order),
//      truncate to Q, execute everything in one backend batch. For each
//      application keep the best of the G candidates against the target.
//   4. A generated node survives only if it beats every operand; survivors
//      become operands for new applications in the next wave, as long as the
//      resulting tree height stays within H.
//   5. The best-scoring node seen is the root; its subtree is the answer.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spforge/backend.hpp"
#include "spforge/program.hpp"
#include "spforge/rouge.hpp"

namespace spforge {

inline constexpr std::size_t kUnboundedQueue = std::numeric_limits<std::size_t>::max();

struct SearchConfig {
  std::size_t top_k = 4;
  std::size_t queue_size = 20;
  int max_height = 2;
  std::size_t generations = 5;
  Metric metric = Metric::rougeL;
  // When false a generation only has to tie its best operand.
  bool strict_improvement = true;
  TokenizerConfig tokenizer;
};

// Throws InvalidArgument.
void check_config(const SearchConfig& config);

nlohmann::json config_to_json(const SearchConfig& config);
SearchConfig config_from_json(const nlohmann::json& j);

// Indices of the k sentences with the highest unigram overlap fraction
// against the whole summary, in document order. Ties keep document order.
std::vector<std::size_t> select_top_k(const Document& doc,
                                      const SummaryTarget& summary,
                                      std::size_t k,
                                      const TokenizerConfig& tokenizer = {});

// Filtering rules for a pending application, numbered as in the docs.
enum class FilterRule {
  none = 0,
  recompression = 1,       // compressing a compression output
  reparaphrase = 2,        // paraphrasing a paraphrase output
  reused_sentence = 3,     // fusion would use a document sentence twice
  same_source = 4,         // fusing two intermediates with shared sources
  temporal_order = 5,      // fusion operands out of document order
  operand_shape = 6,       // s2 given for a unary kind or missing for fusion
};

struct Admissibility {
  FilterRule rule = FilterRule::none;
  std::string reason;

  bool ok() const { return rule == FilterRule::none; }
  explicit operator bool() const { return ok(); }
};

Admissibility admissible(ModuleKind kind, const SPNode& s1, const SPNode* s2);

// Resulting tree height of applying a module to the operands.
int application_height(const SPNode& s1, const SPNode* s2);

struct QueueItem {
  std::size_t s1 = 0;
  std::optional<std::size_t> s2;
  ModuleKind kind = ModuleKind::compression;
  int height = 1;
  double score = 0.0;
};

// Max of the operand scores; `node_scores` is indexed by node id.
double score_item(const QueueItem& item, const std::vector<double>& node_scores);

struct TraceNode {
  enum class Outcome { retained, not_improving, duplicate, failed };

  std::size_t item = 0;  // index into SearchWave::executed
  std::optional<std::size_t> id;  // absent when the backend failed
  std::string text;
  double score = 0.0;
  Outcome outcome = Outcome::failed;
  std::string error;
};

struct SearchWave {
  std::size_t queue_before = 0;
  std::vector<QueueItem> executed;  // after pruning, in rank order
  std::vector<TraceNode> generated;
  std::vector<std::size_t> best_updates;  // node ids
  double seconds = 0.0;
};

struct SearchTrace {
  std::vector<double> leaf_scores;
  std::vector<SearchWave> waves;
  std::size_t best_node = 0;
  std::size_t requests = 0;
  double seconds = 0.0;
};

nlohmann::json trace_to_json(const SearchTrace& trace, bool include_timing = true);

struct TreeSearchResult {
  SPTree tree;
  SearchTrace trace;
};

// `leaves` must be non-empty leaf nodes; missing scores are computed against
// `target`. Throws InvalidArgument on bad input; backend errors propagate.
TreeSearchResult search_tree(std::vector<NodePtr> leaves, const std::string& target,
                             const SearchConfig& config, ModuleBackend& backend,
                             std::size_t target_index = 0);

// Re-executes the applications recorded in `trace` and rebuilds the best
// tree from the regenerated nodes.
SPTree replay_trace(const SearchTrace& trace, std::vector<NodePtr> leaves,
                    const std::string& target, const SearchConfig& config,
                    ModuleBackend& backend, std::size_t target_index = 0);

struct ProgramSearchResult {
  SummarizationProgram program;
  std::vector<std::size_t> leaves;   // select_top_k output
  std::vector<double> root_scores;   // per tree, config.metric F vs. target
  RougeScores summary_scores;        // whole summary vs. reference
  std::vector<SearchTrace> traces;
  double seconds = 0.0;
};

ProgramSearchResult sp_search(const Document& doc, const SummaryTarget& summary,
                              const SearchConfig& config, ModuleBackend& backend);

// Picks the candidate with the highest score; first one wins ties.
std::size_t best_candidate(const CandidateSet& set, const TargetScorer& scorer,
                           double* score = nullptr);

}  // namespace spforge
