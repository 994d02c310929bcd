#pragma once

// Summarization Program domain model: an ordered list of binary trees whose
// leaves are document sentences and whose internal nodes are sentences
// produced by a text operation (compression, paraphrase or fusion) applied to
// their children. Nodes are immutable once built and shared via
// shared_ptr<const SPNode>, so trees can share subtrees freely (the search
// relies on this) and can be handed across threads.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spforge {

enum class ModuleKind { compression, paraphrase, fusion };

inline constexpr ModuleKind kAllModuleKinds[] = {
    ModuleKind::compression, ModuleKind::paraphrase, ModuleKind::fusion};

constexpr std::size_t arity(ModuleKind kind) {
  return kind == ModuleKind::fusion ? 2 : 1;
}

std::string_view to_string(ModuleKind kind);
std::optional<ModuleKind> parse_module_kind(std::string_view name);

struct Document {
  std::string id;
  std::vector<std::string> sentences;

  std::size_t size() const { return sentences.size(); }
};

// Throws InvalidArgument if the document is empty or has a blank sentence.
void check_document(const Document& doc);

struct SummaryTarget {
  std::vector<std::string> sentences;
};

// Document indices are stored 0-based; "<D1>" style identifiers are 1-based.
std::string sentence_id(std::size_t index);

// Sorted, duplicate-free document indices.
using SourceSet = std::vector<std::size_t>;

struct SPNode;
using NodePtr = std::shared_ptr<const SPNode>;

struct SPNode {
  std::string text;
  // Empty for leaves.
  std::optional<ModuleKind> kind;
  std::vector<NodePtr> children;
  std::optional<std::size_t> leaf_index;
  SourceSet sources;
  int height = 0;
  std::optional<double> score;

  bool is_leaf() const { return !kind.has_value(); }
};

NodePtr make_leaf(std::size_t index, std::string text,
                  std::optional<double> score = std::nullopt);

// Derives sources and height from the children. Does not check arity; use
// validate_tree for that.
NodePtr make_node(ModuleKind kind, std::vector<NodePtr> children,
                  std::string text, std::optional<double> score = std::nullopt);

struct SPTree {
  NodePtr root;
  std::size_t target_index = 0;
};

struct SummarizationProgram {
  std::string document_id;
  std::vector<SPTree> trees;
};

// Root texts in tree order. Throws UnexecutedProgram if any root is blank.
std::vector<std::string> concat_summary(const SummarizationProgram& program);

// Shape-only rendering with leaves anonymized, e.g.
// "compression ( fusion ( · , · ) )". A lone leaf renders as "( · )".
std::string structure_signature(const SPNode& root);
std::string structure_signature(const SPTree& tree);

SourceSet source_set(const SPNode& node);

// Leaf indices in left-to-right order.
std::vector<std::size_t> leaf_indices(const SPNode& node);
std::size_t node_count(const SPNode& node);

// Same kinds, same leaf indices, same shape. Texts and scores are ignored.
bool same_structure(const SPNode& a, const SPNode& b);

struct TreeDiagnostic {
  enum class Code {
    MissingNode,
    ArityMismatch,
    LeafShape,
    BadLeafIndex,
    DuplicateLeaf,
    SourceSetMismatch,
    HeightMismatch,
    TargetIndexMismatch,
  };
  Code code;
  // Root is "0"; child i of node p is "p.i".
  std::string path;
  std::string message;
};

std::string_view to_string(TreeDiagnostic::Code code);

std::vector<TreeDiagnostic> validate_tree(const SPTree& tree,
                                          std::size_t doc_size);

// validate_tree over every tree plus target_index == position.
std::vector<TreeDiagnostic> validate_program(const SummarizationProgram& program,
                                             std::size_t doc_size);

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace spforge
