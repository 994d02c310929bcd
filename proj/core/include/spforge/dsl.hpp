#pragma once

// Linear text form of a program:
//
//   Program := Tree ( ";" Tree )*
//   Tree    := Leaf | "(" Leaf ")" | Kind "(" Arg+ ")"
//   Arg     := Leaf | Tree
//   Leaf    := "<D" digits ">"            (1-based sentence identifier)
//   Kind    := "fusion" | "compression" | "paraphrase"
//
// Whitespace between tokens is insignificant and commas between arguments
// are accepted on input. Canonical output separates arguments with spaces,
// writes a singleton tree as "( <Dn> )" and joins trees with " ; ".

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spforge/errors.hpp"
#include "spforge/program.hpp"

namespace spforge {

struct SkeletonNode {
  std::optional<ModuleKind> kind;  // empty for leaves
  std::size_t leaf = 0;            // 0-based; leaves only
  std::vector<SkeletonNode> children;

  bool is_leaf() const { return !kind.has_value(); }
  bool operator==(const SkeletonNode&) const = default;
};

struct ProgramSkeleton {
  std::vector<SkeletonNode> trees;
  bool operator==(const ProgramSkeleton&) const = default;
};

SkeletonNode skeleton_of(const SPNode& node);
ProgramSkeleton skeleton_of(const SummarizationProgram& program);

std::string serialize(const SkeletonNode& tree);
std::string serialize(const ProgramSkeleton& skeleton);
std::string serialize(const SummarizationProgram& program);

struct DslDiagnostic {
  enum class Code {
    UnbalancedParens,
    OOVToken,
    ArityMismatch,
    BadIdentifier,
    EmptyProgram,
    // Vocabulary is fine but the token cannot appear here.
    UnexpectedToken,
    // A sentence identifier appears twice in one tree.
    DuplicateLeaf,
  };
  Code code;
  std::size_t position = 0;  // byte offset into the input
  std::string message;
};

std::string_view to_string(DslDiagnostic::Code code);

class ParseError : public InputError {
 public:
  explicit ParseError(std::vector<DslDiagnostic> diagnostics);
  const std::vector<DslDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<DslDiagnostic> diagnostics_;
};

// Every violation found, in input order. Empty iff parse() succeeds.
std::vector<DslDiagnostic> check_wellformed(std::string_view text, std::size_t doc_size);

// Throws ParseError carrying check_wellformed's diagnostics.
ProgramSkeleton parse(std::string_view text, std::size_t doc_size);

// Structure signatures ("compression ( fusion ( · , · ) )") back to a shape;
// leaves are numbered 0, 1, ... left to right. Throws ParseError.
SkeletonNode parse_signature(std::string_view signature);

std::size_t leaf_count(const SkeletonNode& node);
int height(const SkeletonNode& node);
std::string structure_signature(const SkeletonNode& node);

}  // namespace spforge
