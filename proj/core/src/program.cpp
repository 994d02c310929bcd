#include "spforge/program.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "spforge/errors.hpp"

namespace spforge {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

SourceSet merge_sources(const std::vector<NodePtr>& children) {
  SourceSet out;
  for (const auto& child : children) {
    if (!child) continue;
    SourceSet merged;
    std::set_union(out.begin(), out.end(), child->sources.begin(),
                   child->sources.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

void render_signature(const SPNode& node, std::string& out) {
  if (node.is_leaf()) {
    out += "·";
    return;
  }
  out += to_string(*node.kind);
  out += " ( ";
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (i > 0) out += " , ";
    if (node.children[i]) render_signature(*node.children[i], out);
  }
  out += " )";
}

void collect_leaves(const SPNode& node, std::vector<std::size_t>& out) {
  if (node.leaf_index) out.push_back(*node.leaf_index);
  for (const auto& child : node.children)
    if (child) collect_leaves(*child, out);
}

struct Validator {
  std::size_t doc_size;
  std::vector<TreeDiagnostic> diagnostics;
  std::set<std::size_t> seen_leaves;

  void add(TreeDiagnostic::Code code, const std::string& path,
           std::string message) {
    diagnostics.push_back({code, path, std::move(message)});
  }

  void visit(const SPNode* node, const std::string& path) {
    using Code = TreeDiagnostic::Code;
    if (node == nullptr) {
      add(Code::MissingNode, path, "null node");
      return;
    }
    if (node->is_leaf()) {
      if (!node->children.empty() || !node->leaf_index) {
        add(Code::LeafShape, path,
            "leaf must have no children and a sentence index");
      }
      if (node->leaf_index) {
        const auto idx = *node->leaf_index;
        if (idx >= doc_size) {
          add(Code::BadLeafIndex, path,
              sentence_id(idx) + " outside document of " +
                  std::to_string(doc_size) + " sentences");
        }
        if (!seen_leaves.insert(idx).second) {
          add(Code::DuplicateLeaf, path,
              sentence_id(idx) + " used more than once in the tree");
        }
        if (node->sources != SourceSet{idx}) {
          add(Code::SourceSetMismatch, path, "leaf source set must be {index}");
        }
      }
      if (node->height != 0) add(Code::HeightMismatch, path, "leaf height must be 0");
      return;
    }

    if (node->leaf_index) {
      add(Code::LeafShape, path, "internal node carries a sentence index");
    }
    if (node->children.size() != arity(*node->kind)) {
      add(Code::ArityMismatch, path,
          std::string(to_string(*node->kind)) + " expects " +
              std::to_string(arity(*node->kind)) + " operand(s), got " +
              std::to_string(node->children.size()));
    }
    int max_child_height = -1;
    for (std::size_t i = 0; i < node->children.size(); ++i) {
      const auto& child = node->children[i];
      visit(child.get(), path + "." + std::to_string(i));
      if (child) max_child_height = std::max(max_child_height, child->height);
    }
    if (merge_sources(node->children) != node->sources) {
      add(Code::SourceSetMismatch, path,
          "source set differs from the union of the children");
    }
    if (!node->children.empty() && node->height != max_child_height + 1) {
      add(Code::HeightMismatch, path, "height must be 1 + max child height");
    }
  }
};

}  // namespace

std::string_view to_string(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::compression: return "compression";
    case ModuleKind::paraphrase: return "paraphrase";
    case ModuleKind::fusion: return "fusion";
  }
  return "unknown";
}

std::optional<ModuleKind> parse_module_kind(std::string_view name) {
  for (auto kind : kAllModuleKinds)
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

void check_document(const Document& doc) {
  if (doc.sentences.empty())
    throw InvalidArgument("document '" + doc.id + "' has no sentences");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (is_blank(doc.sentences[i]))
      throw InvalidArgument("document '" + doc.id + "': sentence " +
                            sentence_id(i) + " is blank");
  }
}

std::string sentence_id(std::size_t index) {
  return "D" + std::to_string(index + 1);
}

NodePtr make_leaf(std::size_t index, std::string text,
                  std::optional<double> score) {
  auto node = std::make_shared<SPNode>();
  node->text = std::move(text);
  node->leaf_index = index;
  node->sources = {index};
  node->height = 0;
  node->score = score;
  return node;
}

NodePtr make_node(ModuleKind kind, std::vector<NodePtr> children,
                  std::string text, std::optional<double> score) {
  auto node = std::make_shared<SPNode>();
  node->text = std::move(text);
  node->kind = kind;
  node->sources = merge_sources(children);
  int h = 0;
  for (const auto& c : children)
    if (c) h = std::max(h, c->height + 1);
  node->height = h;
  node->children = std::move(children);
  node->score = score;
  return node;
}

std::vector<std::string> concat_summary(const SummarizationProgram& program) {
  std::vector<std::string> out;
  out.reserve(program.trees.size());
  for (std::size_t i = 0; i < program.trees.size(); ++i) {
    const auto& root = program.trees[i].root;
    if (!root || is_blank(root->text))
      throw UnexecutedProgram("tree " + std::to_string(i) +
                              " has no root text; execute the program first");
    out.push_back(root->text);
  }
  return out;
}

std::string structure_signature(const SPNode& root) {
  if (root.is_leaf()) return "( · )";
  std::string out;
  render_signature(root, out);
  return out;
}

std::string structure_signature(const SPTree& tree) {
  return tree.root ? structure_signature(*tree.root) : std::string();
}

SourceSet source_set(const SPNode& node) {
  if (node.leaf_index) return {*node.leaf_index};
  SourceSet out;
  for (const auto& child : node.children) {
    if (!child) continue;
    auto sub = source_set(*child);
    SourceSet merged;
    std::set_union(out.begin(), out.end(), sub.begin(), sub.end(),
                   std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

std::vector<std::size_t> leaf_indices(const SPNode& node) {
  std::vector<std::size_t> out;
  collect_leaves(node, out);
  return out;
}

std::size_t node_count(const SPNode& node) {
  std::size_t n = 1;
  for (const auto& c : node.children)
    if (c) n += node_count(*c);
  return n;
}

bool same_structure(const SPNode& a, const SPNode& b) {
  if (a.kind != b.kind || a.leaf_index != b.leaf_index ||
      a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    const auto& ca = a.children[i];
    const auto& cb = b.children[i];
    if (!ca || !cb) {
      if (ca != cb) return false;
      continue;
    }
    if (!same_structure(*ca, *cb)) return false;
  }
  return true;
}

std::string_view to_string(TreeDiagnostic::Code code) {
  using Code = TreeDiagnostic::Code;
  switch (code) {
    case Code::MissingNode: return "MissingNode";
    case Code::ArityMismatch: return "ArityMismatch";
    case Code::LeafShape: return "LeafShape";
    case Code::BadLeafIndex: return "BadLeafIndex";
    case Code::DuplicateLeaf: return "DuplicateLeaf";
    case Code::SourceSetMismatch: return "SourceSetMismatch";
    case Code::HeightMismatch: return "HeightMismatch";
    case Code::TargetIndexMismatch: return "TargetIndexMismatch";
  }
  return "Unknown";
}

std::vector<TreeDiagnostic> validate_tree(const SPTree& tree,
                                          std::size_t doc_size) {
  Validator v{doc_size, {}, {}};
  v.visit(tree.root.get(), "0");
  return std::move(v.diagnostics);
}

std::vector<TreeDiagnostic> validate_program(const SummarizationProgram& program,
                                             std::size_t doc_size) {
  std::vector<TreeDiagnostic> out;
  for (std::size_t i = 0; i < program.trees.size(); ++i) {
    auto diags = validate_tree(program.trees[i], doc_size);
    for (auto& d : diags) {
      d.message = "tree " + std::to_string(i) + ": " + d.message;
      out.push_back(std::move(d));
    }
    if (program.trees[i].target_index != i) {
      out.push_back({TreeDiagnostic::Code::TargetIndexMismatch, "0",
                     "tree " + std::to_string(i) + " has target_index " +
                         std::to_string(program.trees[i].target_index)});
    }
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace spforge
