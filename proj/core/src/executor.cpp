#include "spforge/executor.hpp"

#include <algorithm>
#include <map>

#include "spforge/search.hpp"

namespace spforge {

namespace {

struct FlatNode {
  const SkeletonNode* shape;
  std::size_t tree;
  int height;
  std::vector<std::size_t> children;
  std::string text;
  std::optional<double> score;
  NodePtr built;
};

void check_shape(const SkeletonNode& node, std::size_t doc_size) {
  if (node.is_leaf()) {
    if (node.leaf >= doc_size)
      throw InvalidArgument(sentence_id(node.leaf) + " is outside the document");
    return;
  }
  if (node.children.size() != arity(*node.kind))
    throw InvalidArgument(std::string(to_string(*node.kind)) + " has the wrong number of operands");
  for (const auto& c : node.children) check_shape(c, doc_size);
}

std::size_t flatten(const SkeletonNode& node, std::size_t tree, std::vector<FlatNode>& out) {
  FlatNode flat{&node, tree, 0, {}, {}, std::nullopt, nullptr};
  for (const auto& c : node.children) {
    const auto id = flatten(c, tree, out);
    flat.children.push_back(id);
    flat.height = std::max(flat.height, out[id].height + 1);
  }
  out.push_back(std::move(flat));
  return out.size() - 1;
}

}  // namespace

ExecutionResult execute_skeleton(const ProgramSkeleton& skeleton, const Document& doc,
                                 ModuleBackend& backend, const ExecutionConfig& config,
                                 const SummaryTarget* target) {
  check_document(doc);
  if (config.generations < 1) throw InvalidArgument("generations must be at least 1");
  if (skeleton.trees.empty()) throw InvalidArgument("skeleton has no trees");
  const bool has_targets = target != nullptr && target->sentences.size() >= skeleton.trees.size();
  if (config.selection == CandidateSelection::best_vs_target && !has_targets)
    throw InvalidArgument("best_vs_target selection needs one target sentence per tree");

  std::vector<TargetScorer> scorers;
  if (has_targets)
    for (std::size_t t = 0; t < skeleton.trees.size(); ++t)
      scorers.emplace_back(target->sentences[t], config.metric, config.tokenizer);

  std::vector<FlatNode> nodes;
  std::vector<std::size_t> roots;
  int max_height = 0;
  for (std::size_t t = 0; t < skeleton.trees.size(); ++t) {
    check_shape(skeleton.trees[t], doc.size());
    roots.push_back(flatten(skeleton.trees[t], t, nodes));
    max_height = std::max(max_height, nodes[roots.back()].height);
  }
  auto finish = [&](FlatNode& n) {
    if (has_targets) n.score = scorers[n.tree](n.text);
  };

  for (auto& n : nodes) {
    if (!n.shape->is_leaf()) continue;
    n.text = doc.sentences[n.shape->leaf];
    finish(n);
  }
  for (int h = 1; h <= max_height; ++h) {
    std::vector<std::size_t> level;
    std::vector<ModuleRequest> requests;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].height != h) continue;
      ModuleRequest r{*nodes[i].shape->kind, {}, config.generations};
      for (auto c : nodes[i].children) r.inputs.push_back(nodes[c].text);
      level.push_back(i);
      requests.push_back(std::move(r));
    }
    const auto results = backend.execute_batch(requests);
    if (results.size() != requests.size()) throw ProtocolError("backend batch result count mismatch");
    for (std::size_t j = 0; j < level.size(); ++j) {
      auto& n = nodes[level[j]];
      if (!results[j].ok()) throw EmptyGeneration(results[j].error);
      check_candidates(results[j].value, config.generations);
      std::size_t pick = 0;
      if (config.selection == CandidateSelection::best_vs_target)
        pick = best_candidate(results[j].value, scorers[n.tree]);
      n.text = results[j].value.candidates[pick];
      if (config.normalize_whitespace) n.text = normalize_whitespace(n.text);
      finish(n);
    }
  }

  // Post-order flattening means children are built before parents.
  for (auto& n : nodes) {
    if (n.shape->is_leaf()) {
      n.built = make_leaf(n.shape->leaf, n.text, n.score);
      continue;
    }
    std::vector<NodePtr> children;
    for (auto c : n.children) children.push_back(nodes[c].built);
    n.built = make_node(*n.shape->kind, std::move(children), n.text, n.score);
  }

  ExecutionResult result;
  result.program.document_id = doc.id;
  for (std::size_t t = 0; t < roots.size(); ++t)
    result.program.trees.push_back(SPTree{nodes[roots[t]].built, t});
  result.summary = concat_summary(result.program);
  return result;
}

FirstWellformedResult execute_first_wellformed(const std::vector<std::string>& candidates,
                                               const Document& doc, ModuleBackend& backend,
                                               const std::vector<std::size_t>& fallback,
                                               const ExecutionConfig& config) {
  check_document(doc);
  ExecutionConfig generation = config;
  generation.selection = CandidateSelection::top1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!check_wellformed(candidates[i], doc.size()).empty()) continue;
    FirstWellformedResult out;
    out.execution = execute_skeleton(parse(candidates[i], doc.size()), doc, backend, generation);
    out.summary = out.execution->summary;
    out.chosen = i;
    return out;
  }
  std::vector<std::size_t> indices = fallback;
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  FirstWellformedResult out;
  for (auto i : indices) {
    if (i >= doc.size()) throw InvalidArgument("fallback index " + sentence_id(i) + " outside document");
    out.summary.push_back(doc.sentences[i]);
  }
  return out;
}

}  // namespace spforge
