#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <set>
#include <string_view>

#include "spforge/backend.hpp"

namespace spforge::fixtures {

namespace {

std::uint64_t next(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t below(std::uint64_t& s, std::size_t n) { return static_cast<std::size_t>(next(s) % n); }

template <std::size_t N>
std::string_view pick(std::uint64_t& s, const std::array<std::string_view, N>& xs) {
  return xs[below(s, N)];
}

constexpr std::array<std::string_view, 12> kSubjects = {
    "The police",         "Local officials",    "The government",  "Many people",
    "The team",           "The city council",   "Hospital staff",  "The children",
    "A small company",    "Two residents",      "The country",     "The school board"};
constexpr std::array<std::string_view, 12> kVerbs = {
    "arrested", "found",  "announced", "bought", "helped", "showed",
    "won",      "wanted", "told",      "started", "shot",  "detained"};
constexpr std::array<std::string_view, 12> kObjects = {
    "a suspect",      "the money",         "a new plan",     "a big house",
    "the car",        "the game",          "a small job",    "the road project",
    "several cars",   "the annual budget", "many children",  "a famous painting"};
constexpr std::array<std::string_view, 10> kPlaces = {
    "near the hospital", "in the city",       "on Monday",          "in the country",
    "after the attack",  "near the river",    "late on Friday",     "in the old town",
    "during the storm",  "outside the stadium"};
constexpr std::array<std::string_view, 8> kTails = {
    "",  "",  ", officials said", ", according to a local report",
    " (local time)", ", which surprised many residents", ", police said",
    ", the government also announced"};

constexpr std::array<std::string_view, 8> kAllRecipes = {
    "compression ( · )",
    "paraphrase ( · )",
    "fusion ( · , · )",
    "compression ( fusion ( · , · ) )",
    "paraphrase ( compression ( · ) )",
    "fusion ( compression ( · ) , · )",
    "paraphrase ( fusion ( · , · ) )",
    "fusion ( · , paraphrase ( · ) )"};

constexpr std::array<std::string_view, 5> kParaphraseFusionRecipes = {
    "paraphrase ( · )",
    "fusion ( · , · )",
    "paraphrase ( fusion ( · , · ) )",
    "fusion ( compression ( · ) , · )",
    "fusion ( · , paraphrase ( · ) )"};

void number_leaves(SkeletonNode& n, const std::vector<std::size_t>& leaves, std::size_t& i) {
  if (n.is_leaf()) {
    n.leaf = leaves[i++];
    return;
  }
  for (auto& c : n.children) number_leaves(c, leaves, i);
}

}  // namespace

std::string random_sentence(std::uint64_t& state) {
  std::string s;
  s += pick(state, kSubjects);
  s += ' ';
  s += pick(state, kVerbs);
  s += ' ';
  s += pick(state, kObjects);
  s += ' ';
  s += pick(state, kPlaces);
  s += pick(state, kTails);
  s += '.';
  return s;
}

std::vector<SyntheticExample> synthetic_corpus(std::size_t n, std::uint64_t seed,
                                               const SyntheticOptions& options) {
  ReferenceBackend backend;
  std::uint64_t state = seed;
  std::vector<SyntheticExample> out;
  for (std::size_t e = 0; e < n; ++e) {
    SyntheticExample ex;
    ex.record.id = "syn-" + std::to_string(seed) + "-" + std::to_string(e);
    ex.record.document.id = ex.record.id;
    const auto d = options.min_sentences + below(state, options.max_sentences - options.min_sentences + 1);
    std::set<std::string> seen;
    while (ex.record.document.sentences.size() < d) {
      auto s = random_sentence(state);
      if (seen.insert(s).second) ex.record.document.sentences.push_back(std::move(s));
    }

    SummaryTarget summary;
    const auto m = options.min_summary + below(state, options.max_summary - options.min_summary + 1);
    for (std::size_t t = 0; t < m; ++t) {
      const auto recipe = options.paraphrase_fusion_only
                              ? pick(state, kParaphraseFusionRecipes)
                              : pick(state, kAllRecipes);
      auto shape = parse_signature(recipe);
      const auto need = leaf_count(shape);
      std::vector<std::size_t> all(d);
      for (std::size_t i = 0; i < d; ++i) all[i] = i;
      for (std::size_t i = 0; i < need; ++i) std::swap(all[i], all[i + below(state, d - i)]);
      std::vector<std::size_t> leaves(all.begin(), all.begin() + static_cast<long>(need));
      std::sort(leaves.begin(), leaves.end());
      std::size_t next_leaf = 0;
      number_leaves(shape, leaves, next_leaf);

      std::function<std::string(const SkeletonNode&)> run = [&](const SkeletonNode& node) -> std::string {
        if (node.is_leaf()) return ex.record.document.sentences[node.leaf];
        ModuleRequest req{*node.kind, {}, options.pick_range};
        for (const auto& c : node.children) req.inputs.push_back(run(c));
        const auto set = backend.execute(req);
        return normalize_whitespace(set.candidates[below(state, set.candidates.size())]);
      };
      summary.sentences.push_back(run(shape));
      ex.recipe.trees.push_back(std::move(shape));
    }
    ex.record.summary = std::move(summary);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<CorpusRecord> records_of(const std::vector<SyntheticExample>& examples) {
  std::vector<CorpusRecord> out;
  for (const auto& e : examples) out.push_back(e.record);
  return out;
}

ProgramSkeleton random_skeleton(std::uint64_t& state, std::size_t doc_size, int max_height) {
  std::function<SkeletonNode(int)> grow = [&](int budget) -> SkeletonNode {
    SkeletonNode n;
    if (budget == 0 || below(state, 3) == 0) return n;
    n.kind = kAllModuleKinds[below(state, std::size(kAllModuleKinds))];
    for (std::size_t i = 0; i < arity(*n.kind); ++i) n.children.push_back(grow(budget - 1));
    return n;
  };
  ProgramSkeleton p;
  const auto trees = 1 + below(state, 4);
  while (p.trees.size() < trees) {
    auto shape = grow(max_height);
    const auto need = leaf_count(shape);
    if (need > doc_size) continue;
    // Leaves are distinct within a tree and appear in any order.
    std::vector<std::size_t> all(doc_size);
    for (std::size_t i = 0; i < doc_size; ++i) all[i] = i;
    for (std::size_t i = 0; i < need; ++i) std::swap(all[i], all[i + below(state, doc_size - i)]);
    std::size_t i = 0;
    number_leaves(shape, all, i);
    p.trees.push_back(std::move(shape));
  }
  return p;
}

}  // namespace spforge::fixtures
