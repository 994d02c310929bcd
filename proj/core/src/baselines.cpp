#include "spforge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "spforge/search.hpp"

namespace spforge {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased integer in [0, n) from raw 64-bit draws; independent of the
// standard library's distribution implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_leaves(SkeletonNode& node, const std::vector<std::size_t>& leaves, std::size_t& next) {
  if (node.is_leaf()) {
    node.leaf = leaves[next++];
    return;
  }
  for (auto& c : node.children) fill_leaves(c, leaves, next);
}

}  // namespace

StructureDistribution shipped_structure_distribution() {
  // Percentages of the ten most frequent shapes. Two of the listed shapes
  // show a fusion with one visible child; the other operand is a bare leaf.
  static const std::vector<std::pair<std::string, double>> kRows = {
      {"compression ( · )", 8},
      {"compression ( fusion ( · , · ) )", 8},
      {"fusion ( fusion ( · , · ) , fusion ( · , · ) )", 7},
      {"( · )", 7},
      {"fusion ( compression ( · ) , fusion ( · , · ) )", 6},
      {"paraphrase ( compression ( · ) )", 6},
      {"paraphrase ( fusion ( · , · ) )", 6},
      {"fusion ( fusion ( · , · ) , compression ( · ) )", 5},
      {"fusion ( fusion ( · , · ) , · )", 5},
      {"fusion ( compression ( · ) , · )", 5},
  };
  double total = 0;
  for (const auto& [sig, pct] : kRows) total += pct;
  StructureDistribution dist;
  dist.source = StructureDistribution::Source::shipped_default;
  for (const auto& [sig, pct] : kRows) dist.entries.push_back({sig, pct / total});
  return dist;
}

void check_distribution(const StructureDistribution& dist) {
  if (dist.entries.empty()) throw InvalidArgument("structure distribution is empty");
  double sum = 0;
  for (const auto& e : dist.entries) {
    if (!(e.probability >= 0)) throw InvalidArgument("negative probability for " + e.signature);
    try {
      parse_signature(e.signature);
    } catch (const ParseError& err) {
      throw InvalidArgument("bad signature '" + e.signature + "': " + err.what());
    }
    sum += e.probability;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidArgument("structure probabilities sum to " + std::to_string(sum));
}

StructureDistribution distribution_from_programs(const std::vector<SummarizationProgram>& programs) {
  const auto stats = structure_stats(programs);
  StructureDistribution dist;
  dist.source = StructureDistribution::Source::computed_from_corpus;
  for (const auto& [sig, count] : stats.signatures)
    dist.entries.push_back({sig, static_cast<double>(count) / static_cast<double>(stats.trees)});
  return dist;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view example_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : example_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

ProgramSkeleton random_program(const Document& doc, const std::vector<std::size_t>& leaf_pool,
                               const StructureDistribution& dist, std::uint64_t seed) {
  check_distribution(dist);
  for (auto i : leaf_pool)
    if (i >= doc.size()) throw InvalidArgument("leaf pool index " + sentence_id(i) + " outside document");
  std::vector<std::size_t> pool = leaf_pool;
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::vector<SkeletonNode> shapes;
  for (const auto& e : dist.entries) shapes.push_back(parse_signature(e.signature));

  std::mt19937_64 rng(seed);
  ProgramSkeleton program;
  const auto trees = 1 + uniform_below(rng, 4);
  for (std::uint64_t t = 0; t < trees; ++t) {
    const double u = uniform_unit(rng);
    double cumulative = 0;
    std::size_t pick = dist.entries.size() - 1;
    for (std::size_t i = 0; i < dist.entries.size(); ++i) {
      cumulative += dist.entries[i].probability;
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    SkeletonNode tree = shapes[pick];
    const auto needed = leaf_count(tree);
    if (needed > pool.size()) {
      throw InsufficientLeaves("shape '" + dist.entries[pick].signature + "' needs " +
                               std::to_string(needed) + " leaves, pool has " +
                               std::to_string(pool.size()));
    }
    // Partial Fisher-Yates over a copy: without replacement inside a tree.
    auto candidates = pool;
    for (std::size_t i = 0; i < needed; ++i) {
      const auto j = i + uniform_below(rng, candidates.size() - i);
      std::swap(candidates[i], candidates[j]);
    }
    std::vector<std::size_t> chosen(candidates.begin(), candidates.begin() + static_cast<long>(needed));
    std::sort(chosen.begin(), chosen.end());
    std::size_t next = 0;
    fill_leaves(tree, chosen, next);
    program.trees.push_back(std::move(tree));
  }
  return program;
}

std::vector<std::string> leaves_baseline(const SummarizationProgram& program) {
  std::map<std::size_t, std::string> leaves;
  std::vector<const SPNode*> stack;
  for (const auto& t : program.trees)
    if (t.root) stack.push_back(t.root.get());
  while (!stack.empty()) {
    const auto* n = stack.back();
    stack.pop_back();
    if (n->leaf_index) leaves.emplace(*n->leaf_index, n->text);
    for (const auto& c : n->children)
      if (c) stack.push_back(c.get());
  }
  std::vector<std::string> out;
  for (auto& [idx, text] : leaves) out.push_back(text);
  return out;
}

std::vector<std::string> topk_baseline(const Document& doc, const SummaryTarget& summary,
                                       std::size_t k) {
  std::vector<std::string> out;
  for (auto i : select_top_k(doc, summary, k)) out.push_back(doc.sentences[i]);
  return out;
}

StructureStats structure_stats(const std::vector<SummarizationProgram>& programs) {
  StructureStats stats;
  std::map<std::string, std::size_t> counts;
  for (const auto& p : programs) {
    ++stats.programs;
    std::set<std::size_t> used;
    for (const auto& t : p.trees) {
      if (!t.root) continue;
      ++stats.trees;
      ++counts[structure_signature(*t.root)];
      ++stats.heights[t.root->height];
      for (auto i : leaf_indices(*t.root)) used.insert(i);
    }
    ++stats.distinct_leaves[used.size()];
  }
  stats.signatures.assign(counts.begin(), counts.end());
  std::stable_sort(stats.signatures.begin(), stats.signatures.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return stats;
}

json stats_to_json(const StructureStats& stats) {
  auto pct = [](std::size_t n, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(total);
  };
  json sigs = json::array();
  for (const auto& [sig, n] : stats.signatures)
    sigs.push_back(json{{"signature", sig}, {"count", n}, {"percent", pct(n, stats.trees)}});
  json heights = json::object();
  for (const auto& [h, n] : stats.heights) heights[std::to_string(h)] = n;
  json leaves = json::object();
  for (const auto& [l, n] : stats.distinct_leaves) leaves[std::to_string(l)] = n;
  return json{{"programs", stats.programs}, {"trees", stats.trees}, {"signatures", sigs},
              {"heights", heights}, {"distinct_leaves", leaves}};
}

std::string stats_to_table(const StructureStats& stats) {
  std::ostringstream out;
  std::size_t width = 9;
  for (const auto& [sig, n] : stats.signatures) width = std::max(width, sig.size());
  out << std::left << std::setw(static_cast<int>(width)) << "Structure" << "  Height  Percent\n";
  for (const auto& [sig, n] : stats.signatures) {
    const auto shape = parse_signature(sig);
    // "·" is two bytes but one column.
    std::size_t columns = 0;
    for (unsigned char c : sig) columns += (c & 0xC0) != 0x80;
    out << sig << std::string(width - std::min(width, columns), ' ') << "  " << std::setw(6)
        << height(shape) << "  " << std::fixed << std::setprecision(1) << std::setw(7)
        << (stats.trees ? 100.0 * static_cast<double>(n) / static_cast<double>(stats.trees) : 0.0)
        << '\n';
  }
  out << "programs: " << stats.programs << ", trees: " << stats.trees << '\n';
  for (const auto& [l, n] : stats.distinct_leaves)
    out << "programs using " << l << " sentence(s): " << n << '\n';
  return out.str();
}

}  // namespace spforge
