#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "spforge/baselines.hpp"
#include "spforge/dsl.hpp"

using namespace spforge;

namespace {

Document doc_of(std::size_t n) {
  Document d{"d", {}};
  for (std::size_t i = 0; i < n; ++i) d.sentences.push_back("sentence " + std::to_string(i + 1));
  return d;
}

SummarizationProgram program_from(const std::string& dsl, std::size_t doc_size) {
  const auto doc = doc_of(doc_size);
  std::function<NodePtr(const SkeletonNode&)> build = [&](const SkeletonNode& s) -> NodePtr {
    if (s.is_leaf()) return make_leaf(s.leaf, doc.sentences[s.leaf]);
    std::vector<NodePtr> kids;
    for (const auto& c : s.children) kids.push_back(build(c));
    return make_node(*s.kind, kids, "generated");
  };
  SummarizationProgram p{"d", {}};
  const auto sk = parse(dsl, doc_size);
  for (std::size_t t = 0; t < sk.trees.size(); ++t) p.trees.push_back({build(sk.trees[t]), t});
  return p;
}

void collect(const SkeletonNode& n, std::vector<std::size_t>& out) {
  if (n.is_leaf()) out.push_back(n.leaf);
  for (const auto& c : n.children) collect(c, out);
}

}  // namespace

TEST(ShippedDistribution, TableWeights) {
  const auto d = shipped_structure_distribution();
  ASSERT_EQ(d.entries.size(), 10u);
  EXPECT_EQ(d.source, StructureDistribution::Source::shipped_default);
  const double pct[] = {8, 8, 7, 7, 6, 6, 6, 5, 5, 5};
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(d.entries[i].probability, pct[i] / 63.0, 1e-15);
  EXPECT_NO_THROW(check_distribution(d));
  const int heights[] = {1, 2, 2, 0, 2, 2, 2, 2, 2, 2};
  for (std::size_t i = 0; i < 10; ++i)
    EXPECT_EQ(height(parse_signature(d.entries[i].signature)), heights[i]) << d.entries[i].signature;
}

TEST(CheckDistribution, Rejects) {
  StructureDistribution d;
  EXPECT_THROW(check_distribution(d), InvalidArgument);
  d.entries = {{"( · )", 0.5}, {"compression ( · )", 0.4}};
  EXPECT_THROW(check_distribution(d), InvalidArgument);
  d.entries = {{"( · )", 1.2}, {"compression ( · )", -0.2}};
  EXPECT_THROW(check_distribution(d), InvalidArgument);
  d.entries = {{"squash ( · )", 1.0}};
  EXPECT_THROW(check_distribution(d), InvalidArgument);
  d.entries = {{"fusion ( · , · )", 1.0}};
  EXPECT_NO_THROW(check_distribution(d));
}

TEST(RandomProgram, ReproducibleAndDrawnFromPool) {
  const auto doc = doc_of(8);
  const std::vector<std::size_t> pool{6, 1, 3, 4, 3};
  const auto dist = shipped_structure_distribution();
  std::set<std::string> shapes;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto a = random_program(doc, pool, dist, seed);
    EXPECT_EQ(a, random_program(doc, pool, dist, seed));
    ASSERT_GE(a.trees.size(), 1u);
    ASSERT_LE(a.trees.size(), 4u);
    for (const auto& t : a.trees) {
      shapes.insert(structure_signature(t));
      std::vector<std::size_t> leaves;
      collect(t, leaves);
      EXPECT_TRUE(std::is_sorted(leaves.begin(), leaves.end()));
      EXPECT_EQ(std::set<std::size_t>(leaves.begin(), leaves.end()).size(), leaves.size());
      for (auto l : leaves) EXPECT_TRUE(l == 1 || l == 3 || l == 4 || l == 6);
    }
    EXPECT_TRUE(check_wellformed(serialize(a), doc.size()).empty());
  }
  EXPECT_EQ(shapes.size(), 10u);
}

TEST(RandomProgram, DegenerateDistribution) {
  StructureDistribution d{{{"paraphrase ( · )", 1.0}}, StructureDistribution::Source::computed_from_corpus};
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (const auto& t : random_program(doc_of(3), {0, 1, 2}, d, seed).trees)
      EXPECT_EQ(structure_signature(t), "paraphrase ( · )");
}

TEST(RandomProgram, Errors) {
  StructureDistribution four{{{"fusion ( fusion ( · , · ) , fusion ( · , · ) )", 1.0}},
                             StructureDistribution::Source::computed_from_corpus};
  EXPECT_THROW(random_program(doc_of(5), {0, 1, 2}, four, 1), InsufficientLeaves);
  EXPECT_THROW(random_program(doc_of(2), {0, 5}, shipped_structure_distribution(), 1), InvalidArgument);
}

TEST(DeriveSeed, DependsOnBoth) {
  EXPECT_EQ(derive_seed(7, "abc"), derive_seed(7, "abc"));
  EXPECT_NE(derive_seed(7, "abc"), derive_seed(8, "abc"));
  EXPECT_NE(derive_seed(7, "abc"), derive_seed(7, "abd"));
}

TEST(LeavesBaseline, DistinctInDocumentOrder) {
  const auto p = program_from("fusion ( <D4> <D5> ) ; compression ( <D2> ) ; ( <D4> )", 5);
  EXPECT_EQ(leaves_baseline(p), (std::vector<std::string>{"sentence 2", "sentence 4", "sentence 5"}));
}

TEST(TopkBaseline, UsesOverlapRanking) {
  Document d{"d", {"zzz", "cat dog", "dog", "qqq"}};
  EXPECT_EQ(topk_baseline(d, SummaryTarget{{"cat dog"}}, 1), (std::vector<std::string>{"cat dog"}));
  EXPECT_EQ(topk_baseline(d, SummaryTarget{{"cat dog"}}, 2), (std::vector<std::string>{"cat dog", "dog"}));
}

TEST(StructureStats, HandTally) {
  const std::vector<SummarizationProgram> ps{
      program_from("compression ( <D1> ) ; ( <D2> ) ; compression ( <D3> )", 4),
      program_from("fusion ( <D1> <D2> ) ; compression ( fusion ( <D3> <D4> ) )", 4),
      program_from("( <D1> ) ; compression ( <D1> )", 4),
  };
  const auto s = structure_stats(ps);
  EXPECT_EQ(s.programs, 3u);
  EXPECT_EQ(s.trees, 7u);
  using Row = std::pair<std::string, std::size_t>;
  EXPECT_EQ(s.signatures, (std::vector<Row>{{"compression ( · )", 3},
                                            {"( · )", 2},
                                            {"compression ( fusion ( · , · ) )", 1},
                                            {"fusion ( · , · )", 1}}));
  EXPECT_EQ(s.heights, (std::map<int, std::size_t>{{0, 2}, {1, 4}, {2, 1}}));
  EXPECT_EQ(s.distinct_leaves, (std::map<std::size_t, std::size_t>{{1, 1}, {3, 1}, {4, 1}}));

  const auto j = stats_to_json(s);
  EXPECT_EQ(j["trees"], 7);
  EXPECT_NEAR(j["signatures"][0]["percent"].get<double>(), 300.0 / 7.0, 1e-9);
  const auto table = stats_to_table(s);
  EXPECT_NE(table.find("compression ( fusion ( · , · ) )"), std::string::npos);

  const auto dist = distribution_from_programs(ps);
  EXPECT_EQ(dist.source, StructureDistribution::Source::computed_from_corpus);
  EXPECT_NO_THROW(check_distribution(dist));
  EXPECT_NEAR(dist.entries[0].probability, 3.0 / 7.0, 1e-15);
}

TEST(StructureStats, Empty) {
  const auto s = structure_stats({});
  EXPECT_EQ(s.programs, 0u);
  EXPECT_TRUE(s.signatures.empty());
  EXPECT_EQ(stats_to_json(s)["programs"], 0);
  EXPECT_NO_THROW(stats_to_table(s));
}
