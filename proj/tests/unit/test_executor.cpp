#include <gtest/gtest.h>

#include "spforge/dsl.hpp"
#include "spforge/executor.hpp"
#include "spforge/search.hpp"

using namespace spforge;

namespace {

// Returns "<kind>[inputs]#i" for i < max_candidates and logs batch sizes.
class EchoBackend : public ModuleBackend {
 public:
  CandidateSet execute(const ModuleRequest& r) override {
    check_request(r);
    if (fail_on && r.inputs[0] == *fail_on) throw EmptyGeneration("nope");
    std::string joined;
    for (const auto& in : r.inputs) joined += (joined.empty() ? "" : "|") + in;
    CandidateSet set;
    for (std::size_t i = 0; i < r.max_candidates; ++i)
      set.candidates.push_back(std::string(to_string(r.kind)) + "[" + joined + "]#" + std::to_string(i));
    return set;
  }
  std::vector<ModuleResult> execute_batch(std::span<const ModuleRequest> requests) override {
    batches.push_back(requests.size());
    return ModuleBackend::execute_batch(requests);
  }
  std::string name() const override { return "echo"; }

  std::vector<std::size_t> batches;
  std::optional<std::string> fail_on;
};

const Document kDoc{"doc", {"s one", "s two", "s three", "s four"}};

ExecutionConfig gens(std::size_t g) {
  ExecutionConfig c;
  c.generations = g;
  return c;
}

}  // namespace

TEST(ExecuteSkeleton, BottomUpTop1) {
  EchoBackend b;
  const auto sk = parse("fusion ( compression ( <D1> ) <D3> ) ; ( <D2> )", kDoc.size());
  const auto r = execute_skeleton(sk, kDoc, b, gens(2));
  ASSERT_EQ(r.summary.size(), 2u);
  EXPECT_EQ(r.summary[0], "fusion[compression[s one]#0|s three]#0");
  EXPECT_EQ(r.summary[1], "s two");
  EXPECT_EQ(serialize(r.program), serialize(sk));
  EXPECT_TRUE(validate_program(r.program, kDoc.size()).empty());
  EXPECT_FALSE(r.program.trees[0].root->score.has_value());
}

TEST(ExecuteSkeleton, OneBatchPerHeightAcrossTrees) {
  EchoBackend b;
  const auto sk = parse(
      "fusion ( compression ( <D1> ) <D2> ) ; paraphrase ( <D3> ) ; compression ( paraphrase ( <D4> ) )",
      kDoc.size());
  execute_skeleton(sk, kDoc, b, gens(1));
  EXPECT_EQ(b.batches, (std::vector<std::size_t>{3, 2}));
}

TEST(ExecuteSkeleton, BestVsTargetPicksClosestCandidate) {
  EchoBackend b;
  const auto sk = parse("compression ( <D1> )", kDoc.size());
  SummaryTarget t{{"compression s one 2"}};
  auto c = gens(4);
  c.selection = CandidateSelection::best_vs_target;
  const auto r = execute_skeleton(sk, kDoc, b, c, &t);
  EXPECT_EQ(r.summary[0], "compression[s one]#2");
  EXPECT_DOUBLE_EQ(*r.program.trees[0].root->score, 1.0);
  EXPECT_TRUE(r.program.trees[0].root->children[0]->score.has_value());
}

TEST(ExecuteSkeleton, Errors) {
  EchoBackend b;
  const auto sk = parse("compression ( <D1> ) ; ( <D2> )", kDoc.size());
  auto c = gens(2);
  c.selection = CandidateSelection::best_vs_target;
  SummaryTarget one{{"x"}};
  EXPECT_THROW(execute_skeleton(sk, kDoc, b, c, &one), InvalidArgument);
  EXPECT_THROW(execute_skeleton(sk, Document{"d", {"only"}}, b, gens(2)), InvalidArgument);
  EXPECT_THROW(execute_skeleton(ProgramSkeleton{}, kDoc, b, gens(2)), InvalidArgument);
  EXPECT_THROW(execute_skeleton(sk, kDoc, b, gens(0)), InvalidArgument);

  ProgramSkeleton bad;
  bad.trees.push_back(SkeletonNode{ModuleKind::fusion, 0, {SkeletonNode{std::nullopt, 0, {}}}});
  EXPECT_THROW(execute_skeleton(bad, kDoc, b, gens(2)), InvalidArgument);

  b.fail_on = "s one";
  EXPECT_THROW(execute_skeleton(sk, kDoc, b, gens(2)), EmptyGeneration);
}

TEST(ExecuteSkeleton, NormalizesWhitespace) {
  class Spacey : public ModuleBackend {
   public:
    CandidateSet execute(const ModuleRequest&) override { return {{"  a   b "}}; }
    std::string name() const override { return "spacey"; }
  } b;
  const auto sk = parse("paraphrase ( <D1> )", kDoc.size());
  EXPECT_EQ(execute_skeleton(sk, kDoc, b, gens(1)).summary[0], "a b");
  auto c = gens(1);
  c.normalize_whitespace = false;
  EXPECT_EQ(execute_skeleton(sk, kDoc, b, c).summary[0], "  a   b ");
}

TEST(ExecuteSkeleton, ReproducesSearchTexts) {
  ReferenceBackend b;
  Document doc{"d",
               {"The mayor of the city, who was elected last year, announced a new budget on Monday.",
                "The budget includes funding for schools and roads.",
                "Critics said the plan was too expensive.",
                "Officials expect the council to vote next week."}};
  SummaryTarget s{{"The mayor announced a budget for schools.", "Critics said the plan was expensive."}};
  SearchConfig sc;
  sc.generations = 3;
  const auto found = sp_search(doc, s, sc, b);
  ExecutionConfig ec;
  ec.generations = 3;
  ec.selection = CandidateSelection::best_vs_target;
  const auto r = execute_skeleton(skeleton_of(found.program), doc, b, ec, &s);
  EXPECT_EQ(r.summary, concat_summary(found.program));
}

TEST(FirstWellformed, TakesFirstValidCandidate) {
  EchoBackend b;
  const auto r = execute_first_wellformed(
      {"fusion ( <D1> )", "compression ( <D9> )", "paraphrase ( <D2> )", "( <D1> )"}, kDoc, b, {0});
  ASSERT_TRUE(r.chosen);
  EXPECT_EQ(*r.chosen, 2u);
  EXPECT_EQ(r.summary, (std::vector<std::string>{"paraphrase[s two]#0"}));
  EXPECT_TRUE(r.execution);
}

TEST(FirstWellformed, FallsBackInDocumentOrder) {
  EchoBackend b;
  const auto r = execute_first_wellformed({"fusion (", "", "banana"}, kDoc, b, {3, 1, 3});
  EXPECT_FALSE(r.chosen);
  EXPECT_FALSE(r.execution);
  EXPECT_EQ(r.summary, (std::vector<std::string>{"s two", "s four"}));
  EXPECT_THROW(execute_first_wellformed({}, kDoc, b, {7}), InvalidArgument);
}

TEST(FirstWellformed, AlwaysTop1) {
  EchoBackend b;
  ExecutionConfig c = gens(3);
  c.selection = CandidateSelection::best_vs_target;
  const auto r = execute_first_wellformed({"compression ( <D4> )"}, kDoc, b, {}, c);
  EXPECT_EQ(r.summary[0], "compression[s four]#0");
}
