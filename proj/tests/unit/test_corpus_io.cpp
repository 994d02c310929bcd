#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "spforge/corpus_io.hpp"
#include "spforge/dsl.hpp"
#include "synthetic.hpp"

using namespace spforge;
using nlohmann::json;

TEST(LoadCorpus, ListAndRawDocuments) {
  std::istringstream in(
      R"({"id":"a","document":["One.","Two."],"summary":["One."],"extracted":[2]})"
      "\n\n"
      R"({"id":"b","document":"Dr. Smith left. He came back!","segment":true})"
      "\n");
  const auto rs = load_corpus(in);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0].document.id, "a");
  EXPECT_EQ(rs[0].summary->sentences, (std::vector<std::string>{"One."}));
  EXPECT_EQ(*rs[0].extracted, (std::vector<std::size_t>{1}));
  EXPECT_EQ(rs[1].document.sentences, (std::vector<std::string>{"Dr. Smith left.", "He came back!"}));
  EXPECT_FALSE(rs[1].summary);

  std::ostringstream out;
  save_corpus(out, rs);
  std::istringstream back(out.str());
  const auto again = load_corpus(back);
  EXPECT_EQ(record_to_json(again[0]), record_to_json(rs[0]));
  EXPECT_EQ(again[0].extracted, rs[0].extracted);
}

TEST(LoadCorpus, ErrorsCarryLineNumbers) {
  const std::pair<std::string, std::size_t> cases[] = {
      {"{\"id\":\"a\",\"document\":[\"x\"]}\n{oops", 2},
      {"\n\n{\"document\":[\"x\"]}", 3},
      {"{\"id\":\"a\",\"document\":[]}", 1},
      {"{\"id\":\"a\",\"document\":[\"x\", 3]}", 1},
      {"{\"id\":\"a\",\"document\":\"raw text.\"}", 1},
      {"{\"id\":\"a\",\"document\":[\"x\"],\"summary\":[]}", 1},
      {"{\"id\":\"a\",\"document\":[\"x\"],\"extracted\":[2]}", 1},
      {"{\"id\":\"a\",\"document\":[\"x\"],\"extracted\":[0]}", 1},
      {"{\"id\":\"a\",\"document\":[\"x\"]}\n{\"id\":\"a\",\"document\":[\"y\"]}", 2},
      {"[1,2]", 1},
      {"{\"id\":\"a\",\"document\":[\" \"]}", 1},
  };
  for (const auto& [text, line] : cases) {
    std::istringstream in(text);
    try {
      load_corpus(in);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const MalformedLine& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  }
}

TEST(Segment, Examples) {
  using V = std::vector<std::string>;
  EXPECT_EQ(segment("A. B."), (V{"A.", "B."}));
  EXPECT_EQ(segment("Dr. Smith left."), (V{"Dr. Smith left."}));
  EXPECT_EQ(segment(""), V{});
  EXPECT_EQ(segment("   "), V{});
  EXPECT_EQ(segment("It costs 3.5 dollars. Really?  Yes!"), (V{"It costs 3.5 dollars.", "Really?", "Yes!"}));
  EXPECT_EQ(segment("He said \"stop.\" Then he left."), (V{"He said \"stop.\"", "Then he left."}));
  EXPECT_EQ(segment("prices fell. investors fled."), (V{"prices fell. investors fled."}));
  EXPECT_EQ(segment("The U.S. Army moved. 2020 was odd."), (V{"The U.S. Army moved.", "2020 was odd."}));
  EXPECT_EQ(segment("Wait... What?"), (V{"Wait...", "What?"}));
}

namespace {

NodePtr random_tree(const SkeletonNode& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0, 1);
  const std::string text = "text " + std::to_string(rng() % 1000) + " \"quoted\" \xc3\xa9";
  std::optional<double> score;
  if (rng() % 3) score = unit(rng);
  if (s.is_leaf()) return make_leaf(s.leaf, text, score);
  std::vector<NodePtr> kids;
  for (const auto& c : s.children) kids.push_back(random_tree(c, rng));
  return make_node(*s.kind, kids, text, score);
}

}  // namespace

TEST(ProgramRecords, RoundTripRandom) {
  std::uint64_t state = 11;
  std::mt19937_64 rng(5);
  std::vector<ProgramRecord> records;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t doc_size = 1 + rng() % 12;
    const auto sk = fixtures::random_skeleton(state, doc_size);
    SummarizationProgram p;
    for (std::size_t t = 0; t < sk.trees.size(); ++t) p.trees.push_back({random_tree(sk.trees[t], rng), t});
    SummaryTarget ref{{"text 1", "text 2"}};
    auto r = make_program_record("r" + std::to_string(i), p, (i % 2) ? &ref : nullptr,
                                 static_cast<double>(rng() % 100000) / 7.0, json{{"k", i}});
    if (i % 5 == 0)
      r.faithfulness_annotations = std::vector<FaithfulnessAnnotation>{
          {0, "0", {ModuleKind::fusion, ModuleKind::paraphrase}, i % 10 == 0}};
    records.push_back(std::move(r));
  }
  std::ostringstream out;
  save_programs(out, records);
  std::istringstream in(out.str());
  const auto back = load_programs(in);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_TRUE(back[i] == records[i]) << i;
}

TEST(ProgramRecords, MetricsRecomputable) {
  Document d{"d", {"The cat sat.", "A dog barked."}};
  SummaryTarget ref{{"The cat sat down."}};
  SummarizationProgram p{"d", {{make_leaf(0, d.sentences[0]), 0}}};
  const auto r = make_program_record("d", p, &ref, 1.0, json::object());
  ASSERT_TRUE(r.metrics);
  EXPECT_EQ(*r.metrics, metrics_from(score_summary(r.summary, ref.sentences)));
  EXPECT_EQ(r.dsl, "( <D1> )");
  const auto j = program_record_to_json(r);
  EXPECT_EQ(j["nodes"][0]["id"], "D1");
  EXPECT_EQ(j["nodes"][0]["kind"], "leaf");
  EXPECT_TRUE(j["nodes"][0]["score"].is_null());
}

TEST(ProgramRecords, RejectsInconsistentLines) {
  SummarizationProgram p{"d", {{make_node(ModuleKind::compression, {make_leaf(1, "b c")}, "b"), 0}}};
  const auto good = program_record_to_json(make_program_record("d", p, nullptr, 0, json::object()));
  const auto line_of = [](const json& j) { return j.dump() + "\n"; };
  auto bad_dsl = good;
  bad_dsl["dsl"] = "compression ( <D1> )";
  auto broken_dsl = good;
  broken_dsl["dsl"] = "compression ( <D2> ";
  auto bad_summary = good;
  bad_summary["summary"] = {"x"};
  auto bad_arity = good;
  bad_arity["nodes"][0]["kind"] = "fusion";
  bad_arity["dsl"] = "fusion ( <D2> )";
  for (const auto& j : {bad_dsl, broken_dsl, bad_summary, bad_arity}) {
    std::istringstream in(line_of(good) + line_of(j));
    try {
      load_programs(in);
      ADD_FAILURE() << j.dump();
    } catch (const MalformedLine& e) {
      EXPECT_EQ(e.line(), 2u);
    }
  }
  std::istringstream ok(line_of(good));
  EXPECT_EQ(load_programs(ok).size(), 1u);
}
