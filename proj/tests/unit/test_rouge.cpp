#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spforge/errors.hpp"
#include "spforge/rouge.hpp"

using namespace spforge;
using spforge::fixtures::naive_rouge_l;
using spforge::fixtures::naive_rouge_n;

namespace {

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, int alphabet) {
  std::vector<std::string> out(rng() % (max_len + 1));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + rng() % alphabet));
  return out;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("The U.S. economy, in 2019!"),
            (std::vector<std::string>{"the", "u", "s", "economy", "in", "2019"}));
  EXPECT_TRUE(tokenize("  ...  ").empty());
}

TEST(Tokenize, StemsOnlyLongTokens) {
  TokenizerConfig c;
  c.use_stemmer = true;
  EXPECT_EQ(tokenize("running cats ran", c), (std::vector<std::string>{"run", "cat", "ran"}));
}

TEST(PorterStem, ClassicCases) {
  EXPECT_EQ(porter_stem("caresses"), "caress");
  EXPECT_EQ(porter_stem("ponies"), "poni");
  EXPECT_EQ(porter_stem("relational"), "relat");
  EXPECT_EQ(porter_stem("hopping"), "hop");
  EXPECT_EQ(porter_stem("generalizations"), "gener");
  EXPECT_EQ(porter_stem("sky"), "sky");
}

TEST(RougeN, QuickBrownFox) {
  const auto r1 = rouge_n("The quick brown dog jumps on the log.",
                          "The quick brown fox jumps over the lazy dog", 1);
  EXPECT_DOUBLE_EQ(r1.precision, 6.0 / 8);
  EXPECT_DOUBLE_EQ(r1.recall, 6.0 / 9);
  const auto r2 = rouge_n("The quick brown dog jumps on the log.",
                          "The quick brown fox jumps over the lazy dog", 2);
  EXPECT_DOUBLE_EQ(r2.precision, 2.0 / 7);
  EXPECT_DOUBLE_EQ(r2.recall, 2.0 / 8);
}

TEST(RougeN, ClipsRepeatedNgrams) {
  const auto r = rouge_n("the the the", "the cat", 1);
  EXPECT_DOUBLE_EQ(r.precision, 1.0 / 3);
  EXPECT_DOUBLE_EQ(r.recall, 1.0 / 2);
}

TEST(RougeN, RejectsZeroOrder) { EXPECT_THROW(rouge_n("a", "a", 0), InvalidArgument); }

TEST(RougeN, EmptySidesScoreZero) {
  EXPECT_DOUBLE_EQ(rouge_n("", "a b", 1).f1, 0.0);
  EXPECT_DOUBLE_EQ(rouge_n("a b", "", 1).f1, 0.0);
  EXPECT_DOUBLE_EQ(rouge_n("a", "a", 2).f1, 0.0);
}

TEST(RougeL, QuickBrownFox) {
  const auto r = rouge_l("The quick brown dog jumps on the log.",
                         "The quick brown fox jumps over the lazy dog");
  EXPECT_DOUBLE_EQ(r.precision, 5.0 / 8);
  EXPECT_DOUBLE_EQ(r.recall, 5.0 / 9);
}

TEST(RougeL, IdentityIsOne) {
  EXPECT_DOUBLE_EQ(rouge_l("police arrested a suspect", "Police arrested a suspect.").f1, 1.0);
}

TEST(RougeOracle, MatchesNaiveCountingOnRandomPairs) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto a = random_tokens(rng, 20, 6);
    const auto b = random_tokens(rng, 20, 6);
    for (int n = 1; n <= 3; ++n) {
      const auto got = rouge_n(a, b, n);
      const auto want = naive_rouge_n(a, b, static_cast<std::size_t>(n));
      EXPECT_NEAR(got.precision, want.p, 1e-12);
      EXPECT_NEAR(got.recall, want.r, 1e-12);
      EXPECT_NEAR(got.f1, want.f, 1e-12);
    }
    const auto got = rouge_l(a, b);
    const auto want = naive_rouge_l(a, b);
    EXPECT_NEAR(got.precision, want.p, 1e-12);
    EXPECT_NEAR(got.recall, want.r, 1e-12);
    EXPECT_NEAR(got.f1, want.f, 1e-12);
  }
}

TEST(RougeLsum, UnionLcsTextbookExample) {
  // Reference w1..w5 against two candidate sentences; the union of the two
  // LCS matches covers w1 w2 w3 w5.
  const auto r = rouge_lsum({"w1 w2 w6 w7 w8", "w1 w3 w8 w9 w5"}, {"w1 w2 w3 w4 w5"});
  EXPECT_DOUBLE_EQ(r.recall, 4.0 / 5);
  EXPECT_DOUBLE_EQ(r.precision, 4.0 / 10);
}

TEST(RougeLsum, HitsAreClippedByCandidateCounts) {
  // Both reference sentences want the single candidate "a".
  const auto r = rouge_lsum({"a"}, {"a b", "a c"});
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0 / 4);
}

TEST(RougeLsum, SingleSentenceEqualsRougeL) {
  const std::string c = "the council will vote next week on the plan";
  const std::string ref = "next week the council votes on a plan";
  EXPECT_DOUBLE_EQ(rouge_lsum({c}, {ref}).f1, rouge_l(c, ref).f1);
}

TEST(Overlap, FractionOfDistinctSentenceTypes) {
  EXPECT_DOUBLE_EQ(unigram_overlap_fraction("the cat sat", "a cat sat down"), 2.0 / 3);
  EXPECT_DOUBLE_EQ(unigram_overlap_fraction("cat cat dog", "cat"), 1.0 / 2);
  EXPECT_DOUBLE_EQ(unigram_overlap_fraction("", "cat"), 0.0);
}

TEST(Metric, NamesRoundTrip) {
  for (auto m : {Metric::rouge1, Metric::rouge2, Metric::rougeL})
    EXPECT_EQ(parse_metric(to_string(m)), m);
  EXPECT_FALSE(parse_metric("bleu"));
}

TEST(TargetScorer, AgreesWithDirectScoring) {
  const TargetScorer s("officials expect the council to vote", Metric::rouge2);
  EXPECT_DOUBLE_EQ(s("the council will vote"), rouge_n("the council will vote",
                                                       "officials expect the council to vote", 2).f1);
}

TEST(ScoreSummary, IdentityIsPerfect) {
  const std::vector<std::string> s{"The mayor spoke.", "Critics objected."};
  const auto r = score_summary(s, s);
  EXPECT_DOUBLE_EQ(r.rouge1.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.rouge2.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.rougeL.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.rougeLsum.f1, 1.0);
}

TEST(ScoreSummary, JoinedTextForSentenceFreeMetrics) {
  const std::vector<std::string> c{"a b", "c d"};
  const std::vector<std::string> r{"a b c d"};
  EXPECT_DOUBLE_EQ(score_summary(c, r).rouge2.f1, 1.0);
}
