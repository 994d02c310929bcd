#pragma once

// ROUGE-N, ROUGE-L and summary-level ROUGE-Lsum over a simple tokenizer, plus
// the unigram-overlap fraction used to rank document sentences. All scores
// are in [0, 1].

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spforge {

struct TokenizerConfig {
  bool lowercase = true;
  // Replace every non [A-Za-z0-9] byte with a space before splitting.
  bool strip_non_alphanumeric = true;
  // Porter stemming for tokens longer than three characters.
  bool use_stemmer = false;
};

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config = {});

std::string porter_stem(std::string_view word);

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static MetricTriple from_counts(double hits, double candidate_total,
                                  double reference_total);
  static MetricTriple from_pr(double precision, double recall);
};

using TokenSpan = std::span<const std::string>;

// Throws InvalidArgument if n < 1.
MetricTriple rouge_n(TokenSpan candidate, TokenSpan reference, int n);
MetricTriple rouge_n(std::string_view candidate, std::string_view reference,
                     int n, const TokenizerConfig& config = {});

MetricTriple rouge_l(TokenSpan candidate, TokenSpan reference);
MetricTriple rouge_l(std::string_view candidate, std::string_view reference,
                     const TokenizerConfig& config = {});

// Summary-level LCS: for every reference sentence, the union of its LCS
// token positions against each candidate sentence, with hits clipped by the
// token counts on both sides so precision stays within [0, 1].
MetricTriple rouge_lsum(const std::vector<std::string>& candidate_sentences,
                        const std::vector<std::string>& reference_sentences,
                        const TokenizerConfig& config = {});

double unigram_overlap_fraction(std::string_view sentence,
                                std::string_view summary,
                                const TokenizerConfig& config = {});

enum class Metric { rouge1, rouge2, rougeL };

std::string_view to_string(Metric metric);
std::optional<Metric> parse_metric(std::string_view name);

// F-measure of `metric` for candidate vs. a fixed target. The target is
// tokenized once; this is the scorer the search calls for every generation.
class TargetScorer {
 public:
  TargetScorer(std::string_view target, Metric metric,
               TokenizerConfig config = {});

  double operator()(std::string_view candidate) const;
  MetricTriple triple(std::string_view candidate) const;

  Metric metric() const { return metric_; }

 private:
  Metric metric_;
  TokenizerConfig config_;
  std::vector<std::string> target_tokens_;
};

struct RougeScores {
  MetricTriple rouge1;
  MetricTriple rouge2;
  MetricTriple rougeL;
  MetricTriple rougeLsum;
};

// R-1/R-2/R-L over the space-joined texts, R-Lsum over the sentence lists.
RougeScores score_summary(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference,
                          const TokenizerConfig& config = {});

std::string join_sentences(const std::vector<std::string>& sentences);

}  // namespace spforge
