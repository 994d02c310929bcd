#pragma once

// JSONL persistence.
//
// Corpus line:  {"id", "document": [sentences] | "raw text", "segment": bool,
//                "summary": [sentences]?, "extracted": [1-based ids]?}
// Program line: {"id", "dsl", "nodes", "summary", "metrics", "timing_ms",
//                "config", "faithfulness_annotations"?}

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spforge/program.hpp"
#include "spforge/rouge.hpp"

namespace spforge {

struct CorpusRecord {
  std::string id;
  Document document;
  std::optional<SummaryTarget> summary;
  // 0-based in memory, 1-based on disk.
  std::optional<std::vector<std::size_t>> extracted;
};

// Throws InputError describing the first schema problem.
CorpusRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const CorpusRecord& record);

// One record per line; blank lines are skipped. Throws MalformedLine.
std::vector<CorpusRecord> load_corpus(std::istream& in);
void save_corpus(std::ostream& out, const std::vector<CorpusRecord>& records);

// Approximate sentence splitter: breaks after '.', '?' or '!' (plus closing
// quotes/brackets) when followed by whitespace and an uppercase letter, digit
// or opening quote, except after a known abbreviation.
std::vector<std::string> segment(std::string_view raw);

struct FaithfulnessAnnotation {
  std::size_t tree = 0;
  std::string path;  // "0" is the root, "0.1" its second child
  std::vector<ModuleKind> performs;
  bool non_factual = false;

  bool operator==(const FaithfulnessAnnotation&) const = default;
};

struct ProgramMetrics {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double rougeLsum = 0.0;

  bool operator==(const ProgramMetrics&) const = default;
};

ProgramMetrics metrics_from(const RougeScores& scores);

struct ProgramRecord {
  std::string id;
  std::string dsl;
  SummarizationProgram program;
  std::vector<std::string> summary;
  std::optional<ProgramMetrics> metrics;
  double timing_ms = 0.0;
  nlohmann::json config = nlohmann::json::object();
  std::optional<std::vector<FaithfulnessAnnotation>> faithfulness_annotations;
};

// Structure, texts and scores of every node, plus all scalar fields.
bool operator==(const ProgramRecord& a, const ProgramRecord& b);

// Fills dsl and summary from the program; metrics when a reference exists.
ProgramRecord make_program_record(std::string id, SummarizationProgram program,
                                  const SummaryTarget* reference, double timing_ms,
                                  nlohmann::json config,
                                  const TokenizerConfig& tokenizer = {});

nlohmann::json node_to_json(const SPNode& node);
NodePtr node_from_json(const nlohmann::json& j);

nlohmann::json program_record_to_json(const ProgramRecord& record);
// Throws InputError when the record is inconsistent (dsl does not parse or
// disagrees with the nodes, nodes fail validation, summary != roots).
ProgramRecord program_record_from_json(const nlohmann::json& j);

void save_programs(std::ostream& out, const std::vector<ProgramRecord>& records);
std::vector<ProgramRecord> load_programs(std::istream& in);

}  // namespace spforge
