#include "spforge/corpus_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <ostream>
#include <set>

#include "spforge/dsl.hpp"
#include "spforge/errors.hpp"

namespace spforge {

using nlohmann::json;

namespace {

std::vector<std::string> string_list(const json& j, const char* field) {
  if (!j.is_array()) throw InputError(std::string(field) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw InputError(std::string(field) + " must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

constexpr std::array<std::string_view, 40> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "inc", "ltd", "co", "corp", "gen", "gov", "sen", "rep", "lt", "col",
    "sgt", "capt", "mt", "no", "jan", "feb", "mar", "apr", "aug", "sep",
    "sept", "oct", "nov", "dec", "u.s", "u.k", "e.g", "i.e", "fig", "approx"};

bool is_abbreviation(std::string_view word) {
  std::string w;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '.')
      w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!w.empty() && w.back() == '.') w.pop_back();
  while (!w.empty() && w.front() == '.') w.erase(w.begin());
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), w) != kAbbreviations.end();
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

std::string node_kind_name(const SPNode& n) {
  return n.is_leaf() ? std::string("leaf") : std::string(to_string(*n.kind));
}

bool same_nodes(const SPNode& a, const SPNode& b) {
  if (a.kind != b.kind || a.leaf_index != b.leaf_index || a.text != b.text ||
      a.score != b.score || a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!a.children[i] || !b.children[i]) return false;
    if (!same_nodes(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

json metrics_to_json(const std::optional<ProgramMetrics>& m) {
  if (!m) return nullptr;
  return json{{"rouge1", m->rouge1}, {"rouge2", m->rouge2}, {"rougeL", m->rougeL},
              {"rougeLsum", m->rougeLsum}};
}

std::size_t max_leaf(const SPNode& n) {
  std::size_t m = n.leaf_index.value_or(0);
  for (const auto& c : n.children)
    if (c) m = std::max(m, max_leaf(*c));
  return m;
}

template <typename T, typename Parse>
std::vector<T> load_lines(std::istream& in, Parse&& parse) {
  std::vector<T> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; }))
      continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw MalformedLine(number, e.what());
    } catch (const InputError& e) {
      throw MalformedLine(number, e.what());
    }
  }
  return out;
}

}  // namespace

CorpusRecord record_from_json(const json& j) {
  if (!j.is_object()) throw InputError("record must be a JSON object");
  CorpusRecord r;
  const auto id = j.find("id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty())
    throw InputError("record needs a non-empty string \"id\"");
  r.id = id->get<std::string>();
  r.document.id = r.id;

  const auto doc = j.find("document");
  if (doc == j.end()) throw InputError("record \"" + r.id + "\" has no \"document\"");
  if (doc->is_string()) {
    if (!j.value("segment", false))
      throw InputError("raw-text document needs \"segment\": true");
    r.document.sentences = segment(doc->get<std::string>());
  } else {
    r.document.sentences = string_list(*doc, "document");
  }
  check_document(r.document);

  if (auto s = j.find("summary"); s != j.end() && !s->is_null()) {
    SummaryTarget target{string_list(*s, "summary")};
    if (target.sentences.empty()) throw InputError("summary must not be empty");
    r.summary = std::move(target);
  }
  if (auto e = j.find("extracted"); e != j.end() && !e->is_null()) {
    if (!e->is_array()) throw InputError("extracted must be an array of sentence numbers");
    std::vector<std::size_t> indices;
    for (const auto& v : *e) {
      if (!v.is_number_integer() || v.get<long long>() < 1 ||
          v.get<std::size_t>() > r.document.size())
        throw InputError("extracted entries must be 1-based sentence numbers within the document");
      indices.push_back(v.get<std::size_t>() - 1);
    }
    r.extracted = std::move(indices);
  }
  return r;
}

json record_to_json(const CorpusRecord& record) {
  json j{{"id", record.id}, {"document", record.document.sentences}};
  if (record.summary) j["summary"] = record.summary->sentences;
  if (record.extracted) {
    json ids = json::array();
    for (auto i : *record.extracted) ids.push_back(i + 1);
    j["extracted"] = ids;
  }
  return j;
}

std::vector<CorpusRecord> load_corpus(std::istream& in) {
  std::set<std::string> ids;
  auto records = load_lines<CorpusRecord>(in, [&](const json& j) {
    auto r = record_from_json(j);
    if (!ids.insert(r.id).second) throw InputError("duplicate id \"" + r.id + "\"");
    return r;
  });
  return records;
}

void save_corpus(std::ostream& out, const std::vector<CorpusRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<std::string> segment(std::string_view raw) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    auto s = normalize_whitespace(raw.substr(start, end - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = end;
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c != '.' && c != '?' && c != '!') continue;
    std::size_t end = i + 1;
    while (end < raw.size() && (is_closer(raw[end]) || raw[end] == '.' || raw[end] == '?' || raw[end] == '!'))
      ++end;
    std::size_t next = end;
    if (next >= raw.size() || !std::isspace(static_cast<unsigned char>(raw[next]))) continue;
    while (next < raw.size() && std::isspace(static_cast<unsigned char>(raw[next]))) ++next;
    if (next >= raw.size()) continue;
    const char n = raw[next];
    if (!(std::isupper(static_cast<unsigned char>(n)) || std::isdigit(static_cast<unsigned char>(n)) ||
          is_opener(n)))
      continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > start && !std::isspace(static_cast<unsigned char>(raw[w - 1]))) --w;
      if (is_abbreviation(raw.substr(w, i + 1 - w))) continue;
    }
    emit(end);
    i = end - 1;
  }
  emit(raw.size());
  return out;
}

ProgramMetrics metrics_from(const RougeScores& s) {
  return {s.rouge1.f1, s.rouge2.f1, s.rougeL.f1, s.rougeLsum.f1};
}

bool operator==(const ProgramRecord& a, const ProgramRecord& b) {
  if (a.id != b.id || a.dsl != b.dsl || a.summary != b.summary || a.metrics != b.metrics ||
      a.timing_ms != b.timing_ms || a.config != b.config ||
      a.faithfulness_annotations != b.faithfulness_annotations ||
      a.program.document_id != b.program.document_id ||
      a.program.trees.size() != b.program.trees.size())
    return false;
  for (std::size_t i = 0; i < a.program.trees.size(); ++i) {
    const auto& ta = a.program.trees[i];
    const auto& tb = b.program.trees[i];
    if (ta.target_index != tb.target_index || !ta.root || !tb.root) return false;
    if (!same_nodes(*ta.root, *tb.root)) return false;
  }
  return true;
}

ProgramRecord make_program_record(std::string id, SummarizationProgram program,
                                  const SummaryTarget* reference, double timing_ms,
                                  json config, const TokenizerConfig& tokenizer) {
  ProgramRecord r;
  r.id = std::move(id);
  program.document_id = r.id;
  r.dsl = serialize(program);
  r.summary = concat_summary(program);
  if (reference) r.metrics = metrics_from(score_summary(r.summary, reference->sentences, tokenizer));
  r.program = std::move(program);
  r.timing_ms = timing_ms;
  r.config = std::move(config);
  return r;
}

json node_to_json(const SPNode& node) {
  json j{{"kind", node_kind_name(node)}, {"text", node.text}};
  j["score"] = node.score ? json(*node.score) : json(nullptr);
  if (node.leaf_index) j["id"] = sentence_id(*node.leaf_index);
  if (!node.children.empty()) {
    json children = json::array();
    for (const auto& c : node.children) children.push_back(c ? node_to_json(*c) : json(nullptr));
    j["children"] = children;
  }
  return j;
}

NodePtr node_from_json(const json& j) {
  if (!j.is_object()) throw InputError("node must be an object");
  const auto kind = j.at("kind").get<std::string>();
  const auto text = j.at("text").get<std::string>();
  std::optional<double> score;
  if (auto s = j.find("score"); s != j.end() && !s->is_null()) score = s->get<double>();
  if (kind == "leaf") {
    const auto id = j.at("id").get<std::string>();
    auto parsed = parse("( <" + id + "> )", static_cast<std::size_t>(-1) / 2);
    return make_leaf(parsed.trees.at(0).leaf, text, score);
  }
  const auto module = parse_module_kind(kind);
  if (!module) throw InputError("unknown node kind \"" + kind + "\"");
  std::vector<NodePtr> children;
  if (auto c = j.find("children"); c != j.end()) {
    if (!c->is_array()) throw InputError("children must be an array");
    for (const auto& child : *c) children.push_back(node_from_json(child));
  }
  return make_node(*module, std::move(children), text, score);
}

json program_record_to_json(const ProgramRecord& record) {
  json nodes = json::array();
  for (const auto& t : record.program.trees) nodes.push_back(t.root ? node_to_json(*t.root) : json(nullptr));
  json j{{"id", record.id},
         {"dsl", record.dsl},
         {"nodes", nodes},
         {"summary", record.summary},
         {"metrics", metrics_to_json(record.metrics)},
         {"timing_ms", record.timing_ms},
         {"config", record.config}};
  if (record.faithfulness_annotations) {
    json anns = json::array();
    for (const auto& a : *record.faithfulness_annotations) {
      json performs = json::array();
      for (auto k : a.performs) performs.push_back(to_string(k));
      anns.push_back(json{{"tree", a.tree}, {"path", a.path}, {"performs", performs},
                          {"non_factual", a.non_factual}});
    }
    j["faithfulness_annotations"] = anns;
  }
  return j;
}

ProgramRecord program_record_from_json(const json& j) {
  if (!j.is_object()) throw InputError("program record must be an object");
  ProgramRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.dsl = j.at("dsl").get<std::string>();
    r.summary = j.at("summary").get<std::vector<std::string>>();
    r.timing_ms = j.at("timing_ms").get<double>();
    r.config = j.value("config", json::object());
    if (const auto& m = j.at("metrics"); !m.is_null()) {
      r.metrics = ProgramMetrics{m.at("rouge1").get<double>(), m.at("rouge2").get<double>(),
                                 m.at("rougeL").get<double>(), m.at("rougeLsum").get<double>()};
    }
    r.program.document_id = r.id;
    const auto& nodes = j.at("nodes");
    if (!nodes.is_array()) throw InputError("nodes must be an array");
    for (std::size_t t = 0; t < nodes.size(); ++t)
      r.program.trees.push_back(SPTree{node_from_json(nodes[t]), t});
    if (auto a = j.find("faithfulness_annotations"); a != j.end() && !a->is_null()) {
      std::vector<FaithfulnessAnnotation> anns;
      for (const auto& item : *a) {
        FaithfulnessAnnotation ann;
        ann.tree = item.at("tree").get<std::size_t>();
        ann.path = item.at("path").get<std::string>();
        for (const auto& k : item.at("performs")) {
          auto kind = parse_module_kind(k.get<std::string>());
          if (!kind) throw InputError("unknown module kind in annotation");
          ann.performs.push_back(*kind);
        }
        ann.non_factual = item.value("non_factual", false);
        if (ann.tree >= r.program.trees.size())
          throw InputError("annotation refers to a missing tree");
        anns.push_back(std::move(ann));
      }
      r.faithfulness_annotations = std::move(anns);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("program record: ") + e.what());
  }

  std::size_t doc_size = 1;
  for (const auto& t : r.program.trees) doc_size = std::max(doc_size, max_leaf(*t.root) + 1);
  if (auto diags = validate_program(r.program, doc_size); !diags.empty()) {
    throw InputError("node dump invalid: " + std::string(to_string(diags.front().code)) + " at " +
                     diags.front().path + ": " + diags.front().message);
  }
  const auto skeleton = parse(r.dsl, doc_size);  // ParseError is an InputError
  if (!(skeleton == skeleton_of(r.program))) throw InputError("dsl disagrees with nodes");
  if (concat_summary(r.program) != r.summary) throw InputError("summary disagrees with root texts");
  return r;
}

void save_programs(std::ostream& out, const std::vector<ProgramRecord>& records) {
  for (const auto& r : records) out << program_record_to_json(r).dump() << '\n';
}

std::vector<ProgramRecord> load_programs(std::istream& in) {
  return load_lines<ProgramRecord>(in, [](const json& j) { return program_record_from_json(j); });
}

}  // namespace spforge
