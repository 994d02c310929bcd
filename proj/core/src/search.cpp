#include "spforge/search.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

namespace spforge {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool intersects(const SourceSet& a, const SourceSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i;
    else ++j;
  }
  return false;
}

std::string_view outcome_name(TraceNode::Outcome o) {
  switch (o) {
    case TraceNode::Outcome::retained: return "retained";
    case TraceNode::Outcome::not_improving: return "not_improving";
    case TraceNode::Outcome::duplicate: return "duplicate";
    case TraceNode::Outcome::failed: return "failed";
  }
  return "unknown";
}

// Mutable state of one tree search.
class TreeSearch {
 public:
  TreeSearch(const SearchConfig& config, ModuleBackend& backend,
             const TargetScorer& scorer)
      : config_(config), backend_(backend), scorer_(scorer) {}

  TreeSearchResult run(std::vector<NodePtr> leaves, std::size_t target_index) {
    const auto start = Clock::now();
    for (auto& leaf : leaves) {
      if (!leaf || !leaf->is_leaf()) throw InvalidArgument("search leaves must be leaf nodes");
      if (!leaf->score) leaf = make_leaf(*leaf->leaf_index, leaf->text, scorer_(leaf->text));
      add_node(leaf);
      trace_.leaf_scores.push_back(*leaf->score);
    }
    best_ = 0;
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (scores_[i] > scores_[best_]) best_ = i;

    std::vector<QueueItem> queue;
    for (std::size_t i = 0; i < nodes_.size(); ++i) expand(i, queue);

    while (!queue.empty()) queue = run_wave(std::move(queue));

    trace_.best_node = best_;
    trace_.seconds = seconds_since(start);
    return {SPTree{nodes_[best_], target_index}, std::move(trace_)};
  }

 private:
  void add_node(NodePtr node) {
    scores_.push_back(*node->score);
    visited_.insert(normalize_whitespace(node->text));
    available_.push_back(nodes_.size());
    nodes_.push_back(std::move(node));
  }

  void push_if_admissible(ModuleKind kind, std::size_t a, std::optional<std::size_t> b,
                          std::vector<QueueItem>& queue) {
    if (!backend_.supports(kind)) return;
    const SPNode* second = b ? nodes_[*b].get() : nullptr;
    if (!admissible(kind, *nodes_[a], second)) return;
    QueueItem item{a, b, kind, application_height(*nodes_[a], second), 0.0};
    if (item.height > config_.max_height) return;
    item.score = score_item(item, scores_);
    queue.push_back(item);
  }

  // Applications that use node `id` together with nodes already available.
  void expand(std::size_t id, std::vector<QueueItem>& queue) {
    push_if_admissible(ModuleKind::compression, id, std::nullopt, queue);
    push_if_admissible(ModuleKind::paraphrase, id, std::nullopt, queue);
    for (auto other : available_) {
      if (other == id) continue;
      if (other > id && nodes_[other]->is_leaf() && nodes_[id]->is_leaf()) continue;
      push_if_admissible(ModuleKind::fusion, other, id, queue);
      push_if_admissible(ModuleKind::fusion, id, other, queue);
    }
  }

  std::vector<QueueItem> run_wave(std::vector<QueueItem> queue) {
    const auto start = Clock::now();
    SearchWave wave;
    wave.queue_before = queue.size();
    std::stable_sort(queue.begin(), queue.end(), [](const QueueItem& x, const QueueItem& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.height < y.height;
    });
    if (queue.size() > config_.queue_size) queue.resize(config_.queue_size);

    std::vector<ModuleRequest> requests;
    requests.reserve(queue.size());
    for (const auto& item : queue) {
      ModuleRequest r{item.kind, {nodes_[item.s1]->text}, config_.generations};
      if (item.s2) r.inputs.push_back(nodes_[*item.s2]->text);
      requests.push_back(std::move(r));
    }
    auto results = backend_.execute_batch(requests);
    trace_.requests += requests.size();
    if (results.size() != requests.size())
      throw ProtocolError("backend batch result count mismatch");

    std::vector<QueueItem> next;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const auto& item = queue[i];
      TraceNode record;
      record.item = i;
      if (!results[i].ok()) {
        record.error = results[i].error;
        wave.generated.push_back(std::move(record));
        continue;
      }
      double score = 0.0;
      const auto pick = best_candidate(results[i].value, scorer_, &score);
      std::vector<NodePtr> operands{nodes_[item.s1]};
      if (item.s2) operands.push_back(nodes_[*item.s2]);
      auto node = make_node(item.kind, std::move(operands),
                            normalize_whitespace(results[i].value.candidates[pick]), score);
      record.text = node->text;
      record.score = score;

      const double operand_best = score_item(item, scores_);
      const bool improved = config_.strict_improvement ? score > operand_best : score >= operand_best;
      const auto id = nodes_.size();
      record.id = id;
      if (!improved) {
        record.outcome = TraceNode::Outcome::not_improving;
      } else if (visited_.count(node->text) > 0) {
        record.outcome = TraceNode::Outcome::duplicate;
      } else {
        record.outcome = TraceNode::Outcome::retained;
      }
      // Every materialized node gets an id so the trace can be replayed.
      scores_.push_back(score);
      nodes_.push_back(node);
      if (record.outcome == TraceNode::Outcome::retained) {
        visited_.insert(node->text);
        if (score > scores_[best_]) {
          best_ = id;
          wave.best_updates.push_back(id);
        }
        expand(id, next);
        available_.push_back(id);
      }
      wave.generated.push_back(std::move(record));
    }
    wave.executed = std::move(queue);
    wave.seconds = seconds_since(start);
    trace_.waves.push_back(std::move(wave));
    return next;
  }

  const SearchConfig& config_;
  ModuleBackend& backend_;
  const TargetScorer& scorer_;
  std::vector<NodePtr> nodes_;
  std::vector<double> scores_;
  std::vector<std::size_t> available_;
  std::set<std::string> visited_;
  std::size_t best_ = 0;
  SearchTrace trace_;
};

}  // namespace

void check_config(const SearchConfig& config) {
  if (config.top_k < 1) throw InvalidArgument("k must be at least 1");
  if (config.queue_size < 1) throw InvalidArgument("queue size must be at least 1");
  if (config.max_height < 0) throw InvalidArgument("max height must be non-negative");
  if (config.generations < 1) throw InvalidArgument("generations must be at least 1");
}

json config_to_json(const SearchConfig& config) {
  json j{{"k", config.top_k},
         {"max_height", config.max_height},
         {"generations", config.generations},
         {"metric", to_string(config.metric)},
         {"strict_improvement", config.strict_improvement},
         {"tokenizer",
          {{"lowercase", config.tokenizer.lowercase},
           {"strip_non_alphanumeric", config.tokenizer.strip_non_alphanumeric},
           {"use_stemmer", config.tokenizer.use_stemmer}}}};
  if (config.queue_size == kUnboundedQueue) j["queue_size"] = nullptr;
  else j["queue_size"] = config.queue_size;
  return j;
}

SearchConfig config_from_json(const json& j) {
  SearchConfig c;
  if (!j.is_object()) throw InvalidArgument("search config must be an object");
  try {
    c.top_k = j.value("k", c.top_k);
    if (auto it = j.find("queue_size"); it != j.end())
      c.queue_size = it->is_null() ? kUnboundedQueue : it->get<std::size_t>();
    c.max_height = j.value("max_height", c.max_height);
    c.generations = j.value("generations", c.generations);
    if (auto it = j.find("metric"); it != j.end()) {
      auto m = parse_metric(it->get<std::string>());
      if (!m) throw InvalidArgument("unknown metric " + it->dump());
      c.metric = *m;
    }
    c.strict_improvement = j.value("strict_improvement", c.strict_improvement);
    if (auto it = j.find("tokenizer"); it != j.end()) {
      c.tokenizer.lowercase = it->value("lowercase", c.tokenizer.lowercase);
      c.tokenizer.strip_non_alphanumeric =
          it->value("strip_non_alphanumeric", c.tokenizer.strip_non_alphanumeric);
      c.tokenizer.use_stemmer = it->value("use_stemmer", c.tokenizer.use_stemmer);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad search config: ") + e.what());
  }
  check_config(c);
  return c;
}

std::vector<std::size_t> select_top_k(const Document& doc, const SummaryTarget& summary,
                                      std::size_t k, const TokenizerConfig& tokenizer) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  std::vector<std::size_t> order(doc.size());
  std::iota(order.begin(), order.end(), 0);
  if (doc.size() <= k) return order;
  const auto summary_text = join_sentences(summary.sentences);
  std::vector<double> overlap(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i)
    overlap[i] = unigram_overlap_fraction(doc.sentences[i], summary_text, tokenizer);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return overlap[a] > overlap[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

int application_height(const SPNode& s1, const SPNode* s2) {
  return 1 + std::max(s1.height, s2 ? s2->height : 0);
}

Admissibility admissible(ModuleKind kind, const SPNode& s1, const SPNode* s2) {
  if ((kind == ModuleKind::fusion) != (s2 != nullptr))
    return {FilterRule::operand_shape, "fusion takes two operands, other modules one"};
  switch (kind) {
    case ModuleKind::compression:
      if (s1.kind == ModuleKind::compression)
        return {FilterRule::recompression, "a compressed sentence is not compressed again"};
      return {};
    case ModuleKind::paraphrase:
      if (s1.kind == ModuleKind::paraphrase)
        return {FilterRule::reparaphrase, "a paraphrased sentence is not paraphrased again"};
      return {};
    case ModuleKind::fusion:
      break;
  }
  if (intersects(s1.sources, s2->sources)) {
    if (!s1.is_leaf() && !s2->is_leaf())
      return {FilterRule::same_source, "both operands are generated from a shared sentence"};
    return {FilterRule::reused_sentence, "a document sentence would appear twice in the tree"};
  }
  if (s1.sources.empty() || s2->sources.empty() || s1.sources.front() >= s2->sources.front())
    return {FilterRule::temporal_order, "fusion operands must follow document order"};
  return {};
}

double score_item(const QueueItem& item, const std::vector<double>& node_scores) {
  double s = node_scores.at(item.s1);
  if (item.s2) s = std::max(s, node_scores.at(*item.s2));
  return s;
}

std::size_t best_candidate(const CandidateSet& set, const TargetScorer& scorer, double* score) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    const double s = scorer(normalize_whitespace(set.candidates[i]));
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  if (score) *score = std::max(best_score, 0.0);
  return best;
}

json trace_to_json(const SearchTrace& trace, bool include_timing) {
  json waves = json::array();
  for (const auto& w : trace.waves) {
    json executed = json::array();
    for (const auto& item : w.executed) {
      json e{{"kind", to_string(item.kind)}, {"s1", item.s1}, {"height", item.height},
             {"score", item.score}};
      e["s2"] = item.s2 ? json(*item.s2) : json(nullptr);
      executed.push_back(std::move(e));
    }
    json generated = json::array();
    for (const auto& g : w.generated) {
      json n{{"item", g.item}, {"outcome", outcome_name(g.outcome)}};
      n["id"] = g.id ? json(*g.id) : json(nullptr);
      if (g.outcome == TraceNode::Outcome::failed) n["error"] = g.error;
      else {
        n["text"] = g.text;
        n["score"] = g.score;
      }
      generated.push_back(std::move(n));
    }
    json wave{{"queue_before", w.queue_before}, {"executed", executed},
              {"generated", generated}, {"best_updates", w.best_updates}};
    if (include_timing) wave["seconds"] = w.seconds;
    waves.push_back(std::move(wave));
  }
  json out{{"leaf_scores", trace.leaf_scores}, {"waves", waves},
           {"best_node", trace.best_node}, {"requests", trace.requests}};
  if (include_timing) out["seconds"] = trace.seconds;
  return out;
}

TreeSearchResult search_tree(std::vector<NodePtr> leaves, const std::string& target,
                             const SearchConfig& config, ModuleBackend& backend,
                             std::size_t target_index) {
  check_config(config);
  if (leaves.empty()) throw InvalidArgument("search needs at least one leaf");
  const TargetScorer scorer(target, config.metric, config.tokenizer);
  return TreeSearch(config, backend, scorer).run(std::move(leaves), target_index);
}

SPTree replay_trace(const SearchTrace& trace, std::vector<NodePtr> leaves,
                    const std::string& target, const SearchConfig& config,
                    ModuleBackend& backend, std::size_t target_index) {
  const TargetScorer scorer(target, config.metric, config.tokenizer);
  std::vector<NodePtr> nodes;
  std::vector<bool> retained;
  for (const auto& leaf : leaves) {
    nodes.push_back(leaf->score ? leaf : make_leaf(*leaf->leaf_index, leaf->text, scorer(leaf->text)));
    retained.push_back(true);
  }
  for (const auto& wave : trace.waves) {
    std::vector<ModuleRequest> requests;
    for (const auto& item : wave.executed) {
      ModuleRequest r{item.kind, {nodes.at(item.s1)->text}, config.generations};
      if (item.s2) r.inputs.push_back(nodes.at(*item.s2)->text);
      requests.push_back(std::move(r));
    }
    const auto results = backend.execute_batch(requests);
    for (const auto& g : wave.generated) {
      if (!g.id) continue;
      const auto& item = wave.executed.at(g.item);
      const auto& result = results.at(g.item);
      if (!result.ok()) throw Error("replay diverged: backend failed where the trace did not");
      double score = 0.0;
      const auto pick = best_candidate(result.value, scorer, &score);
      std::vector<NodePtr> operands{nodes.at(item.s1)};
      if (item.s2) operands.push_back(nodes.at(*item.s2));
      if (nodes.size() != *g.id) throw Error("replay diverged: node ids out of sequence");
      nodes.push_back(make_node(item.kind, std::move(operands),
                                normalize_whitespace(result.value.candidates[pick]), score));
      retained.push_back(g.outcome == TraceNode::Outcome::retained);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (retained[i] && *nodes[i]->score > *nodes[best]->score) best = i;
  return SPTree{nodes[best], target_index};
}

ProgramSearchResult sp_search(const Document& doc, const SummaryTarget& summary,
                              const SearchConfig& config, ModuleBackend& backend) {
  const auto start = Clock::now();
  check_document(doc);
  check_config(config);
  if (summary.sentences.empty()) throw InvalidArgument("summary has no sentences");

  ProgramSearchResult result;
  result.program.document_id = doc.id;
  result.leaves = select_top_k(doc, summary, config.top_k, config.tokenizer);
  for (std::size_t t = 0; t < summary.sentences.size(); ++t) {
    std::vector<NodePtr> leaves;
    for (auto idx : result.leaves) leaves.push_back(make_leaf(idx, doc.sentences[idx]));
    auto searched = search_tree(std::move(leaves), summary.sentences[t], config, backend, t);
    result.root_scores.push_back(*searched.tree.root->score);
    result.program.trees.push_back(std::move(searched.tree));
    result.traces.push_back(std::move(searched.trace));
  }
  result.summary_scores = score_summary(concat_summary(result.program), summary.sentences,
                                        config.tokenizer);
  result.seconds = seconds_since(start);
  return result;
}

}  // namespace spforge
