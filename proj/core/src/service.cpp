#include "spforge/service.hpp"

#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "spforge/dsl.hpp"

namespace spforge {

using nlohmann::json;

namespace {

std::optional<std::size_t> parse_sentence_id(std::string_view id, char prefix) {
  if (id.size() < 2 || id[0] != prefix || id[1] == '0') return std::nullopt;
  std::size_t n = 0;
  for (char c : id.substr(1)) {
    if (c < '0' || c > '9' || n > 1'000'000) return std::nullopt;
    n = n * 10 + static_cast<std::size_t>(c - '0');
  }
  return n;
}

bool looks_like_uuid(std::string_view s) {
  if (s.size() != 36) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return false;
    } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> sentences_field(const json& v, const char* name) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw InvalidArgument(std::string(name) + " must be a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw InvalidArgument(std::string(name) + " must contain only strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

json triple_json(const MetricTriple& t) {
  return json{{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
}

ModuleKind kind_field(const json& body) {
  const auto name = body.at("kind").get<std::string>();
  const auto kind = parse_module_kind(name);
  if (!kind) throw InvalidArgument("unknown module kind '" + name + "'");
  return *kind;
}

std::vector<std::string> operands_field(const json& body) {
  return body.at("operands").get<std::vector<std::string>>();
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::pre_training: return "pre_training";
    case Phase::training: return "training";
    case Phase::post_training: return "post_training";
  }
  return "pre_training";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (auto p : {Phase::pre_training, Phase::training, Phase::post_training})
    if (to_string(p) == name) return p;
  return std::nullopt;
}

// ---------------------------------------------------------------- Session

Session::Session(std::string id, CorpusRecord record, TokenizerConfig tokenizer)
    : id_(std::move(id)), record_(std::move(record)), tokenizer_(tokenizer) {
  check_document(record_.document);
  events_.push_back(json{{"type", "created"}, {"id", id_}, {"record", record_to_json(record_)}});
}

Session Session::replay(const std::vector<json>& events, TokenizerConfig tokenizer) {
  if (events.empty()) throw InvalidArgument("empty session log");
  try {
    const auto& first = events.front();
    if (first.at("type") != "created") throw InvalidArgument("session log must start with a created event");
    Session s(first.at("id").get<std::string>(), record_from_json(first.at("record")), tokenizer);
    for (std::size_t i = 1; i < events.size(); ++i) {
      s.events_.push_back(events[i]);
      s.apply(s.events_.back());
    }
    return s;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad session event: ") + e.what());
  }
}

std::size_t Session::tree_limit() const {
  return record_.summary ? record_.summary->sentences.size() : record_.document.size();
}

std::optional<double> Session::score_for(std::size_t tree, const std::string& text) const {
  if (!record_.summary || tree >= record_.summary->sentences.size()) return std::nullopt;
  return TargetScorer(record_.summary->sentences[tree], Metric::rougeL, tokenizer_)(text);
}

std::vector<NodePtr> Session::resolve(std::size_t tree, ModuleKind kind,
                                      const std::vector<std::string>& operands) const {
  if (tree >= tree_limit())
    throw InvalidArgument("tree " + std::to_string(tree) + " out of range (" +
                          std::to_string(tree_limit()) + " trees)");
  if (operands.size() != arity(kind))
    throw InadmissibleEdge(static_cast<int>(FilterRule::operand_shape),
                           std::string(to_string(kind)) + " takes " + std::to_string(arity(kind)) +
                               " operand(s), got " + std::to_string(operands.size()));
  std::vector<NodePtr> out;
  for (const auto& id : operands) {
    if (auto d = parse_sentence_id(id, 'D')) {
      if (*d > record_.document.size()) throw InadmissibleEdge(0, "no sentence " + id);
      const auto& text = record_.document.sentences[*d - 1];
      out.push_back(make_leaf(*d - 1, text, score_for(tree, text)));
      continue;
    }
    auto it = std::find_if(nodes_.begin(), nodes_.end(), [&](const auto& p) { return p.first == id; });
    if (it == nodes_.end()) throw InadmissibleEdge(0, "no node " + id);
    if (it->second.tree != tree)
      throw InadmissibleEdge(0, id + " belongs to tree " + std::to_string(it->second.tree));
    if (it->second.consumed) throw InadmissibleEdge(0, id + " already has a parent");
    out.push_back(it->second.node);
  }
  const auto verdict = admissible(kind, *out[0], out.size() > 1 ? out[1].get() : nullptr);
  if (!verdict) throw InadmissibleEdge(static_cast<int>(verdict.rule), verdict.reason);
  return out;
}

CandidateSet Session::propose(std::size_t tree, ModuleKind kind,
                              const std::vector<std::string>& operands, ModuleBackend& backend,
                              std::size_t generations) const {
  const auto nodes = resolve(tree, kind, operands);
  ModuleRequest request{kind, {}, generations};
  for (const auto& n : nodes) request.inputs.push_back(n->text);
  auto set = backend.execute(request);
  check_candidates(set, generations);
  return set;
}

std::string Session::record_edge(std::size_t tree, ModuleKind kind,
                                 const std::vector<std::string>& operands, std::size_t candidate,
                                 ModuleBackend& backend, std::size_t generations) {
  const auto set = propose(tree, kind, operands, backend, generations);
  if (candidate >= set.candidates.size())
    throw InvalidArgument("candidate " + std::to_string(candidate) + " out of range (" +
                          std::to_string(set.candidates.size()) + " candidates)");
  append(json{{"type", "edge"},
              {"tree", tree},
              {"kind", to_string(kind)},
              {"operands", operands},
              {"candidate", candidate},
              {"text", normalize_whitespace(set.candidates[candidate])}});
  return nodes_.back().first;
}

void Session::select_leaf(std::size_t tree, const std::string& sentence) {
  const auto d = parse_sentence_id(sentence, 'D');
  if (!d || *d > record_.document.size()) throw InvalidArgument("no sentence " + sentence);
  if (tree >= tree_limit()) throw InvalidArgument("tree " + std::to_string(tree) + " out of range");
  append(json{{"type", "leaf"}, {"tree", tree}, {"sentence", sentence}});
}

void Session::undo() {
  if (effective_.empty()) throw InvalidArgument("nothing to undo");
  append(json{{"type", "undo"}});
}

void Session::set_phase(Phase phase) { append(json{{"type", "phase"}, {"phase", to_string(phase)}}); }

void Session::append(json event) {
  events_.push_back(std::move(event));
  try {
    apply(events_.back());
  } catch (...) {
    events_.pop_back();
    throw;
  }
}

void Session::apply(const json& event) {
  const auto type = event.at("type").get<std::string>();
  const auto index = static_cast<std::size_t>(&event - events_.data());
  if (type == "edge") {
    const auto tree = event.at("tree").get<std::size_t>();
    const auto kind = kind_field(event);
    const auto operands = operands_field(event);
    auto children = resolve(tree, kind, operands);
    const auto text = event.at("text").get<std::string>();
    if (text.empty()) throw InvalidArgument("edge event with empty text");
    for (const auto& id : operands)
      for (auto& [nid, n] : nodes_)
        if (nid == id) n.consumed = true;
    const auto id = "N" + std::to_string(nodes_.size() + 1);
    nodes_.push_back({id, Node{make_node(kind, std::move(children), text, score_for(tree, text)),
                               tree, operands, false}});
    roots_[tree] = id;
    effective_.push_back(index);
  } else if (type == "leaf") {
    const auto tree = event.at("tree").get<std::size_t>();
    const auto sentence = event.at("sentence").get<std::string>();
    const auto d = parse_sentence_id(sentence, 'D');
    if (!d || *d > record_.document.size() || tree >= tree_limit())
      throw InvalidArgument("bad leaf event");
    roots_[tree] = sentence;
    effective_.push_back(index);
  } else if (type == "undo") {
    if (effective_.empty()) throw InvalidArgument("undo with nothing to undo");
    effective_.pop_back();
    rebuild();
  } else if (type == "phase") {
    const auto p = parse_phase(event.at("phase").get<std::string>());
    if (!p) throw InvalidArgument("unknown phase " + event.at("phase").dump());
    phase_ = *p;
  } else {
    throw InvalidArgument("unknown event type '" + type + "'");
  }
}

void Session::rebuild() {
  const auto keep = effective_;
  effective_.clear();
  nodes_.clear();
  roots_.clear();
  for (auto i : keep) apply(events_[i]);
}

json Session::state() const {
  auto root_node = [&](std::size_t tree, const std::string& id) -> NodePtr {
    if (auto d = parse_sentence_id(id, 'D')) {
      const auto& text = record_.document.sentences[*d - 1];
      return make_leaf(*d - 1, text, score_for(tree, text));
    }
    for (const auto& [nid, n] : nodes_)
      if (nid == id) return n.node;
    return nullptr;
  };
  std::size_t tree_count = record_.summary ? record_.summary->sentences.size() : 0;
  if (!roots_.empty()) tree_count = std::max(tree_count, roots_.rbegin()->first + 1);

  json trees = json::array();
  for (std::size_t t = 0; t < tree_count; ++t) {
    json tj{{"index", t}, {"root", nullptr}, {"text", nullptr}, {"score", nullptr}, {"dsl", nullptr}};
    if (record_.summary && t < record_.summary->sentences.size())
      tj["target"] = record_.summary->sentences[t];
    if (auto it = roots_.find(t); it != roots_.end()) {
      const auto node = root_node(t, it->second);
      tj["root"] = it->second;
      tj["text"] = node->text;
      tj["score"] = node->score ? json(*node->score) : json(nullptr);
      tj["dsl"] = serialize(skeleton_of(*node));
    }
    trees.push_back(std::move(tj));
  }
  json nodes = json::array();
  for (const auto& [id, n] : nodes_) {
    nodes.push_back(json{{"id", id},
                         {"tree", n.tree},
                         {"kind", to_string(*n.node->kind)},
                         {"operands", n.operands},
                         {"text", n.node->text},
                         {"score", n.node->score ? json(*n.node->score) : json(nullptr)},
                         {"height", n.node->height},
                         {"consumed", n.consumed}});
  }
  return json{{"id", id_},
              {"record_id", record_.id},
              {"phase", to_string(phase_)},
              {"document", record_.document.sentences},
              {"summary", record_.summary ? json(record_.summary->sentences) : json(nullptr)},
              {"trees", trees},
              {"nodes", nodes},
              {"events", events_.size()},
              {"can_undo", !effective_.empty()}};
}

ProgramRecord Session::export_record() const {
  if (roots_.empty()) throw InvalidArgument("session has no trees to export");
  SummarizationProgram program;
  program.document_id = record_.id;
  for (const auto& [tree, id] : roots_) {
    NodePtr root;
    if (auto d = parse_sentence_id(id, 'D')) {
      const auto& text = record_.document.sentences[*d - 1];
      root = make_leaf(*d - 1, text, score_for(tree, text));
    } else {
      for (const auto& [nid, n] : nodes_)
        if (nid == id) root = n.node;
    }
    program.trees.push_back(SPTree{root, tree});
  }
  return make_program_record(record_.id, std::move(program),
                             record_.summary ? &*record_.summary : nullptr, 0.0,
                             json{{"source", "session"}, {"session", id_}, {"phase", to_string(phase_)}},
                             tokenizer_);
}

// ----------------------------------------------------------- SessionStore

std::string make_uuid() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi, lo;
  {
    std::lock_guard lock(mutex);
    hi = rng();
    lo = rng();
  }
  hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                static_cast<unsigned>(hi & 0xffff), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

SessionStore::SessionStore(std::filesystem::path data_dir, TokenizerConfig tokenizer)
    : dir_(std::move(data_dir)), tokenizer_(tokenizer) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string SessionStore::create(CorpusRecord record) {
  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard lock(mutex_);
    do {
      id = make_uuid();
    } while (sessions_.count(id));
    entry->session.emplace(id, std::move(record), tokenizer_);
    sessions_[id] = entry;
  }
  std::lock_guard lock(entry->mutex);
  persist(*entry);
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  if (dir_.empty() || !looks_like_uuid(id)) throw UnknownSession("no session " + id);
  const auto path = dir_ / (id + ".jsonl");
  std::ifstream in(path);
  if (!in) throw UnknownSession("no session " + id);
  std::vector<json> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      events.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw MalformedLine(n, e.what());
    }
  }
  auto entry = std::make_shared<Entry>();
  entry->session.emplace(Session::replay(events, tokenizer_));
  entry->persisted = entry->session->events().size();
  sessions_[id] = entry;
  return entry;
}

void SessionStore::persist(Entry& entry) {
  const auto& events = entry.session->events();
  if (!dir_.empty() && entry.persisted < events.size()) {
    std::ofstream out(dir_ / (entry.session->id() + ".jsonl"), std::ios::app);
    for (auto i = entry.persisted; i < events.size(); ++i) out << events[i].dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot write session log for " + entry.session->id());
  }
  entry.persisted = events.size();
}

json SessionStore::update(const std::string& id, const std::function<json(Session&)>& fn) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  auto result = fn(*entry->session);
  persist(*entry);
  return result;
}

json SessionStore::read(const std::string& id, const std::function<json(const Session&)>& fn) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return fn(*entry->session);
}

// ---------------------------------------------------------------- Service

Service::Service(std::shared_ptr<ModuleBackend> backend, ServiceConfig config)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      store_(config_.data_dir, config_.search.tokenizer),
      search_slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_concurrent_searches))) {
  if (!backend_) throw InvalidArgument("service needs a backend");
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  auto error = [](int status, const std::string& message) {
    return Response{status, json{{"error", message}}};
  };
  try {
    json parsed = json::object();
    if (!body.empty()) parsed = json::parse(body);
    return route(method, path, parsed);
  } catch (const UnknownSession& e) {
    return error(404, e.what());
  } catch (const InadmissibleEdge& e) {
    return Response{400, json{{"error", e.what()}, {"rule", e.rule()}}};
  } catch (const ParseError& e) {
    json diags = json::array();
    for (const auto& d : e.diagnostics())
      diags.push_back(json{{"code", to_string(d.code)}, {"position", d.position}, {"message", d.message}});
    return Response{400, json{{"error", e.what()}, {"diagnostics", diags}}};
  } catch (const InputError& e) {
    return error(400, e.what());
  } catch (const BackendError& e) {
    return error(502, e.what());
  } catch (const json::exception& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

Response Service::route(std::string_view method, std::string_view path, const json& body) {
  auto post_only = [&]() {
    if (method != "POST") return std::optional<Response>(Response{405, json{{"error", "use POST"}}});
    return std::optional<Response>();
  };
  if (path == "/v1/health") {
    if (method != "GET") return Response{405, json{{"error", "use GET"}}};
    return Response{200, json{{"status", "ok"}, {"backend", backend_->name()}}};
  }
  if (path == "/v1/search") {
    if (auto r = post_only()) return *r;
    const auto record = record_from_json(body.at("record"));
    if (!record.summary) throw InvalidArgument("search needs a record with a summary");
    const auto config = body.contains("config") ? config_from_json(body.at("config")) : config_.search;
    search_slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{search_slots_};
    auto result = sp_search(record.document, *record.summary, config, *backend_);
    auto out = make_program_record(record.id, std::move(result.program), &*record.summary,
                                   result.seconds * 1000.0, config_to_json(config), config.tokenizer);
    return Response{200, program_record_to_json(out)};
  }
  if (path == "/v1/programs/execute") {
    if (auto r = post_only()) return *r;
    Document doc;
    doc.id = body.value("id", std::string());
    const auto& d = body.at("document");
    doc.sentences = d.is_string() ? segment(d.get<std::string>()) : sentences_field(d, "document");
    check_document(doc);
    const auto skeleton = parse(body.at("dsl").get<std::string>(), doc.size());
    auto exec = config_.execution;
    exec.generations = body.value("generations", exec.generations);
    std::optional<SummaryTarget> target;
    if (body.contains("summary") && !body.at("summary").is_null())
      target = SummaryTarget{sentences_field(body.at("summary"), "summary")};
    const auto selection = body.value("selection", std::string("top1"));
    if (selection == "best_vs_target")
      exec.selection = CandidateSelection::best_vs_target;
    else if (selection == "top1")
      exec.selection = CandidateSelection::top1;
    else
      throw InvalidArgument("unknown selection '" + selection + "'");
    const auto result = execute_skeleton(skeleton, doc, *backend_, exec, target ? &*target : nullptr);
    json nodes = json::array();
    for (const auto& t : result.program.trees) nodes.push_back(node_to_json(*t.root));
    return Response{200, json{{"dsl", serialize(result.program)}, {"summary", result.summary}, {"nodes", nodes}}};
  }
  if (path == "/v1/programs/validate") {
    if (auto r = post_only()) return *r;
    const auto diags = check_wellformed(body.at("dsl").get<std::string>(),
                                        body.at("doc_size").get<std::size_t>());
    json out = json::array();
    for (const auto& d : diags)
      out.push_back(json{{"code", to_string(d.code)}, {"position", d.position}, {"message", d.message}});
    return Response{200, json{{"wellformed", diags.empty()}, {"diagnostics", out}}};
  }
  if (path == "/v1/rouge") {
    if (auto r = post_only()) return *r;
    const auto scores = score_summary(sentences_field(body.at("candidate"), "candidate"),
                                      sentences_field(body.at("reference"), "reference"),
                                      config_.search.tokenizer);
    return Response{200, json{{"rouge1", triple_json(scores.rouge1)},
                              {"rouge2", triple_json(scores.rouge2)},
                              {"rougeL", triple_json(scores.rougeL)},
                              {"rougeLsum", triple_json(scores.rougeLsum)}}};
  }
  if (path == "/v1/modules/execute") {
    if (auto r = post_only()) return *r;
    return Response{200, serve_execute(*backend_, body)};
  }
  if (path == "/v1/modules/execute_batch") {
    if (auto r = post_only()) return *r;
    return Response{200, serve_execute_batch(*backend_, body)};
  }
  if (path == "/v1/sessions") {
    if (auto r = post_only()) return *r;
    const auto id = store_.create(record_from_json(body.at("record")));
    return Response{201, store_.read(id, [](const Session& s) { return s.state(); })};
  }
  constexpr std::string_view prefix = "/v1/sessions/";
  if (path.substr(0, prefix.size()) == prefix) {
    auto rest = path.substr(prefix.size());
    const auto slash = rest.find('/');
    const std::string id(rest.substr(0, slash));
    const auto action = slash == std::string_view::npos ? std::string_view() : rest.substr(slash + 1);
    if (!id.empty()) return session_route(method, id, action, body);
  }
  return Response{404, json{{"error", "no route for " + std::string(path)}}};
}

Response Service::session_route(std::string_view method, const std::string& id,
                                std::string_view action, const json& body) {
  const auto generations = config_.execution.generations;
  if (action.empty()) {
    if (method != "GET") return Response{405, json{{"error", "use GET"}}};
    return Response{200, store_.read(id, [](const Session& s) { return s.state(); })};
  }
  if (method != "POST") return Response{405, json{{"error", "use POST"}}};
  if (action == "proposals") {
    return Response{200, store_.read(id, [&](const Session& s) {
                      const auto set = s.propose(body.at("tree").get<std::size_t>(), kind_field(body),
                                                 operands_field(body), *backend_, generations);
                      return candidates_to_json(set);
                    })};
  }
  if (action == "edges") {
    return Response{200, store_.update(id, [&](Session& s) {
                      const auto node = s.record_edge(body.at("tree").get<std::size_t>(), kind_field(body),
                                                      operands_field(body),
                                                      body.value("candidate", std::size_t{0}), *backend_,
                                                      generations);
                      auto state = s.state();
                      state["node"] = node;
                      return state;
                    })};
  }
  if (action == "leaf") {
    return Response{200, store_.update(id, [&](Session& s) {
                      s.select_leaf(body.at("tree").get<std::size_t>(), body.at("sentence").get<std::string>());
                      return s.state();
                    })};
  }
  if (action == "undo") {
    return Response{200, store_.update(id, [](Session& s) {
                      s.undo();
                      return s.state();
                    })};
  }
  if (action == "phase") {
    return Response{200, store_.update(id, [&](Session& s) {
                      const auto name = body.at("phase").get<std::string>();
                      const auto p = parse_phase(name);
                      if (!p) throw InvalidArgument("unknown phase '" + name + "'");
                      s.set_phase(*p);
                      return s.state();
                    })};
  }
  if (action == "export") {
    return Response{200, store_.read(id, [](const Session& s) {
                      return program_record_to_json(s.export_record());
                    })};
  }
  return Response{404, json{{"error", "unknown session action '" + std::string(action) + "'"}}};
}

// ------------------------------------------------------------- HttpServer

struct HttpServer::Impl {
  httplib::Server server;
  std::jthread thread;
};

HttpServer::HttpServer(Service& service, std::string host, int port) : impl_(std::make_unique<Impl>()) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::jthread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace spforge
