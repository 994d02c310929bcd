#pragma once

// HTTP service: stateless search/execute/validate/score endpoints plus
// event-sourced editing sessions for building programs by hand.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spforge/backend.hpp"
#include "spforge/corpus_io.hpp"
#include "spforge/executor.hpp"
#include "spforge/search.hpp"

namespace spforge {

enum class Phase { pre_training, training, post_training };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

// Working state of one annotator on one record. Every change is an event;
// the state is a pure function of the event log.
//
// Node ids: "D<n>" for document sentences, "N<k>" for the k-th generated
// node. A generated node can be an operand once, and only inside its own
// tree. The root of a tree is its most recent node.
//
// Events: {"type":"created","id","record"}, {"type":"edge","tree","kind",
// "operands","candidate","text"}, {"type":"leaf","tree","sentence"},
// {"type":"undo"}, {"type":"phase","phase"}. Undo removes the latest edge or
// leaf event still in effect.
class Session {
 public:
  Session(std::string id, CorpusRecord record, TokenizerConfig tokenizer = {});

  // Throws InputError on an inconsistent log.
  static Session replay(const std::vector<nlohmann::json>& events,
                        TokenizerConfig tokenizer = {});

  const std::string& id() const { return id_; }
  const CorpusRecord& record() const { return record_; }
  Phase phase() const { return phase_; }
  const std::vector<nlohmann::json>& events() const { return events_; }

  // Backend candidates for a prospective edge. Throws InadmissibleEdge.
  CandidateSet propose(std::size_t tree, ModuleKind kind,
                       const std::vector<std::string>& operands, ModuleBackend& backend,
                       std::size_t generations) const;

  // Executes the edge and keeps candidate `candidate`. Returns the new node id.
  std::string record_edge(std::size_t tree, ModuleKind kind,
                          const std::vector<std::string>& operands, std::size_t candidate,
                          ModuleBackend& backend, std::size_t generations);

  // Makes a document sentence the root of `tree` (an extractive tree).
  void select_leaf(std::size_t tree, const std::string& sentence);

  // Throws InvalidArgument when there is nothing to undo.
  void undo();
  void set_phase(Phase phase);

  nlohmann::json state() const;
  ProgramRecord export_record() const;

 private:
  struct Node {
    NodePtr node;
    std::size_t tree = 0;
    std::vector<std::string> operands;
    bool consumed = false;
  };

  std::size_t tree_limit() const;
  std::optional<double> score_for(std::size_t tree, const std::string& text) const;
  std::vector<NodePtr> resolve(std::size_t tree, ModuleKind kind,
                               const std::vector<std::string>& operands) const;
  void append(nlohmann::json event);
  void apply(const nlohmann::json& event);
  void rebuild();

  std::string id_;
  CorpusRecord record_;
  TokenizerConfig tokenizer_;
  Phase phase_ = Phase::pre_training;
  std::vector<nlohmann::json> events_;
  std::vector<std::size_t> effective_;  // indices of edge/leaf events in effect
  std::vector<std::pair<std::string, Node>> nodes_;  // generated, in order
  std::map<std::size_t, std::string> roots_;
};

// Sessions keyed by UUID, each persisted as <data_dir>/<id>.jsonl (one event
// per line). Calls on one session are serialized; distinct sessions run
// concurrently. An empty data_dir keeps everything in memory.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_dir, TokenizerConfig tokenizer = {});

  std::string create(CorpusRecord record);

  // Runs fn under the session's lock and persists any events it appended.
  // Throws UnknownSession.
  nlohmann::json update(const std::string& id, const std::function<nlohmann::json(Session&)>& fn);
  nlohmann::json read(const std::string& id,
                      const std::function<nlohmann::json(const Session&)>& fn);

 private:
  struct Entry {
    std::mutex mutex;
    std::optional<Session> session;
    std::size_t persisted = 0;
  };

  std::shared_ptr<Entry> find(const std::string& id);
  void persist(Entry& entry);

  std::filesystem::path dir_;
  TokenizerConfig tokenizer_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

std::string make_uuid();

struct ServiceConfig {
  SearchConfig search;
  ExecutionConfig execution;
  std::filesystem::path data_dir;
  std::size_t max_concurrent_searches = 2;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

// Routes:
//   GET  /v1/health
//   POST /v1/search                 {record, config?} -> ProgramRecord
//   POST /v1/programs/execute       {document, dsl, summary?, generations?}
//   POST /v1/programs/validate      {dsl, doc_size} -> {diagnostics, wellformed}
//   POST /v1/rouge                  {candidate, reference}
//   POST /v1/modules/execute        wire contract, served by the backend
//   POST /v1/modules/execute_batch
//   POST /v1/sessions               {record} -> state
//   GET  /v1/sessions/{id}          -> state
//   POST /v1/sessions/{id}/proposals {tree, kind, operands} -> {candidates}
//   POST /v1/sessions/{id}/edges     {tree, kind, operands, candidate} -> state
//   POST /v1/sessions/{id}/leaf      {tree, sentence} -> state
//   POST /v1/sessions/{id}/undo      -> state
//   POST /v1/sessions/{id}/phase     {phase} -> state
//   POST /v1/sessions/{id}/export    -> ProgramRecord
// Errors: 400 bad input ({"error","rule"?}), 404 unknown path or session,
// 405 wrong method, 502 backend failure.
class Service {
 public:
  Service(std::shared_ptr<ModuleBackend> backend, ServiceConfig config);

  Response handle(std::string_view method, std::string_view path, std::string_view body);

 private:
  Response route(std::string_view method, std::string_view path, const nlohmann::json& body);
  Response session_route(std::string_view method, const std::string& id,
                         std::string_view action, const nlohmann::json& body);

  std::shared_ptr<ModuleBackend> backend_;
  ServiceConfig config_;
  SessionStore store_;
  std::counting_semaphore<> search_slots_;
};

class HttpServer {
 public:
  HttpServer(Service& service, std::string host = "127.0.0.1", int port = 0);
  ~HttpServer();

  // The bound port (useful with port 0).
  int port() const { return port_; }
  // Blocks until stop().
  void run();
  // Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace spforge
