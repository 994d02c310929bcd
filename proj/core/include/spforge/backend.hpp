#pragma once

// Text-operation backends. A backend maps (kind, inputs, max_candidates) to
// an ordered list of candidate sentences. Backends are shared across threads
// and must accept concurrent calls.

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spforge/errors.hpp"
#include "spforge/program.hpp"

namespace spforge {

struct ModuleRequest {
  ModuleKind kind = ModuleKind::compression;
  std::vector<std::string> inputs;
  std::size_t max_candidates = 5;
};

// Throws ContractError when |inputs| != arity(kind) or max_candidates == 0.
void check_request(const ModuleRequest& request);

struct CandidateSet {
  std::vector<std::string> candidates;
};

// Throws EmptyGeneration when empty or containing a blank candidate, and
// ProtocolError when there are more than `max_candidates` candidates.
void check_candidates(const CandidateSet& set, std::size_t max_candidates);

class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

// One entry of a batch: either candidates or an error message.
struct ModuleResult {
  CandidateSet value;
  std::string error;

  bool ok() const { return error.empty(); }
};

class ModuleBackend {
 public:
  virtual ~ModuleBackend() = default;

  virtual CandidateSet execute(const ModuleRequest& request) = 0;

  // Positionally aligned with `requests`. The default maps execute() and
  // turns per-item EmptyGeneration/ContractError into item errors;
  // BackendUnavailable aborts the whole batch.
  virtual std::vector<ModuleResult> execute_batch(
      std::span<const ModuleRequest> requests);

  // The search never enqueues applications of unsupported kinds.
  virtual bool supports(ModuleKind) const { return true; }

  virtual std::string name() const = 0;
};

// Deterministic rule-based operations; never sees any target text.
//   compression: drop the final comma clause, parenthesized spans, trailing
//     token spans (keeping at least two tokens), then single interior tokens.
//   paraphrase: synonym substitutions (at most 20% of content-word types)
//     and article toggling; "Reportedly, ..." when nothing else applies.
//   fusion: first clause of input 1 + "and" + main clause of input 2, with
//     variants that move the splice points.
class ReferenceBackend : public ModuleBackend {
 public:
  CandidateSet execute(const ModuleRequest& request) override;
  std::string name() const override { return "reference"; }
};

// Wraps another backend with one module kind removed (ablations).
class AblatedBackend : public ModuleBackend {
 public:
  AblatedBackend(std::shared_ptr<ModuleBackend> inner, ModuleKind disabled);

  CandidateSet execute(const ModuleRequest& request) override;
  std::vector<ModuleResult> execute_batch(
      std::span<const ModuleRequest> requests) override;
  bool supports(ModuleKind kind) const override;
  std::string name() const override;

 private:
  std::shared_ptr<ModuleBackend> inner_;
  ModuleKind disabled_;
};

struct RemoteBackendConfig {
  // e.g. "http://127.0.0.1:8080"
  std::string base_url;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff{100};
  std::size_t max_in_flight = 4;
};

// JSON-over-HTTP client for an inference sidecar:
//   POST /v1/modules/execute        {"kind","inputs","max_candidates"}
//                                   -> {"candidates":[...]}
//   POST /v1/modules/execute_batch  {"requests":[...]}
//                                   -> {"results":[{"candidates"}|{"error"}]}
class RemoteBackend : public ModuleBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config);
  ~RemoteBackend() override;

  CandidateSet execute(const ModuleRequest& request) override;
  std::vector<ModuleResult> execute_batch(
      std::span<const ModuleRequest> requests) override;
  std::string name() const override { return "remote"; }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  struct Impl;
  RemoteBackendConfig config_;
  std::unique_ptr<Impl> impl_;
};

// Wire helpers shared by the remote client and the service.
nlohmann::json request_to_json(const ModuleRequest& request);
// Throws ContractError on schema violations.
ModuleRequest request_from_json(const nlohmann::json& body);
nlohmann::json candidates_to_json(const CandidateSet& set);
CandidateSet candidates_from_json(const nlohmann::json& body,
                                  std::size_t max_candidates);

// Server side of the wire contract over any backend.
nlohmann::json serve_execute(ModuleBackend& backend, const nlohmann::json& body);
nlohmann::json serve_execute_batch(ModuleBackend& backend,
                                   const nlohmann::json& body);

}  // namespace spforge
