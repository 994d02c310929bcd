#include "spforge/backend.hpp"

#include <algorithm>
#include <cctype>

namespace spforge {

using nlohmann::json;

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

void check_request(const ModuleRequest& request) {
  if (request.inputs.size() != arity(request.kind)) {
    throw ContractError(std::string(to_string(request.kind)) + " takes " +
                        std::to_string(arity(request.kind)) + " input(s), got " +
                        std::to_string(request.inputs.size()));
  }
  if (request.max_candidates == 0)
    throw ContractError("max_candidates must be at least 1");
  for (const auto& input : request.inputs)
    if (blank(input)) throw ContractError("module input is blank");
}

void check_candidates(const CandidateSet& set, std::size_t max_candidates) {
  if (set.candidates.empty()) throw EmptyGeneration("backend returned no candidates");
  if (set.candidates.size() > max_candidates) {
    throw ProtocolError("backend returned " + std::to_string(set.candidates.size()) +
                        " candidates, limit is " + std::to_string(max_candidates));
  }
  for (const auto& c : set.candidates)
    if (blank(c)) throw EmptyGeneration("backend returned a blank candidate");
}

std::vector<ModuleResult> ModuleBackend::execute_batch(
    std::span<const ModuleRequest> requests) {
  std::vector<ModuleResult> out;
  out.reserve(requests.size());
  for (const auto& request : requests) {
    ModuleResult result;
    try {
      result.value = execute(request);
    } catch (const EmptyGeneration& e) {
      result.error = e.what();
    } catch (const ContractError& e) {
      result.error = e.what();
    }
    out.push_back(std::move(result));
  }
  return out;
}

AblatedBackend::AblatedBackend(std::shared_ptr<ModuleBackend> inner,
                               ModuleKind disabled)
    : inner_(std::move(inner)), disabled_(disabled) {}

CandidateSet AblatedBackend::execute(const ModuleRequest& request) {
  if (request.kind == disabled_)
    throw ContractError(std::string(to_string(disabled_)) + " is disabled");
  return inner_->execute(request);
}

std::vector<ModuleResult> AblatedBackend::execute_batch(
    std::span<const ModuleRequest> requests) {
  std::vector<ModuleRequest> forwarded;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (requests[i].kind == disabled_) continue;
    forwarded.push_back(requests[i]);
    positions.push_back(i);
  }
  auto inner_results = inner_->execute_batch(forwarded);
  std::vector<ModuleResult> out(requests.size());
  for (auto& r : out) r.error = std::string(to_string(disabled_)) + " is disabled";
  for (std::size_t j = 0; j < positions.size(); ++j)
    out[positions[j]] = std::move(inner_results[j]);
  return out;
}

bool AblatedBackend::supports(ModuleKind kind) const {
  return kind != disabled_ && inner_->supports(kind);
}

std::string AblatedBackend::name() const {
  return inner_->name() + "-no-" + std::string(to_string(disabled_));
}

json request_to_json(const ModuleRequest& request) {
  return json{{"kind", to_string(request.kind)},
              {"inputs", request.inputs},
              {"max_candidates", request.max_candidates}};
}

ModuleRequest request_from_json(const json& body) {
  if (!body.is_object()) throw ContractError("request must be a JSON object");
  ModuleRequest request;
  const auto kind_it = body.find("kind");
  if (kind_it == body.end() || !kind_it->is_string())
    throw ContractError("request.kind must be a string");
  const auto kind = parse_module_kind(kind_it->get<std::string>());
  if (!kind) throw ContractError("unknown module kind '" + kind_it->get<std::string>() + "'");
  request.kind = *kind;

  const auto inputs_it = body.find("inputs");
  if (inputs_it == body.end() || !inputs_it->is_array())
    throw ContractError("request.inputs must be an array");
  for (const auto& input : *inputs_it) {
    if (!input.is_string()) throw ContractError("request.inputs must hold strings");
    request.inputs.push_back(input.get<std::string>());
  }
  if (auto it = body.find("max_candidates"); it != body.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 1)
      throw ContractError("request.max_candidates must be a positive integer");
    request.max_candidates = it->get<std::size_t>();
  }
  check_request(request);
  return request;
}

json candidates_to_json(const CandidateSet& set) {
  return json{{"candidates", set.candidates}};
}

CandidateSet candidates_from_json(const json& body, std::size_t max_candidates) {
  if (!body.is_object()) throw ProtocolError("response must be a JSON object");
  if (auto err = body.find("error"); err != body.end()) {
    throw EmptyGeneration(err->is_string() ? err->get<std::string>()
                                           : err->dump());
  }
  const auto it = body.find("candidates");
  if (it == body.end() || !it->is_array())
    throw ProtocolError("response.candidates must be an array");
  CandidateSet set;
  for (const auto& c : *it) {
    if (!c.is_string()) throw ProtocolError("candidates must be strings");
    set.candidates.push_back(c.get<std::string>());
  }
  check_candidates(set, max_candidates);
  return set;
}

json serve_execute(ModuleBackend& backend, const json& body) {
  const auto request = request_from_json(body);
  auto set = backend.execute(request);
  check_candidates(set, request.max_candidates);
  return candidates_to_json(set);
}

json serve_execute_batch(ModuleBackend& backend, const json& body) {
  if (!body.is_object() || !body.contains("requests") || !body["requests"].is_array())
    throw ContractError("body.requests must be an array");
  const auto& items = body["requests"];
  std::vector<ModuleRequest> valid;
  std::vector<std::size_t> positions;
  json results = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      valid.push_back(request_from_json(items[i]));
      positions.push_back(i);
      results.push_back(nullptr);
    } catch (const ContractError& e) {
      results.push_back(json{{"error", e.what()}});
    }
  }
  auto executed = backend.execute_batch(valid);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    auto& slot = results[positions[j]];
    if (!executed[j].ok()) {
      slot = json{{"error", executed[j].error}};
      continue;
    }
    try {
      check_candidates(executed[j].value, valid[j].max_candidates);
      slot = candidates_to_json(executed[j].value);
    } catch (const BackendError& e) {
      slot = json{{"error", e.what()}};
    }
  }
  return json{{"results", results}};
}

}  // namespace spforge
