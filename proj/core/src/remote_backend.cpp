#include <algorithm>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "spforge/backend.hpp"

namespace spforge {

using nlohmann::json;

struct RemoteBackend::Impl {
  explicit Impl(std::ptrdiff_t slots) : in_flight(slots) {}
  std::counting_semaphore<1024> in_flight;
};

RemoteBackend::RemoteBackend(RemoteBackendConfig config)
    : config_(std::move(config)),
      impl_(std::make_unique<Impl>(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(config_.max_in_flight, 1, 1024)))) {
  if (config_.base_url.empty()) throw InvalidArgument("remote backend needs a base URL");
}

RemoteBackend::~RemoteBackend() = default;

json RemoteBackend::post(const std::string& path, const json& body) {
  impl_->in_flight.acquire();
  struct Release {
    Impl* impl;
    ~Release() { impl->in_flight.release(); }
  } release{impl_.get()};

  const auto payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
    httplib::Client client(config_.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      // Client errors are not retried: the request itself is wrong.
      throw ContractError("sidecar rejected request (HTTP " + std::to_string(res->status) +
                          "): " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw ProtocolError(std::string("sidecar sent invalid JSON: ") + e.what());
    }
  }
  throw BackendUnavailable("POST " + config_.base_url + path + " failed after " +
                           std::to_string(config_.retries + 1) + " attempt(s): " + last_error);
}

CandidateSet RemoteBackend::execute(const ModuleRequest& request) {
  check_request(request);
  return candidates_from_json(post("/v1/modules/execute", request_to_json(request)),
                              request.max_candidates);
}

std::vector<ModuleResult> RemoteBackend::execute_batch(
    std::span<const ModuleRequest> requests) {
  if (requests.empty()) return {};
  json items = json::array();
  for (const auto& r : requests) {
    check_request(r);
    items.push_back(request_to_json(r));
  }
  const auto body = post("/v1/modules/execute_batch", json{{"requests", items}});
  if (!body.is_object() || !body.contains("results") || !body["results"].is_array())
    throw ProtocolError("response.results must be an array");
  const auto& results = body["results"];
  if (results.size() != requests.size()) {
    throw ProtocolError("batch of " + std::to_string(requests.size()) + " got " +
                        std::to_string(results.size()) + " results");
  }
  std::vector<ModuleResult> out(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      out[i].value = candidates_from_json(results[i], requests[i].max_candidates);
    } catch (const EmptyGeneration& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

}  // namespace spforge
