#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "genscore/backend.hpp"

namespace genscore {

// One connection to a model server. Requests on a connection are serialized
// by the owner; implementations need not be thread-safe.
class Transport {
 public:
  virtual ~Transport() = default;
  // Sends one request object (no trailing newline) for `op` and returns the
  // raw response object text.
  virtual std::string round_trip(std::string_view op, const std::string& request) = 0;
};

struct ExternalOptions {
  std::size_t pool_size = 1;
  std::chrono::milliseconds timeout{60'000};
};

// Endpoints: "http://host:port[/prefix]" posts to <prefix>/v1/score and
// <prefix>/v1/tokenize; "stdio:<command>" runs <command> through /bin/sh and
// exchanges newline-delimited JSON over its stdin/stdout.
std::unique_ptr<Transport> connect_transport(const std::string& endpoint,
                                             std::chrono::milliseconds timeout);

// Parses a score response. Positive log-probabilities are lowered to 0 and
// counted in `*raised`; values below the floor are clamped. Throws
// BackendError for {"error": ...} and ProtocolError for malformed bodies.
ScoredSequence parse_score_response(std::string_view body, std::size_t* raised = nullptr);
std::vector<std::string> parse_tokenize_response(std::string_view body);

std::string make_score_request(std::string_view source, std::string_view target);
std::string make_tokenize_request(std::string_view text);

class ExternalBackend final : public Backend {
 public:
  using TransportFactory = std::function<std::unique_ptr<Transport>()>;

  explicit ExternalBackend(std::string endpoint, ExternalOptions options = {});
  // For callers that provide their own connections (tests, embedding).
  ExternalBackend(std::string name, TransportFactory factory, ExternalOptions options = {});
  ~ExternalBackend() override;

  BackendDescriptor descriptor() const override;
  std::vector<std::string> tokenize(std::string_view text) const override;
  ScoredSequence token_log_probs(std::string_view source,
                                 std::string_view target) const override;

  // Number of positive log-probabilities lowered to 0 so far.
  std::size_t floor_warnings() const { return floor_warnings_.load(); }

 private:
  class Lease;

  std::string call(std::string_view op, const std::string& request) const;

  std::string name_;
  TransportFactory factory_;
  ExternalOptions options_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable std::vector<std::unique_ptr<Transport>> idle_;
  mutable std::size_t open_ = 0;
  mutable std::atomic<std::size_t> floor_warnings_{0};
};

}  // namespace genscore
