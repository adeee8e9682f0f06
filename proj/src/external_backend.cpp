#include "genscore/external_backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include <httplib.h>
#include <json.hpp>

#include "genscore/errors.hpp"

namespace genscore {
namespace {

using nlohmann::json;

class StdioTransport final : public Transport {
 public:
  StdioTransport(const std::string& command, std::chrono::milliseconds timeout)
      : timeout_(timeout) {
    // A dead child must surface as EPIPE, not terminate the process.
    static const bool sigpipe_ignored = [] {
      signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  ~StdioTransport() override {
    close(write_fd_);
    close(read_fd_);
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) return;
      usleep(10'000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }

  std::string round_trip(std::string_view, const std::string& request) override {
    std::string line = request + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      ssize_t n = ::write(write_fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("backend process write failed: ") + std::strerror(errno));
      }
      written += static_cast<std::size_t>(n);
    }
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string response = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return response;
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      int ready = poll(&pfd, 1, static_cast<int>(timeout_.count()));
      if (ready == 0) throw BackendError("backend process timed out");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll: ") + std::strerror(errno));
      }
      char chunk[4096];
      ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw BackendError("backend process closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

class HttpTransport final : public Transport {
 public:
  HttpTransport(const std::string& endpoint, std::chrono::milliseconds timeout) {
    // Split "http://host:port/prefix" into scheme+authority and path prefix.
    auto authority_start = endpoint.find("://") + 3;
    auto slash = endpoint.find('/', authority_start);
    std::string base = endpoint.substr(0, slash);
    if (slash != std::string::npos) prefix_ = endpoint.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client_->set_connection_timeout(secs.count(), usecs.count());
    client_->set_read_timeout(secs.count(), usecs.count());
    client_->set_write_timeout(secs.count(), usecs.count());
    client_->set_keep_alive(true);
  }

  std::string round_trip(std::string_view op, const std::string& request) override {
    std::string path = prefix_ + "/v1/" + std::string(op);
    auto res = client_->Post(path, request, "application/json");
    if (!res) {
      throw BackendError("HTTP request to " + path + " failed: " +
                         httplib::to_string(res.error()));
    }
    if (res->status != 200 && res->body.find("\"error\"") == std::string::npos) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + path);
    }
    return res->body;
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string prefix_;
};

json parse_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed backend response: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("backend response is not an object");
  if (auto err = j.find("error"); err != j.end()) {
    throw BackendError("backend error: " +
                       (err->is_string() ? err->get<std::string>() : err->dump()));
  }
  return j;
}

std::vector<std::string> token_array(const json& j) {
  auto it = j.find("tokens");
  if (it == j.end() || !it->is_array()) throw ProtocolError("response lacks a 'tokens' array");
  std::vector<std::string> tokens;
  tokens.reserve(it->size());
  for (const auto& t : *it) {
    if (!t.is_string()) throw ProtocolError("non-string token in response");
    tokens.push_back(t.get<std::string>());
  }
  return tokens;
}

}  // namespace

std::unique_ptr<Transport> connect_transport(const std::string& endpoint,
                                             std::chrono::milliseconds timeout) {
  if (endpoint.rfind("http://", 0) == 0) {
    return std::make_unique<HttpTransport>(endpoint, timeout);
  }
  if (endpoint.rfind("stdio:", 0) == 0) {
    return std::make_unique<StdioTransport>(endpoint.substr(6), timeout);
  }
  throw UsageError("unsupported backend endpoint '" + endpoint +
                   "' (expected http://... or stdio:<command>)");
}

std::string make_score_request(std::string_view source, std::string_view target) {
  return json{{"op", "score"}, {"source", source}, {"target", target}}.dump();
}

std::string make_tokenize_request(std::string_view text) {
  return json{{"op", "tokenize"}, {"text", text}}.dump();
}

ScoredSequence parse_score_response(std::string_view body, std::size_t* raised) {
  json j = parse_body(body);
  ScoredSequence seq;
  seq.tokens = token_array(j);
  auto lp = j.find("logprobs");
  if (lp == j.end() || !lp->is_array()) throw ProtocolError("response lacks a 'logprobs' array");
  if (lp->size() != seq.tokens.size()) {
    throw ProtocolError("response has " + std::to_string(seq.tokens.size()) + " tokens but " +
                        std::to_string(lp->size()) + " logprobs");
  }
  if (seq.tokens.empty()) throw ProtocolError("response scores no tokens");
  std::size_t positives = 0;
  for (const auto& v : *lp) {
    if (!v.is_number()) throw ProtocolError("non-numeric logprob in response");
    double d = v.get<double>();
    if (std::isnan(d)) throw ProtocolError("NaN logprob in response");
    bool was_positive = false;
    seq.logprobs.push_back(clamp_logprob(d, &was_positive));
    positives += was_positive ? 1 : 0;
  }
  if (raised) *raised = positives;
  seq.validate();
  return seq;
}

std::vector<std::string> parse_tokenize_response(std::string_view body) {
  return token_array(parse_body(body));
}

class ExternalBackend::Lease {
 public:
  explicit Lease(const ExternalBackend& owner) : owner_(owner) {
    std::unique_lock lock(owner_.mu_);
    owner_.cv_.wait(lock, [&] {
      return !owner_.idle_.empty() || owner_.open_ < owner_.options_.pool_size;
    });
    if (!owner_.idle_.empty()) {
      transport_ = std::move(owner_.idle_.back());
      owner_.idle_.pop_back();
      return;
    }
    ++owner_.open_;
    lock.unlock();
    try {
      transport_ = owner_.factory_();
    } catch (...) {
      std::lock_guard relock(owner_.mu_);
      --owner_.open_;
      owner_.cv_.notify_one();
      throw;
    }
  }

  ~Lease() {
    std::lock_guard lock(owner_.mu_);
    if (transport_ && !broken_) {
      owner_.idle_.push_back(std::move(transport_));
    } else {
      --owner_.open_;
    }
    owner_.cv_.notify_one();
  }

  Transport& operator*() { return *transport_; }
  // A connection that failed mid-request is not returned to the pool.
  void mark_broken() { broken_ = true; }

 private:
  const ExternalBackend& owner_;
  std::unique_ptr<Transport> transport_;
  bool broken_ = false;
};

ExternalBackend::ExternalBackend(std::string endpoint, ExternalOptions options)
    : name_(endpoint), options_(options) {
  if (options_.pool_size == 0) options_.pool_size = 1;
  // Validate the scheme up front.
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("stdio:", 0) != 0) {
    throw UsageError("unsupported backend endpoint '" + endpoint +
                     "' (expected http://... or stdio:<command>)");
  }
  factory_ = [endpoint = std::move(endpoint), timeout = options_.timeout] {
    return connect_transport(endpoint, timeout);
  };
}

ExternalBackend::ExternalBackend(std::string name, TransportFactory factory,
                                 ExternalOptions options)
    : name_(std::move(name)), factory_(std::move(factory)), options_(options) {
  if (options_.pool_size == 0) options_.pool_size = 1;
}

ExternalBackend::~ExternalBackend() = default;

BackendDescriptor ExternalBackend::descriptor() const {
  return {name_, BackendKind::kExternal, "external:" + name_};
}

std::string ExternalBackend::call(std::string_view op, const std::string& request) const {
  Lease lease(*this);
  try {
    return (*lease).round_trip(op, request);
  } catch (...) {
    lease.mark_broken();
    throw;
  }
}

std::vector<std::string> ExternalBackend::tokenize(std::string_view text) const {
  return parse_tokenize_response(call("tokenize", make_tokenize_request(text)));
}

ScoredSequence ExternalBackend::token_log_probs(std::string_view source,
                                                std::string_view target) const {
  std::size_t raised = 0;
  auto seq = parse_score_response(call("score", make_score_request(source, target)), &raised);
  floor_warnings_ += raised;
  return seq;
}

}  // namespace genscore
