// Copyright 2026 The uRoCE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <mutex>
#include <thread>

#include "uroce/api/oob.hpp"
#include "uroce/engine/engine.hpp"

namespace uroce::api {

// One transport endpoint: the engine, its link, and (in datagram mode) a
// wall-clock runner thread. Callers in simulator mode drive the engine with
// virtual time through step(); the runner stays off.
class Node {
 public:
  Node(const AppConfig& cfg, net::Link* link);                  // non-owning link
  Node(const AppConfig& cfg, std::unique_ptr<net::Link> link);  // owning link
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  /// Direct engine access for single-threaded (simulator) use.
  Engine& engine() { return engine_; }
  const AppConfig& config() const { return cfg_; }

  void start_runner();
  void stop_runner();
  bool threaded() const { return running_.load(); }
  /// Microseconds since node construction (wall clock).
  MicroTime now_us() const;
  /// One engine step under the API lock (harness-driven mode).
  void step(MicroTime now);

  // Thread-safe wrappers used by handles.
  Result<uint64_t, SubmitError> submit(uint32_t qpn, WorkKind kind, const SgEntry& sg);
  uint64_t completed(uint32_t qpn, CompletionKind kind);
  void reset_completed(uint32_t qpn, CompletionKind kind);
  std::vector<Completion> drain_completions(uint32_t qpn);
  Result<uint64_t, std::string> wait_completed(uint32_t qpn, CompletionKind kind, uint64_t n,
                                               int timeout_ms);
  void set_malicious_callback(uint32_t qpn, std::function<void(const MaliciousEvent&)> cb);
  bool destroy_qp(uint32_t qpn);

  uint32_t alloc_qpn();
  uint32_t random_psn();
  uint32_t random_rkey();
  std::mutex& api_mutex() { return mu_; }

 private:
  AppConfig cfg_;
  std::unique_ptr<net::Link> owned_link_;
  Engine engine_;
  std::mt19937_64 rng_;
  uint32_t next_qpn_;
  std::mutex mu_;
  std::thread runner_;
  std::atomic<bool> running_{false};
  std::chrono::steady_clock::time_point epoch_;
};

struct InitRdmaOptions {
  size_t max_size = 1 << 20;
  uint16_t oob_port = 18515;
  std::string peer_host;  // empty: listen for the peer instead
  int oob_timeout_ms = 10'000;
  std::vector<std::string> service_chain;  // empty: the config's default chain
};

// The per-QP user handle: a registered buffer that the remote side can
// write and read, plus one-sided invocations and completion polling.
class RdmaHandle {
 public:
  RdmaHandle() = default;

  bool is_open() const { return node_ != nullptr && open_; }
  uint32_t qpn() const { return qpn_; }
  uint8_t* buffer();
  size_t buffer_size() const;
  uint64_t remote_region_size() const { return remote_size_; }

  /// Asynchronous one-sided operation; completion arrives on the handle's
  /// completion counters.
  Result<uint64_t, SubmitError> invoke(WorkKind op, const SgEntry& sg);

  /// Completions of `kind` observed since the last reset. LOCAL_WRITE counts
  /// inbound message deliveries into our buffer.
  uint64_t check_completed(CompletionKind kind) const;
  void reset_completed(CompletionKind kind);
  Result<uint64_t, std::string> wait_completed(CompletionKind kind, uint64_t n, int timeout_ms);
  std::vector<Completion> drain_completions();

  /// Callback fired once per delivered message the inspector flagged; the
  /// data is delivered regardless (flag-and-deliver).
  Result<uint64_t, SubmitError> on_malicious(std::function<void(const MaliciousEvent&)> cb);

  void close();

 private:
  friend Result<RdmaHandle, std::string> init_rdma(Node& node, const InitRdmaOptions& opts);
  friend Result<std::pair<RdmaHandle, RdmaHandle>, std::string> connect_pair(
      Node& a, Node& b, size_t size_a, size_t size_b, const std::vector<std::string>& chain_a,
      const std::vector<std::string>& chain_b);

  Node* node_ = nullptr;
  uint32_t qpn_ = 0;
  uint64_t remote_size_ = 0;
  bool open_ = false;
};

/// Full connection setup: allocates and registers a buffer, exchanges QP
/// descriptors with the remote node over a TCP stream, installs the QP, and
/// binds the configured service chain.
Result<RdmaHandle, std::string> init_rdma(Node& node, const InitRdmaOptions& opts);

/// In-process variant for simulator fixtures: the same descriptor lines are
/// produced and parsed, but handed across directly instead of over TCP.
Result<std::pair<RdmaHandle, RdmaHandle>, std::string> connect_pair(
    Node& a, Node& b, size_t size_a, size_t size_b, const std::vector<std::string>& chain_a = {},
    const std::vector<std::string>& chain_b = {});

}  // namespace uroce::api
