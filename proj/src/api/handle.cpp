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

#include "uroce/api/handle.hpp"

namespace uroce::api {

Node::Node(const AppConfig& cfg, net::Link* link)
    : cfg_(cfg),
      engine_(cfg.engine, link),
      rng_(cfg.engine.rng_seed),
      next_qpn_(0x10),
      epoch_(std::chrono::steady_clock::now()) {}

Node::Node(const AppConfig& cfg, std::unique_ptr<net::Link> link)
    : cfg_(cfg),
      owned_link_(std::move(link)),
      engine_(cfg.engine, owned_link_.get()),
      rng_(cfg.engine.rng_seed),
      next_qpn_(0x10),
      epoch_(std::chrono::steady_clock::now()) {}

Node::~Node() { stop_runner(); }

MicroTime Node::now_us() const {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() -
                                                               epoch_)
      .count();
}

void Node::start_runner() {
  if (running_.exchange(true)) return;
  runner_ = std::thread([this] {
    while (running_.load(std::memory_order_relaxed)) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        engine_.step(now_us());
      }
      std::this_thread::sleep_for(std::chrono::microseconds(50));
    }
  });
}

void Node::stop_runner() {
  if (!running_.exchange(false)) return;
  if (runner_.joinable()) runner_.join();
}

void Node::step(MicroTime now) {
  std::lock_guard<std::mutex> lock(mu_);
  engine_.step(now);
}

Result<uint64_t, SubmitError> Node::submit(uint32_t qpn, WorkKind kind, const SgEntry& sg) {
  std::lock_guard<std::mutex> lock(mu_);
  return engine_.submit(qpn, kind, sg);
}

uint64_t Node::completed(uint32_t qpn, CompletionKind kind) {
  // Counters are atomics; no lock needed for polling.
  return engine_.completed_count(qpn, kind);
}

void Node::reset_completed(uint32_t qpn, CompletionKind kind) {
  std::lock_guard<std::mutex> lock(mu_);
  engine_.reset_completed(qpn, kind);
}

std::vector<Completion> Node::drain_completions(uint32_t qpn) {
  std::lock_guard<std::mutex> lock(mu_);
  return engine_.drain_completions(qpn);
}

Result<uint64_t, std::string> Node::wait_completed(uint32_t qpn, CompletionKind kind, uint64_t n,
                                                   int timeout_ms) {
  if (!threaded()) return std::string("wait_completed: node runner is not started");
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    uint64_t c = completed(qpn, kind);
    if (c >= n) return c;
    if (std::chrono::steady_clock::now() >= deadline)
      return std::string("wait_completed: timeout");
    std::this_thread::sleep_for(std::chrono::microseconds(100));
  }
}

void Node::set_malicious_callback(uint32_t qpn, std::function<void(const MaliciousEvent&)> cb) {
  std::lock_guard<std::mutex> lock(mu_);
  engine_.set_malicious_callback(qpn, std::move(cb));
}

bool Node::destroy_qp(uint32_t qpn) {
  std::lock_guard<std::mutex> lock(mu_);
  return engine_.destroy_qp(qpn);
}

uint32_t Node::alloc_qpn() { return (next_qpn_++) & wire::kQpnMask; }
uint32_t Node::random_psn() { return static_cast<uint32_t>(rng_()) & wire::kPsnMask; }
uint32_t Node::random_rkey() { return static_cast<uint32_t>(rng_()); }

// ---------------------------------------------------------------------------

uint8_t* RdmaHandle::buffer() {
  return is_open() ? node_->engine().region_data(qpn_) : nullptr;
}

size_t RdmaHandle::buffer_size() const {
  return node_ == nullptr ? 0 : node_->engine().region_size(qpn_);
}

Result<uint64_t, SubmitError> RdmaHandle::invoke(WorkKind op, const SgEntry& sg) {
  if (!is_open()) return SubmitError::kClosed;
  return node_->submit(qpn_, op, sg);
}

uint64_t RdmaHandle::check_completed(CompletionKind kind) const {
  if (!is_open()) return 0;
  return node_->completed(qpn_, kind);
}

void RdmaHandle::reset_completed(CompletionKind kind) {
  if (is_open()) node_->reset_completed(qpn_, kind);
}

Result<uint64_t, std::string> RdmaHandle::wait_completed(CompletionKind kind, uint64_t n,
                                                         int timeout_ms) {
  if (!is_open()) return std::string("wait_completed: handle closed");
  return node_->wait_completed(qpn_, kind, n, timeout_ms);
}

std::vector<Completion> RdmaHandle::drain_completions() {
  if (!is_open()) return {};
  return node_->drain_completions(qpn_);
}

Result<uint64_t, SubmitError> RdmaHandle::on_malicious(
    std::function<void(const MaliciousEvent&)> cb) {
  if (!is_open()) return SubmitError::kClosed;
  node_->set_malicious_callback(qpn_, std::move(cb));
  return static_cast<uint64_t>(qpn_);
}

void RdmaHandle::close() {
  if (is_open()) {
    node_->destroy_qp(qpn_);
    open_ = false;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct LocalQp {
  uint32_t qpn;
  uint32_t psn;
  uint32_t rkey;
  OobQpDescriptor desc;
};

Result<LocalQp, std::string> make_local_qp(Node& node, size_t max_size,
                                           const std::optional<std::array<uint8_t, 16>>& key) {
  LocalQp lq;
  lq.qpn = node.alloc_qpn();
  lq.psn = node.random_psn();
  lq.rkey = node.random_rkey();

  QpConnection conn;
  conn.local_qpn = lq.qpn;
  conn.local_rkey = lq.rkey;

  std::lock_guard<std::mutex> lock(node.api_mutex());
  auto created = node.engine().create_qp(conn, lq.psn, 0, max_size);
  if (!created.ok()) return std::string("init_rdma: QP table rejected the connection");

  lq.desc.qpn = lq.qpn;
  lq.desc.initial_psn = lq.psn;
  lq.desc.rkey = lq.rkey;
  lq.desc.region_vaddr = node.engine().region_vaddr(lq.qpn);
  lq.desc.region_size = max_size;
  lq.desc.ip = node.config().engine.local_ip;
  lq.desc.udp_port = node.config().engine.local_udp_port;
  lq.desc.aes_key = key;
  return lq;
}

Result<uint32_t, std::string> finish_connect(Node& node, const LocalQp& lq,
                                             const OobQpDescriptor& peer, bool prefer_peer_key,
                                             const std::vector<std::string>& chain) {
  Engine::RemotePeer rp;
  rp.qpn = peer.qpn;
  rp.ip = peer.ip;
  rp.udp_port = peer.udp_port;
  rp.rkey = peer.rkey;
  rp.initial_psn = peer.initial_psn;
  rp.region_vaddr = peer.region_vaddr;
  rp.region_size = peer.region_size;
  // Both ends must agree on one key: the connecting side's key wins when
  // both present one.
  if (prefer_peer_key) {
    rp.aes_key = peer.aes_key.has_value() ? peer.aes_key : lq.desc.aes_key;
  } else {
    rp.aes_key = lq.desc.aes_key.has_value() ? lq.desc.aes_key : peer.aes_key;
  }

  std::lock_guard<std::mutex> lock(node.api_mutex());
  if (!node.engine().connect_qp(lq.qpn, rp)) return std::string("init_rdma: connect failed");
  if (!chain.empty()) {
    auto bound = node.engine().bind_services(lq.qpn, chain);
    if (!bound.ok()) {
      return std::string(bound.error() == svc::BindError::kUnknownService
                             ? "init_rdma: unknown service in chain"
                             : "init_rdma: chain expansion rejected");
    }
  }
  return lq.qpn;
}

}  // namespace

Result<RdmaHandle, std::string> init_rdma(Node& node, const InitRdmaOptions& opts) {
  std::optional<std::array<uint8_t, 16>> key;
  if (!node.config().aes_key_hex.empty()) {
    auto raw = from_hex(node.config().aes_key_hex);
    if (!raw || raw->size() != 16) return std::string("init_rdma: bad aes key in config");
    std::array<uint8_t, 16> k;
    std::memcpy(k.data(), raw->data(), 16);
    key = k;
  }

  auto lq = make_local_qp(node, opts.max_size, key);
  if (!lq.ok()) return lq.error();

  const bool is_client = !opts.peer_host.empty();
  Result<OobQpDescriptor, std::string> peer = std::string("unreached");
  if (is_client) {
    peer = oob_exchange_client(opts.peer_host, opts.oob_port, lq.value().desc,
                               opts.oob_timeout_ms);
  } else {
    peer = oob_exchange_server(opts.oob_port, lq.value().desc, opts.oob_timeout_ms);
  }
  if (!peer.ok()) {
    node.destroy_qp(lq.value().qpn);
    return peer.error();
  }

  const std::vector<std::string>& chain =
      opts.service_chain.empty() ? node.config().default_chain : opts.service_chain;
  auto connected = finish_connect(node, lq.value(), peer.value(), /*prefer_peer_key=*/!is_client,
                                  chain);
  if (!connected.ok()) {
    node.destroy_qp(lq.value().qpn);
    return connected.error();
  }

  RdmaHandle h;
  h.node_ = &node;
  h.qpn_ = lq.value().qpn;
  h.remote_size_ = peer.value().region_size;
  h.open_ = true;
  return h;
}

Result<std::pair<RdmaHandle, RdmaHandle>, std::string> connect_pair(
    Node& a, Node& b, size_t size_a, size_t size_b, const std::vector<std::string>& chain_a,
    const std::vector<std::string>& chain_b) {
  std::optional<std::array<uint8_t, 16>> key_a, key_b;
  if (!a.config().aes_key_hex.empty()) {
    auto raw = from_hex(a.config().aes_key_hex);
    if (!raw || raw->size() != 16) return std::string("connect_pair: bad aes key");
    std::array<uint8_t, 16> k;
    std::memcpy(k.data(), raw->data(), 16);
    key_a = k;
  }
  if (!b.config().aes_key_hex.empty()) {
    auto raw = from_hex(b.config().aes_key_hex);
    if (!raw || raw->size() != 16) return std::string("connect_pair: bad aes key");
    std::array<uint8_t, 16> k;
    std::memcpy(k.data(), raw->data(), 16);
    key_b = k;
  }

  auto la = make_local_qp(a, size_a, key_a);
  if (!la.ok()) return la.error();
  auto lb = make_local_qp(b, size_b, key_b);
  if (!lb.ok()) return lb.error();

  // Round-trip each descriptor through its wire line, exactly as the TCP
  // exchange would.
  auto da = oob_parse(oob_format(la.value().desc));
  auto db = oob_parse(oob_format(lb.value().desc));
  if (!da.ok() || !db.ok()) return std::string("connect_pair: descriptor round-trip failed");

  auto ca = finish_connect(a, la.value(), db.value(), /*prefer_peer_key=*/false, chain_a);
  if (!ca.ok()) return ca.error();
  auto cb = finish_connect(b, lb.value(), da.value(), /*prefer_peer_key=*/true, chain_b);
  if (!cb.ok()) return cb.error();

  RdmaHandle ha, hb;
  ha.node_ = &a;
  ha.qpn_ = la.value().qpn;
  ha.remote_size_ = size_b;
  ha.open_ = true;
  hb.node_ = &b;
  hb.qpn_ = lb.value().qpn;
  hb.remote_size_ = size_a;
  hb.open_ = true;
  return std::make_pair(ha, hb);
}

}  // namespace uroce::api
