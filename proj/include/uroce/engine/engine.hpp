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

#include <atomic>
#include <deque>
#include <functional>
#include <memory>

#include "uroce/engine/config.hpp"
#include "uroce/engine/tx_path.hpp"
#include "uroce/flow/credit.hpp"
#include "uroce/kernels/aes128.hpp"
#include "uroce/net/link.hpp"
#include "uroce/rel/retransmit.hpp"
#include "uroce/rel/stream_mux.hpp"
#include "uroce/svc/service.hpp"
#include "uroce/svc/sink.hpp"

namespace uroce {

enum class CompletionKind : uint8_t { kLocalWrite = 0, kRemoteWrite = 1, kRemoteRead = 2 };
enum class CompletionStatus : uint8_t { kOk, kNak, kTimeoutExhausted };

struct Completion {
  uint64_t request_id = 0;  // 0 for inbound-delivery completions
  uint32_t qpn = 0;
  CompletionKind kind = CompletionKind::kLocalWrite;
  CompletionStatus status = CompletionStatus::kOk;
  uint32_t length = 0;
  bool malicious = false;
};

struct MaliciousEvent {
  uint32_t qpn = 0;
  uint64_t offset = 0;  // region/sink offset of the flagged message
  uint32_t length = 0;
  double score = 0.0;
};

struct SgEntry {
  uint32_t len = 0;
  uint64_t local_offset = 0;
  uint64_t remote_offset = 0;
};

enum class WorkKind : uint8_t { kRemoteWrite, kRemoteRead };
enum class SubmitError : uint8_t { kUnknownQpn, kBounds, kBadLength, kClosed };

/// One executed (or enqueued) delivery, surfaced to instrumentation probes.
struct DeliveryRecord {
  uint32_t qpn = 0;
  uint64_t message_id = 0;
  uint64_t offset = 0;
  uint32_t length = 0;
  bool is_read_data = false;
  bool malicious = false;
  const char* target = "";  // "host", sink name, or "host+copy"
};

struct EngineStats {
  uint64_t packets_sent = 0;
  uint64_t data_packets_sent = 0;
  uint64_t packets_received = 0;
  uint64_t acks_sent = 0;
  uint64_t naks_sent = 0;
  uint64_t acks_received = 0;
  uint64_t naks_received = 0;
  uint64_t retransmitted_packets = 0;
  uint64_t timeout_replays = 0;
  uint64_t nak_replays = 0;
  uint64_t qp_failures = 0;

  uint64_t drop_icrc = 0;
  uint64_t drop_parse = 0;
  uint64_t drop_unknown_qpn = 0;
  uint64_t drop_no_credit = 0;
  uint64_t drop_sequence_error = 0;
  uint64_t drop_failed_qp = 0;
  uint64_t duplicate_data_packets = 0;
  uint64_t stale_acks = 0;
  uint64_t orphan_read_responses = 0;
  uint64_t rejected_messages = 0;  // NAK-other on inbound
  uint64_t protocol_anomalies = 0;
  uint64_t link_send_errors = 0;
  uint64_t callback_exceptions = 0;

  uint64_t deliveries_enqueued = 0;
  uint64_t deliveries_consumed = 0;
  uint64_t delivered_bytes = 0;
  uint64_t host_writes = 0;
  uint64_t device_writes = 0;
  uint64_t staging_copies = 0;

  uint32_t max_inflight_watermark = 0;
};

// Wall-clock stage accumulators for the latency-breakdown bench mode.
enum class Stage : uint8_t {
  kTxBuild = 0,
  kTxIcrc,
  kLinkSend,
  kRxParse,
  kRxIcrc,
  kRxProcess,
  kDeliver,
  kCount
};

struct StageTimes {
  uint64_t ns[static_cast<size_t>(Stage::kCount)] = {};
  uint64_t events[static_cast<size_t>(Stage::kCount)] = {};
};

// The transport engine: one per endpoint, owning the per-QP tables, the
// retransmission machinery, credits, service chains, sinks, and the link
// datapath. Single-threaded by construction; `step(now)` drives RX, timers,
// TX arbitration, and delivery. Time is injected, never sampled.
class Engine {
 public:
  Engine(const EngineConfig& cfg, net::Link* link);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // ---- QP lifecycle ----
  Result<uint32_t, QpError> create_qp(const QpConnection& conn, uint32_t initial_send_psn,
                                      uint32_t initial_recv_psn, size_t region_size);
  /// Completes a half-open QP once the peer descriptor is known (the
  /// out-of-band exchange). Remote fields are immutable afterwards.
  struct RemotePeer {
    uint32_t qpn = 0;
    uint32_t ip = 0;
    uint16_t udp_port = wire::kRoceUdpPort;
    uint32_t rkey = 0;
    uint32_t initial_psn = 0;
    uint64_t region_vaddr = 0;
    uint64_t region_size = 0;
    std::optional<std::array<uint8_t, 16>> aes_key;
  };
  bool connect_qp(uint32_t qpn, const RemotePeer& peer);
  bool destroy_qp(uint32_t qpn);
  QpContext* qp(uint32_t qpn) { return qps_.find(qpn); }
  const QpTable& qp_table() const { return qps_; }
  void set_remote_region(uint32_t qpn, uint64_t remote_vaddr, uint64_t remote_size);

  uint8_t* region_data(uint32_t qpn);
  size_t region_size(uint32_t qpn) const;
  uint64_t region_vaddr(uint32_t qpn) const;

  /// Cached per-QP key schedule, for the cipher service's key lookup.
  const kernels::Aes128Schedule* aes_schedule(uint32_t qpn) const;

  // ---- services, sinks, routing ----
  svc::ServiceRegistry& services() { return services_; }
  Result<uint32_t, svc::BindError> bind_services(uint32_t qpn,
                                                 const std::vector<std::string>& chain);
  svc::MemorySink* add_sink(const std::string& name, size_t size, bool device);
  svc::MemorySink* sink(const std::string& name);
  enum class RouteError : uint8_t { kUnknownSink, kUnknownQpn };
  /// Routes a QP's inbound payload to a named sink, either directly or
  /// staged through the host region with an explicit copy.
  Result<uint32_t, RouteError> set_delivery_route(uint32_t qpn, const std::string& sink_name,
                                                  bool staged);
  void clear_delivery_route(uint32_t qpn);
  /// Scatter layout for inbound messages: byte ranges filled in order from
  /// the message start before falling back to contiguous placement.
  void set_rx_scatter(uint32_t qpn, std::vector<std::pair<uint64_t, uint32_t>> ranges);

  // ---- verbs-style surface ----
  Result<uint64_t, SubmitError> submit(uint32_t qpn, WorkKind kind, const SgEntry& sg);
  uint64_t completed_count(uint32_t qpn, CompletionKind kind) const;
  void reset_completed(uint32_t qpn, CompletionKind kind);
  std::vector<Completion> drain_completions(uint32_t qpn);
  void set_malicious_callback(uint32_t qpn, std::function<void(const MaliciousEvent&)> cb);

  // ---- event loop ----
  void step(MicroTime now);
  bool quiescent() const;

  // ---- instrumentation & control ----
  void set_sink_stalled(bool stalled) { sink_stalled_ = stalled; }
  bool sink_stalled() const { return sink_stalled_; }
  void set_delivery_probe(std::function<void(const DeliveryRecord&)> probe) {
    delivery_probe_ = std::move(probe);
  }
  /// delta > 0: packets entering flight; delta < 0: packets retired.
  void set_flow_probe(std::function<void(uint32_t qpn, int32_t delta, MicroTime now)> probe) {
    flow_probe_ = std::move(probe);
  }
  uint32_t inflight_packets(uint32_t qpn) const;
  const EngineStats& stats() const { return stats_; }
  const StageTimes& stage_times() const { return stage_times_; }
  const EngineConfig& config() const { return cfg_; }
  net::Sniffer& sniffer() { return sniffer_; }
  const RetransBuffer& retrans() const { return retrans_; }
  const CreditPool& credit_pool() const { return credit_pool_; }
  void set_congestion_control(std::unique_ptr<CongestionControl> cc) { cc_ = std::move(cc); }

 private:
  struct PendingRead {
    uint64_t request_id = 0;
    uint64_t local_offset = 0;
    uint32_t total_length = 0;
    uint32_t request_psn = 0;
    uint32_t cursor = 0;
    bool malicious = false;
    double score = 0.0;
  };

  struct RequestInfo {
    WorkKind kind;
    uint32_t qpn;
    uint32_t length;
    bool failed = false;  // NAK-other already completed it
  };

  struct DeliveryCommand {
    uint32_t qpn = 0;
    uint64_t message_id = 0;
    uint64_t offset = 0;          // destination offset (region or sink space)
    uint64_t stream_offset = 0;   // position of this chunk within the message
    uint64_t message_base = 0;    // destination offset of the message start
    Bytes payload;
    bool malicious_packet = false;
    bool message_done = false;
    bool message_malicious = false;
    double message_score = 0.0;
    uint32_t message_length = 0;
    bool is_read_data = false;
    uint64_t request_id = 0;
  };

  struct QpRuntime {
    uint32_t qpn = 0;
    Bytes region;
    uint64_t region_base = 0;
    uint64_t remote_base = 0;
    uint64_t remote_size = 0;
    QpBudget budget;
    std::deque<PendingRead> pending_reads;

    // inbound write-message reassembly extras
    uint64_t rx_msg_base_vaddr = 0;
    uint32_t rx_msg_total = 0;
    bool rx_msg_rejected = false;
    bool rx_msg_malicious = false;
    double rx_msg_score = 0.0;
    uint64_t rx_msg_counter = 0;

    bool nak_outstanding = false;
    bool has_failed_range = false;
    uint32_t failed_first_psn = 0;
    uint32_t failed_last_psn = 0;

    std::optional<kernels::Aes128Schedule> aes;

    std::string delivery_sink;  // empty = host region
    bool staged_delivery = false;
    std::vector<std::pair<uint64_t, uint32_t>> rx_scatter;

    std::function<void(const MaliciousEvent&)> malicious_cb;
    std::array<std::atomic<uint64_t>, 3> completed{};
    std::array<std::atomic<uint64_t>, 3> completed_base{};
    std::vector<Completion> completion_log;

    explicit QpRuntime(uint32_t q, uint32_t budget_max) : qpn(q), budget(budget_max) {}
  };

  QpRuntime* runtime(uint32_t qpn);
  const QpRuntime* runtime(uint32_t qpn) const;

  // datapath stages
  void rx_frame(Bytes frame, MicroTime now);
  void rx_sequenced(QpRuntime& rt, QpContext& ctx, wire::RocePacket& pkt, MicroTime now);
  void rx_write(QpRuntime& rt, QpContext& ctx, wire::RocePacket& pkt, MicroTime now);
  void rx_read_request(QpRuntime& rt, QpContext& ctx, const wire::RocePacket& pkt, MicroTime now);
  void rx_read_response(QpRuntime& rt, QpContext& ctx, wire::RocePacket& pkt, MicroTime now);
  void rx_ack(QpRuntime& rt, QpContext& ctx, const wire::RocePacket& pkt, MicroTime now);
  void handle_cumulative_ack(QpRuntime& rt, QpContext& ctx, uint32_t acked_psn, MicroTime now);
  void reject_inbound(QpRuntime& rt, QpContext& ctx, const wire::RocePacket& pkt, MicroTime now);

  void send_ack(const QpRuntime& rt, const QpContext& ctx, uint32_t psn, MicroTime now);
  void send_nak(const QpRuntime& rt, const QpContext& ctx, uint8_t syndrome, uint32_t psn,
                MicroTime now);
  void send_control(const QpContext& ctx, uint8_t syn, uint32_t psn, MicroTime now);
  void send_image(BytesView image, MicroTime now);

  void poll_timers(MicroTime now);
  void pump_tx(MicroTime now);
  void emit_message(const TxMessage& msg, QpRuntime& rt, QpContext& ctx, MicroTime now);
  void pump_deliveries(MicroTime now);
  void execute_delivery(DeliveryCommand cmd, MicroTime now);
  void fail_qp(QpRuntime& rt, QpContext& ctx, MicroTime now);
  void complete(QpRuntime& rt, Completion c);

  bool apply_rx_chain(QpRuntime& rt, uint8_t* data, size_t len, uint64_t stream_offset);
  bool rx_chain_admits(const QpRuntime& rt, uint64_t total_length) const;
  bool tx_chain_admits(const QpRuntime& rt, uint64_t total_length) const;
  svc::DpiVerdict run_inspectors(QpRuntime& rt, const wire::RocePacket& pkt);

  class StageTimer;

  EngineConfig cfg_;
  net::Link* link_;
  QpTable qps_;
  RetransBuffer retrans_;
  CreditPool credit_pool_;
  StreamMux mux_;
  svc::ServiceRegistry services_;
  net::Sniffer sniffer_;
  std::unique_ptr<CongestionControl> cc_;

  std::unordered_map<uint32_t, std::unique_ptr<QpRuntime>> runtimes_;
  std::unordered_map<std::string, std::unique_ptr<svc::MemorySink>> sinks_;
  std::unordered_map<uint64_t, RequestInfo> requests_;
  std::deque<DeliveryCommand> deliveries_;

  uint64_t next_request_id_ = 1;
  MicroTime last_tick_ = std::numeric_limits<MicroTime>::min();
  bool sink_stalled_ = false;

  EngineStats stats_;
  StageTimes stage_times_;
  std::function<void(const DeliveryRecord&)> delivery_probe_;
  std::function<void(uint32_t, int32_t, MicroTime)> flow_probe_;
};

}  // namespace uroce
