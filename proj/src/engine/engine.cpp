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

#include "uroce/engine/engine.hpp"

#include <chrono>

#include "uroce/wire/icrc.hpp"

namespace uroce {

using wire::MsgPosition;
using wire::Opcode;
using wire::RocePacket;

// Wall-clock probe for the latency-breakdown bench mode; compiled to a
// cheap no-op check when stage timing is off.
class Engine::StageTimer {
 public:
  StageTimer(Engine* e, Stage s) : e_(e), s_(s) {
    if (e_->cfg_.stage_timing) start_ = std::chrono::steady_clock::now();
  }
  ~StageTimer() {
    if (e_->cfg_.stage_timing) {
      auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - start_)
                    .count();
      e_->stage_times_.ns[static_cast<size_t>(s_)] += static_cast<uint64_t>(ns);
      e_->stage_times_.events[static_cast<size_t>(s_)] += 1;
    }
  }

 private:
  Engine* e_;
  Stage s_;
  std::chrono::steady_clock::time_point start_;
};

Engine::Engine(const EngineConfig& cfg, net::Link* link)
    : cfg_(cfg),
      link_(link),
      qps_(cfg.qp_capacity),
      retrans_(cfg.retrans_capacity_bytes),
      credit_pool_(cfg.credit_pool_capacity) {
  if (cfg_.sniffer_enabled) sniffer_.enable(cfg_.sniffer);
}

Engine::~Engine() = default;

Engine::QpRuntime* Engine::runtime(uint32_t qpn) {
  auto it = runtimes_.find(qpn);
  return it == runtimes_.end() ? nullptr : it->second.get();
}

const Engine::QpRuntime* Engine::runtime(uint32_t qpn) const {
  auto it = runtimes_.find(qpn);
  return it == runtimes_.end() ? nullptr : it->second.get();
}

// ---------------------------------------------------------------------------
// QP lifecycle

Result<uint32_t, QpError> Engine::create_qp(const QpConnection& conn, uint32_t initial_send_psn,
                                            uint32_t initial_recv_psn, size_t region_size) {
  auto created = qps_.create(conn, initial_send_psn, initial_recv_psn);
  if (!created.ok()) return created.error();

  auto rt = std::make_unique<QpRuntime>(conn.local_qpn, cfg_.max_outstanding);
  rt->region.assign(region_size, 0);
  // Synthetic, stable virtual addresses: one 256 MiB arena per QP slot.
  rt->region_base = 0x40000000ull + (static_cast<uint64_t>(runtimes_.size()) << 28);
  if (conn.aes_key.has_value()) rt->aes = kernels::aes128_expand(conn.aes_key->data());
  runtimes_.emplace(conn.local_qpn, std::move(rt));
  return conn.local_qpn;
}

bool Engine::connect_qp(uint32_t qpn, const RemotePeer& peer) {
  QpRuntime* rt = runtime(qpn);
  QpContext* ctx = qps_.find(qpn);
  if (rt == nullptr || ctx == nullptr) return false;
  ctx->connection.remote_qpn = peer.qpn;
  ctx->connection.remote_ip = peer.ip;
  ctx->connection.remote_udp_port = peer.udp_port;
  ctx->connection.remote_rkey = peer.rkey;
  ctx->psn.expected_rx_psn = peer.initial_psn & wire::kPsnMask;
  rt->remote_base = peer.region_vaddr;
  rt->remote_size = peer.region_size;
  if (peer.aes_key.has_value()) {
    ctx->connection.aes_key = peer.aes_key;
    rt->aes = kernels::aes128_expand(peer.aes_key->data());
  }
  return true;
}

bool Engine::destroy_qp(uint32_t qpn) {
  QpRuntime* rt = runtime(qpn);
  if (rt == nullptr) return false;
  retrans_.drop_qp(qpn);
  mux_.drop_qp(qpn);
  services_.unbind(qpn);
  runtimes_.erase(qpn);
  return qps_.destroy(qpn);
}

void Engine::set_remote_region(uint32_t qpn, uint64_t remote_vaddr, uint64_t remote_size) {
  if (QpRuntime* rt = runtime(qpn)) {
    rt->remote_base = remote_vaddr;
    rt->remote_size = remote_size;
  }
}

uint8_t* Engine::region_data(uint32_t qpn) {
  QpRuntime* rt = runtime(qpn);
  return rt == nullptr ? nullptr : rt->region.data();
}

size_t Engine::region_size(uint32_t qpn) const {
  const QpRuntime* rt = runtime(qpn);
  return rt == nullptr ? 0 : rt->region.size();
}

uint64_t Engine::region_vaddr(uint32_t qpn) const {
  const QpRuntime* rt = runtime(qpn);
  return rt == nullptr ? 0 : rt->region_base;
}

const kernels::Aes128Schedule* Engine::aes_schedule(uint32_t qpn) const {
  const QpRuntime* rt = runtime(qpn);
  if (rt == nullptr || !rt->aes.has_value()) return nullptr;
  return &*rt->aes;
}

// ---------------------------------------------------------------------------
// Services, sinks, routing

Result<uint32_t, svc::BindError> Engine::bind_services(uint32_t qpn,
                                                       const std::vector<std::string>& chain) {
  auto res = services_.bind(qpn, chain);
  if (res.ok()) {
    if (QpContext* ctx = qps_.find(qpn)) {
      std::string joined;
      for (const auto& n : chain) {
        if (!joined.empty()) joined += ",";
        joined += n;
      }
      ctx->connection.service_binding = joined;
    }
  }
  return res;
}

svc::MemorySink* Engine::add_sink(const std::string& name, size_t size, bool device) {
  auto sink = std::make_unique<svc::MemorySink>(name, size, device);
  svc::MemorySink* out = sink.get();
  sinks_[name] = std::move(sink);
  return out;
}

svc::MemorySink* Engine::sink(const std::string& name) {
  auto it = sinks_.find(name);
  return it == sinks_.end() ? nullptr : it->second.get();
}

Result<uint32_t, Engine::RouteError> Engine::set_delivery_route(uint32_t qpn,
                                                                const std::string& sink_name,
                                                                bool staged) {
  QpRuntime* rt = runtime(qpn);
  if (rt == nullptr) return RouteError::kUnknownQpn;
  if (!sinks_.contains(sink_name)) return RouteError::kUnknownSink;
  rt->delivery_sink = sink_name;
  rt->staged_delivery = staged;
  return qpn;
}

void Engine::clear_delivery_route(uint32_t qpn) {
  if (QpRuntime* rt = runtime(qpn)) {
    rt->delivery_sink.clear();
    rt->staged_delivery = false;
  }
}

void Engine::set_rx_scatter(uint32_t qpn, std::vector<std::pair<uint64_t, uint32_t>> ranges) {
  if (QpRuntime* rt = runtime(qpn)) rt->rx_scatter = std::move(ranges);
}

bool Engine::rx_chain_admits(const QpRuntime& rt, uint64_t total_length) const {
  const auto* chain = services_.chain_for(rt.qpn);
  if (chain == nullptr) return true;
  for (const auto& svc : chain->on_path) {
    if (svc::applies_to(svc->direction(), svc::ServiceDirection::kRx) &&
        !svc->admits_length(total_length)) {
      return false;
    }
  }
  return true;
}

bool Engine::tx_chain_admits(const QpRuntime& rt, uint64_t total_length) const {
  const auto* chain = services_.chain_for(rt.qpn);
  if (chain == nullptr) return true;
  for (const auto& svc : chain->on_path) {
    if (svc::applies_to(svc->direction(), svc::ServiceDirection::kTx) &&
        !svc->admits_length(total_length)) {
      return false;
    }
  }
  return true;
}

bool Engine::apply_rx_chain(QpRuntime& rt, uint8_t* data, size_t len, uint64_t stream_offset) {
  const auto* chain = services_.chain_for(rt.qpn);
  if (chain == nullptr) return true;
  for (const auto& svc : chain->on_path) {
    if (!svc::applies_to(svc->direction(), svc::ServiceDirection::kRx)) continue;
    if (!svc->transform(rt.qpn, svc::ServiceDirection::kRx, stream_offset, data, len))
      return false;
  }
  return true;
}

svc::DpiVerdict Engine::run_inspectors(QpRuntime& rt, const RocePacket& pkt) {
  svc::DpiVerdict verdict;
  const auto* chain = services_.chain_for(rt.qpn);
  if (chain == nullptr) return verdict;
  // Inspectors see a parallel copy; the commit below joins on their verdict.
  for (const auto& svc : chain->parallel) {
    svc::DpiVerdict v = svc->inspect(rt.qpn, pkt);
    verdict.malicious = verdict.malicious || v.malicious;
    verdict.score = std::max(verdict.score, v.score);
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Submission

Result<uint64_t, SubmitError> Engine::submit(uint32_t qpn, WorkKind kind, const SgEntry& sg) {
  QpRuntime* rt = runtime(qpn);
  QpContext* ctx = qps_.find(qpn);
  if (rt == nullptr || ctx == nullptr) return SubmitError::kUnknownQpn;
  if (ctx->failed) return SubmitError::kClosed;
  if (sg.len == 0) return SubmitError::kBounds;  // dma_length >= 1
  if (sg.local_offset + sg.len > rt->region.size()) return SubmitError::kBounds;
  if (rt->remote_size == 0 || sg.remote_offset + sg.len > rt->remote_size)
    return SubmitError::kBounds;
  // Writes traverse the local TX chain; read payloads traverse the remote
  // TX chain and our RX chain, which share the length contract.
  if (kind == WorkKind::kRemoteWrite && !tx_chain_admits(*rt, sg.len))
    return SubmitError::kBadLength;
  if (kind == WorkKind::kRemoteRead && !rx_chain_admits(*rt, sg.len))
    return SubmitError::kBadLength;

  uint64_t id = next_request_id_++;
  requests_[id] = RequestInfo{kind, qpn, sg.len, false};

  TxMessage msg;
  msg.request_id = id;
  msg.qpn = qpn;
  msg.kind = kind == WorkKind::kRemoteWrite ? TxMessage::Kind::kWrite
                                            : TxMessage::Kind::kReadRequest;
  msg.remote_vaddr = rt->remote_base + sg.remote_offset;
  msg.length = sg.len;
  msg.local_offset = sg.local_offset;
  mux_.push(TxSource::kHostRequest, std::move(msg));
  return id;
}

uint64_t Engine::completed_count(uint32_t qpn, CompletionKind kind) const {
  const QpRuntime* rt = runtime(qpn);
  if (rt == nullptr) return 0;
  size_t k = static_cast<size_t>(kind);
  return rt->completed[k].load(std::memory_order_relaxed) -
         rt->completed_base[k].load(std::memory_order_relaxed);
}

void Engine::reset_completed(uint32_t qpn, CompletionKind kind) {
  QpRuntime* rt = runtime(qpn);
  if (rt == nullptr) return;
  size_t k = static_cast<size_t>(kind);
  rt->completed_base[k].store(rt->completed[k].load(std::memory_order_relaxed),
                              std::memory_order_relaxed);
}

std::vector<Completion> Engine::drain_completions(uint32_t qpn) {
  QpRuntime* rt = runtime(qpn);
  if (rt == nullptr) return {};
  std::vector<Completion> out;
  out.swap(rt->completion_log);
  return out;
}

void Engine::set_malicious_callback(uint32_t qpn, std::function<void(const MaliciousEvent&)> cb) {
  if (QpRuntime* rt = runtime(qpn)) rt->malicious_cb = std::move(cb);
}

void Engine::complete(QpRuntime& rt, Completion c) {
  rt.completed[static_cast<size_t>(c.kind)].fetch_add(1, std::memory_order_relaxed);
  rt.completion_log.push_back(c);
}

uint32_t Engine::inflight_packets(uint32_t qpn) const {
  const QpRuntime* rt = runtime(qpn);
  return rt == nullptr ? 0 : rt->budget.in_flight();
}

// ---------------------------------------------------------------------------
// Event loop

void Engine::step(MicroTime now) {
  while (true) {
    std::optional<Bytes> frame = link_->recv(now);
    if (!frame.has_value()) break;
    rx_frame(std::move(*frame), now);
  }
  if (last_tick_ == std::numeric_limits<MicroTime>::min() ||
      now - last_tick_ >= cfg_.timer_tick_us) {
    last_tick_ = now;
    poll_timers(now);
  }
  // Deliveries land before TX so a read job queued behind a write in PSN
  // order serves the written bytes.
  pump_deliveries(now);
  pump_tx(now);
}

bool Engine::quiescent() const {
  if (!mux_.empty() || retrans_.used_bytes() != 0 || !deliveries_.empty()) return false;
  for (const auto& [qpn, rt] : runtimes_) {
    if (!rt->pending_reads.empty()) return false;
  }
  return requests_.empty();
}

// ---------------------------------------------------------------------------
// RX path

void Engine::rx_frame(Bytes frame, MicroTime now) {
  ++stats_.packets_received;
  sniffer_.tap(frame, net::TapDirection::kRx, now);

  {
    StageTimer t(this, Stage::kRxIcrc);
    if (!wire::icrc_verify_image(frame)) {
      ++stats_.drop_icrc;
      return;
    }
  }

  Result<RocePacket, wire::ParseError> parsed = wire::ParseError::kTruncated;
  {
    StageTimer t(this, Stage::kRxParse);
    parsed = wire::parse_packet(frame);
  }
  if (!parsed.ok()) {
    ++stats_.drop_parse;
    return;
  }
  RocePacket& pkt = parsed.value();
  if (pkt.payload.size() > cfg_.mtu) {
    ++stats_.drop_parse;
    return;
  }

  QpRuntime* rt = runtime(pkt.bth.dest_qpn);
  QpContext* ctx = qps_.find(pkt.bth.dest_qpn);
  if (rt == nullptr || ctx == nullptr) {
    ++stats_.drop_unknown_qpn;  // silent per contract
    return;
  }
  if (ctx->failed) {
    ++stats_.drop_failed_qp;
    return;
  }

  StageTimer t(this, Stage::kRxProcess);
  if (pkt.opcode() == Opcode::kAcknowledge) {
    rx_ack(*rt, *ctx, pkt, now);
  } else {
    rx_sequenced(*rt, *ctx, pkt, now);
  }
}

void Engine::rx_sequenced(QpRuntime& rt, QpContext& ctx, RocePacket& pkt, MicroTime now) {
  switch (psn_window_classify(ctx.psn.expected_rx_psn, pkt.bth.psn)) {
    case PsnCheck::kDuplicate: {
      ++stats_.duplicate_data_packets;
      uint32_t diff_first = (pkt.bth.psn - rt.failed_first_psn) & wire::kPsnMask;
      uint32_t span = (rt.failed_last_psn - rt.failed_first_psn) & wire::kPsnMask;
      if (rt.has_failed_range && diff_first <= span) {
        // Still poisoned: repeat the rejection so the sender can fail it.
        send_nak(rt, ctx, wire::kAethNakOther, rt.failed_last_psn, now);
      } else {
        // Re-acknowledge without redelivery so a lost ACK cannot wedge the
        // sender.
        send_ack(rt, ctx, (ctx.psn.expected_rx_psn - 1) & wire::kPsnMask, now);
      }
      return;
    }
    case PsnCheck::kSequenceError: {
      ++stats_.drop_sequence_error;
      if (!rt.nak_outstanding) {
        rt.nak_outstanding = true;  // one NAK per gap until progress resumes
        send_nak(rt, ctx, wire::kAethNakSequence, ctx.psn.expected_rx_psn, now);
      }
      return;
    }
    case PsnCheck::kInOrder:
      break;
  }

  switch (pkt.opcode()) {
    case Opcode::kWriteFirst:
    case Opcode::kWriteMiddle:
    case Opcode::kWriteLast:
    case Opcode::kWriteOnly:
      rx_write(rt, ctx, pkt, now);
      return;
    case Opcode::kReadRequest:
      rx_read_request(rt, ctx, pkt, now);
      return;
    default:
      rx_read_response(rt, ctx, pkt, now);
      return;
  }
}

void Engine::reject_inbound(QpRuntime& rt, QpContext& ctx, const RocePacket& pkt, MicroTime now) {
  ++stats_.rejected_messages;
  const auto& props = pkt.props();

  rt.has_failed_range = true;
  rt.failed_first_psn = pkt.bth.psn;
  rt.failed_last_psn = pkt.bth.psn;
  if (wire::is_write(pkt.opcode())) {
    if (props.position == MsgPosition::kFirst && pkt.reth.has_value()) {
      size_t segs = segment_count(pkt.reth->dma_length, cfg_.mtu);
      rt.failed_last_psn = (pkt.bth.psn + static_cast<uint32_t>(segs) - 1) & wire::kPsnMask;
      rt.rx_msg_rejected = true;
    } else if (props.position == MsgPosition::kMiddle) {
      if (ctx.msn_rx.in_progress && rt.rx_msg_total != 0) {
        size_t segs = segment_count(rt.rx_msg_total, cfg_.mtu);
        rt.failed_last_psn =
            (ctx.msn_rx.first_psn_of_message + static_cast<uint32_t>(segs) - 1) & wire::kPsnMask;
      }
      rt.rx_msg_rejected = true;
    }
    if (props.position == MsgPosition::kLast || props.position == MsgPosition::kOnly) {
      rt.rx_msg_rejected = false;
    }
  }
  ctx.msn_rx.in_progress = false;
  ctx.advance_rx();
  rt.nak_outstanding = false;
  send_nak(rt, ctx, wire::kAethNakOther, pkt.bth.psn, now);
}

void Engine::rx_write(QpRuntime& rt, QpContext& ctx, RocePacket& pkt, MicroTime now) {
  const auto& props = pkt.props();
  const bool starts = props.position == MsgPosition::kFirst || props.position == MsgPosition::kOnly;
  const bool ends = props.position == MsgPosition::kLast || props.position == MsgPosition::kOnly;

  if (!starts && rt.rx_msg_rejected) {
    // Remainder of a message we already refused: consume and discard.
    ctx.advance_rx();
    rt.nak_outstanding = false;
    if (ends) {
      rt.rx_msg_rejected = false;
      send_nak(rt, ctx, wire::kAethNakOther, pkt.bth.psn, now);
    }
    return;
  }

  if (starts) {
    const wire::RethHeader& reth = *pkt.reth;
    bool rkey_ok = reth.rkey == ctx.connection.local_rkey;
    bool bounds_ok = reth.virtual_address >= rt.region_base &&
                     reth.virtual_address + reth.dma_length <= rt.region_base + rt.region.size();
    if (!rkey_ok || !bounds_ok || !rx_chain_admits(rt, reth.dma_length)) {
      reject_inbound(rt, ctx, pkt, now);
      return;
    }
    ctx.msn_rx.in_progress = true;
    ctx.msn_rx.in_progress_vaddr = reth.virtual_address;
    ctx.msn_rx.bytes_remaining = reth.dma_length;
    ctx.msn_rx.first_psn_of_message = pkt.bth.psn;
    rt.rx_msg_base_vaddr = reth.virtual_address;
    rt.rx_msg_total = reth.dma_length;
    rt.rx_msg_rejected = false;
    rt.rx_msg_malicious = false;
    rt.rx_msg_score = 0.0;
    rt.has_failed_range = false;
    ++rt.rx_msg_counter;
  } else if (!ctx.msn_rx.in_progress) {
    // MIDDLE/LAST without a FIRST.
    ++stats_.protocol_anomalies;
    reject_inbound(rt, ctx, pkt, now);
    return;
  }

  uint32_t chunk = static_cast<uint32_t>(pkt.payload_without_pad());
  if (chunk > ctx.msn_rx.bytes_remaining) {
    // Payload overruns the declared message length.
    reject_inbound(rt, ctx, pkt, now);
    return;
  }

  // Host-facing admission: no credit, no acceptance, no PSN advance; the
  // sender's retransmission recovers the packet later.
  if (!credit_pool_.try_consume()) {
    ++stats_.drop_no_credit;
    return;
  }

  svc::DpiVerdict verdict = run_inspectors(rt, pkt);
  rt.rx_msg_malicious = rt.rx_msg_malicious || verdict.malicious;
  rt.rx_msg_score = std::max(rt.rx_msg_score, verdict.score);

  uint64_t stream_offset = ctx.msn_rx.in_progress_vaddr - rt.rx_msg_base_vaddr;
  Bytes body(pkt.payload.begin(), pkt.payload.begin() + chunk);
  if (!apply_rx_chain(rt, body.data(), body.size(), stream_offset)) {
    credit_pool_.give_back();
    reject_inbound(rt, ctx, pkt, now);
    return;
  }

  DeliveryCommand cmd;
  cmd.qpn = rt.qpn;
  cmd.message_id = rt.rx_msg_counter;
  cmd.offset = ctx.msn_rx.in_progress_vaddr - rt.region_base;
  cmd.stream_offset = stream_offset;
  cmd.message_base = rt.rx_msg_base_vaddr - rt.region_base;
  cmd.payload = std::move(body);
  cmd.malicious_packet = verdict.malicious;
  cmd.is_read_data = false;

  ctx.msn_rx.in_progress_vaddr += chunk;
  ctx.msn_rx.bytes_remaining -= chunk;

  if (ends) {
    if (ctx.msn_rx.bytes_remaining != 0) ++stats_.protocol_anomalies;
    ctx.msn_rx.msn = (ctx.msn_rx.msn + 1) & wire::kPsnMask;
    ctx.msn_rx.in_progress = false;
    cmd.message_done = true;
    cmd.message_malicious = rt.rx_msg_malicious;
    cmd.message_score = rt.rx_msg_score;
    cmd.message_length = rt.rx_msg_total;
  }

  ctx.advance_rx();
  rt.nak_outstanding = false;

  ++stats_.deliveries_enqueued;
  deliveries_.push_back(std::move(cmd));

  if (ends || pkt.bth.ack_request) {
    send_ack(rt, ctx, pkt.bth.psn, now);
  }
}

void Engine::rx_read_request(QpRuntime& rt, QpContext& ctx, const RocePacket& pkt, MicroTime now) {
  const wire::RethHeader& reth = *pkt.reth;
  bool rkey_ok = reth.rkey == ctx.connection.local_rkey;
  bool bounds_ok = reth.virtual_address >= rt.region_base &&
                   reth.virtual_address + reth.dma_length <= rt.region_base + rt.region.size();
  // Responses traverse our TX chain; check the length contract up front.
  if (!rkey_ok || !bounds_ok || !tx_chain_admits(rt, reth.dma_length)) {
    reject_inbound(rt, ctx, pkt, now);
    return;
  }

  ctx.advance_rx();
  ctx.msn_rx.msn = (ctx.msn_rx.msn + 1) & wire::kPsnMask;
  rt.nak_outstanding = false;
  rt.has_failed_range = false;

  TxMessage resp;
  resp.request_id = 0;
  resp.qpn = rt.qpn;
  resp.kind = TxMessage::Kind::kReadResponse;
  resp.remote_vaddr = reth.virtual_address;
  resp.length = reth.dma_length;
  resp.local_offset = reth.virtual_address - rt.region_base;
  mux_.push(TxSource::kReadResponse, std::move(resp));
}

void Engine::rx_read_response(QpRuntime& rt, QpContext& ctx, RocePacket& pkt, MicroTime now) {
  const auto& props = pkt.props();
  const bool starts = props.position == MsgPosition::kFirst || props.position == MsgPosition::kOnly;
  const bool ends = props.position == MsgPosition::kLast || props.position == MsgPosition::kOnly;

  if (rt.pending_reads.empty()) {
    // A replayed read raced its original responses; the data already
    // landed. Consume the sequence number and acknowledge.
    ++stats_.orphan_read_responses;
    ctx.advance_rx();
    rt.nak_outstanding = false;
    if (ends) send_ack(rt, ctx, pkt.bth.psn, now);
    return;
  }

  PendingRead& rd = rt.pending_reads.front();
  if (starts) {
    rd.cursor = 0;  // a re-executed read restarts the stream
    rd.malicious = false;
    rd.score = 0.0;
    // The responder served the request, which implicitly acknowledges
    // everything we sent up to and including it.
    handle_cumulative_ack(rt, ctx, rd.request_psn, now);
  }

  uint32_t chunk = static_cast<uint32_t>(pkt.payload_without_pad());
  if (rd.cursor + chunk > rd.total_length) {
    ++stats_.protocol_anomalies;
    ctx.advance_rx();
    return;
  }

  if (!credit_pool_.try_consume()) {
    ++stats_.drop_no_credit;
    return;
  }

  svc::DpiVerdict verdict = run_inspectors(rt, pkt);
  rd.malicious = rd.malicious || verdict.malicious;
  rd.score = std::max(rd.score, verdict.score);

  Bytes body(pkt.payload.begin(), pkt.payload.begin() + chunk);
  if (!apply_rx_chain(rt, body.data(), body.size(), rd.cursor)) {
    credit_pool_.give_back();
    ++stats_.protocol_anomalies;
    ctx.advance_rx();
    return;
  }

  DeliveryCommand cmd;
  cmd.qpn = rt.qpn;
  cmd.message_id = 0x8000000000000000ull | rd.request_id;
  cmd.offset = rd.local_offset + rd.cursor;
  cmd.stream_offset = rd.cursor;
  cmd.message_base = rd.local_offset;
  cmd.payload = std::move(body);
  cmd.malicious_packet = verdict.malicious;
  cmd.is_read_data = true;
  cmd.request_id = rd.request_id;

  rd.cursor += chunk;

  if (ends) {
    if (rd.cursor != rd.total_length) ++stats_.protocol_anomalies;
    cmd.message_done = true;
    cmd.message_malicious = rd.malicious;
    cmd.message_score = rd.score;
    cmd.message_length = rd.total_length;
    ctx.msn_rx.msn = (ctx.msn_rx.msn + 1) & wire::kPsnMask;
    rt.pending_reads.pop_front();
  }

  ctx.advance_rx();
  rt.nak_outstanding = false;
  ++stats_.deliveries_enqueued;
  deliveries_.push_back(std::move(cmd));

  if (ends) send_ack(rt, ctx, pkt.bth.psn, now);
}

void Engine::rx_ack(QpRuntime& rt, QpContext& ctx, const RocePacket& pkt, MicroTime now) {
  const wire::AethHeader& aeth = *pkt.aeth;
  if (aeth.syndrome == wire::kAethNakSequence) {
    ++stats_.naks_received;
    // Everything before the requested PSN was received.
    handle_cumulative_ack(rt, ctx, (pkt.bth.psn - 1) & wire::kPsnMask, now);
    auto images = retrans_.replay_from(rt.qpn, pkt.bth.psn, now);
    for (const Bytes* img : images) {
      send_image(*img, now);
      ++stats_.retransmitted_packets;
    }
    if (!images.empty()) ++stats_.nak_replays;
    if (cc_) cc_->on_nak(rt.qpn);
    return;
  }
  if (wire::aeth_is_nak(aeth.syndrome)) {
    ++stats_.naks_received;
    // Remote refused the message (access or service contract): fail it.
    auto req_id = retrans_.request_covering(rt.qpn, pkt.bth.psn);
    if (req_id.has_value()) {
      auto it = requests_.find(*req_id);
      if (it != requests_.end() && !it->second.failed) {
        it->second.failed = true;
        Completion c;
        c.request_id = *req_id;
        c.qpn = rt.qpn;
        c.kind = it->second.kind == WorkKind::kRemoteWrite ? CompletionKind::kRemoteWrite
                                                           : CompletionKind::kRemoteRead;
        c.status = CompletionStatus::kNak;
        c.length = it->second.length;
        complete(rt, c);
        if (it->second.kind == WorkKind::kRemoteRead) {
          std::erase_if(rt.pending_reads,
                        [&](const PendingRead& r) { return r.request_id == *req_id; });
        }
      }
    }
    handle_cumulative_ack(rt, ctx, pkt.bth.psn, now);
    if (cc_) cc_->on_nak(rt.qpn);
    return;
  }
  ++stats_.acks_received;
  handle_cumulative_ack(rt, ctx, pkt.bth.psn, now);
}

void Engine::handle_cumulative_ack(QpRuntime& rt, QpContext& ctx, uint32_t acked_psn,
                                   MicroTime now) {
  acked_psn &= wire::kPsnMask;
  if (psn_le(acked_psn, ctx.psn.last_acked_psn)) {
    ++stats_.stale_acks;
    return;
  }
  // Never accept an acknowledgement for PSNs we have not sent.
  uint32_t highest_sent = (ctx.psn.next_send_psn - 1) & wire::kPsnMask;
  if (!psn_le(acked_psn, highest_sent)) {
    ++stats_.protocol_anomalies;
    return;
  }

  auto release = retrans_.release_upto(rt.qpn, acked_psn);
  ctx.psn.last_acked_psn = acked_psn;
  if (release.packets_retired > 0) {
    ctx.psn.retry_count = 0;
    rt.budget.give_back(release.packets_retired);
    if (flow_probe_) flow_probe_(rt.qpn, -static_cast<int32_t>(release.packets_retired), now);
    if (cc_) cc_->on_ack(rt.qpn, release.packets_retired);
  }
  for (uint64_t id : release.completed_requests) {
    if (id == 0) continue;  // responder-generated read responses
    auto it = requests_.find(id);
    if (it == requests_.end()) continue;
    if (it->second.kind == WorkKind::kRemoteWrite) {
      if (!it->second.failed) {
        Completion c;
        c.request_id = id;
        c.qpn = rt.qpn;
        c.kind = CompletionKind::kRemoteWrite;
        c.status = CompletionStatus::kOk;
        c.length = it->second.length;
        complete(rt, c);
      }
      requests_.erase(it);
    } else if (it->second.failed) {
      // Failed reads are done once their request PSN retires.
      requests_.erase(it);
    }
    // Successful reads complete when their data lands, not here.
  }
}

// ---------------------------------------------------------------------------
// Control packets

void Engine::send_control(const QpContext& ctx, uint8_t syn, uint32_t psn, MicroTime now) {
  RocePacket p;
  p.ip.src_addr = cfg_.local_ip;
  p.ip.dst_addr = ctx.connection.remote_ip;
  p.udp.src_port = udp_source_port(ctx.connection.local_qpn);
  p.udp.dst_port = ctx.connection.remote_udp_port;
  p.bth.opcode = static_cast<uint8_t>(Opcode::kAcknowledge);
  p.bth.dest_qpn = ctx.connection.remote_qpn;
  p.bth.psn = psn & wire::kPsnMask;
  p.aeth = wire::AethHeader{syn, ctx.msn_rx.msn};
  Bytes image;
  {
    StageTimer t(this, Stage::kTxIcrc);
    image = wire::serialize_with_icrc(p);
  }
  send_image(image, now);
}

void Engine::send_ack(const QpRuntime& rt, const QpContext& ctx, uint32_t psn, MicroTime now) {
  (void)rt;
  ++stats_.acks_sent;
  send_control(ctx, wire::kAethAck, psn, now);
}

void Engine::send_nak(const QpRuntime& rt, const QpContext& ctx, uint8_t syndrome, uint32_t psn,
                      MicroTime now) {
  (void)rt;
  ++stats_.naks_sent;
  send_control(ctx, syndrome, psn, now);
}

void Engine::send_image(BytesView image, MicroTime now) {
  StageTimer t(this, Stage::kLinkSend);
  sniffer_.tap(image, net::TapDirection::kTx, now);
  if (link_->send(image, now) != net::LinkSendError::kOk) ++stats_.link_send_errors;
  ++stats_.packets_sent;
}

// ---------------------------------------------------------------------------
// Timers and TX

void Engine::poll_timers(MicroTime now) {
  auto expired = retrans_.poll_expired(now, cfg_.retrans_timeout_us, cfg_.max_retries);
  for (const auto& e : expired) {
    QpRuntime* rt = runtime(e.qpn);
    QpContext* ctx = qps_.find(e.qpn);
    if (rt == nullptr || ctx == nullptr) continue;
    if (e.exhausted) {
      fail_qp(*rt, *ctx, now);
      continue;
    }
    ctx->psn.retry_count += 1;
    auto images = retrans_.replay_from(e.qpn, e.from_psn, now);
    for (const Bytes* img : images) {
      send_image(*img, now);
      ++stats_.retransmitted_packets;
    }
    if (!images.empty()) ++stats_.timeout_replays;
    if (cc_) cc_->on_timeout(e.qpn);
  }
}

void Engine::fail_qp(QpRuntime& rt, QpContext& ctx, MicroTime now) {
  (void)now;
  ++stats_.qp_failures;
  ctx.failed = true;
  retrans_.drop_qp(rt.qpn);
  mux_.drop_qp(rt.qpn);
  rt.pending_reads.clear();
  // Every request still tracked on this QP ends with a timeout status.
  for (auto it = requests_.begin(); it != requests_.end();) {
    if (it->second.qpn != rt.qpn) {
      ++it;
      continue;
    }
    if (!it->second.failed) {
      Completion c;
      c.request_id = it->first;
      c.qpn = rt.qpn;
      c.kind = it->second.kind == WorkKind::kRemoteWrite ? CompletionKind::kRemoteWrite
                                                         : CompletionKind::kRemoteRead;
      c.status = CompletionStatus::kTimeoutExhausted;
      c.length = it->second.length;
      complete(rt, c);
    }
    it = requests_.erase(it);
  }
}

void Engine::pump_tx(MicroTime now) {
  auto admissible = [&](const TxMessage& m) {
    QpRuntime* rt = runtime(m.qpn);
    QpContext* ctx = qps_.find(m.qpn);
    if (rt == nullptr || ctx == nullptr || ctx->failed) return false;
    uint32_t packets = message_packets(m, cfg_.mtu);
    if (rt->budget.available() < packets) return false;
    return retrans_.can_insert(message_wire_bytes(m, cfg_.mtu));
  };
  while (true) {
    std::optional<TxMessage> msg = mux_.select(admissible);
    if (!msg.has_value()) break;
    QpRuntime* rt = runtime(msg->qpn);
    QpContext* ctx = qps_.find(msg->qpn);
    emit_message(*msg, *rt, *ctx, now);
  }
}

void Engine::emit_message(const TxMessage& msg, QpRuntime& rt, QpContext& ctx, MicroTime now) {
  Bytes payload;
  if (msg.kind != TxMessage::Kind::kReadRequest) {
    payload.assign(rt.region.begin() + msg.local_offset,
                   rt.region.begin() + msg.local_offset + msg.length);
    const auto* chain = services_.chain_for(rt.qpn);
    if (chain != nullptr) {
      for (const auto& svc : chain->on_path) {
        if (!svc::applies_to(svc->direction(), svc::ServiceDirection::kTx)) continue;
        if (!svc->transform(rt.qpn, svc::ServiceDirection::kTx, 0, payload.data(),
                            payload.size())) {
          // Length contracts are enforced at submission; a failure here is a
          // service bug. Fail the request rather than emit garbage.
          ++stats_.protocol_anomalies;
          auto it = requests_.find(msg.request_id);
          if (it != requests_.end()) {
            Completion c;
            c.request_id = msg.request_id;
            c.qpn = rt.qpn;
            c.kind = CompletionKind::kRemoteWrite;
            c.status = CompletionStatus::kNak;
            c.length = it->second.length;
            complete(rt, c);
            requests_.erase(it);
          }
          return;
        }
      }
    }
  }

  uint32_t first_psn = ctx.psn.next_send_psn;
  std::vector<RocePacket> packets;
  {
    StageTimer t(this, Stage::kTxBuild);
    packets = tx_build(msg, ctx, payload, TxEnv{cfg_.local_ip, cfg_.mtu});
  }

  RetransEntry entry;
  entry.request_id = msg.request_id;
  entry.first_psn = first_psn;
  entry.enqueue_time = now;
  entry.packet_images.reserve(packets.size());
  for (const RocePacket& p : packets) {
    Bytes image;
    {
      StageTimer t(this, Stage::kTxIcrc);
      image = wire::serialize_with_icrc(p);
    }
    entry.packet_images.push_back(std::move(image));
  }

  uint32_t n = static_cast<uint32_t>(entry.packet_images.size());
  rt.budget.try_admit(n);  // admissibility pre-checked
  if (flow_probe_) flow_probe_(rt.qpn, static_cast<int32_t>(n), now);
  stats_.max_inflight_watermark = std::max(stats_.max_inflight_watermark, rt.budget.in_flight());
  if (cc_) cc_->on_packets_sent(rt.qpn, n);

  if (msg.kind == TxMessage::Kind::kReadRequest) {
    rt.pending_reads.push_back(
        PendingRead{msg.request_id, msg.local_offset, msg.length, first_psn, 0, false, 0.0});
  }

  for (const Bytes& image : entry.packet_images) {
    send_image(image, now);
    ++stats_.data_packets_sent;
  }
  retrans_.insert(rt.qpn, std::move(entry));
}

// ---------------------------------------------------------------------------
// Delivery

void Engine::pump_deliveries(MicroTime now) {
  while (!sink_stalled_ && !deliveries_.empty()) {
    DeliveryCommand cmd = std::move(deliveries_.front());
    deliveries_.pop_front();
    execute_delivery(std::move(cmd), now);
  }
}

void Engine::execute_delivery(DeliveryCommand cmd, MicroTime now) {
  (void)now;
  StageTimer t(this, Stage::kDeliver);
  QpRuntime* rt = runtime(cmd.qpn);
  if (rt == nullptr) {
    credit_pool_.give_back();
    return;
  }

  const char* target_name = "host";
  auto write_out = [&](uint64_t offset, BytesView data) {
    if (rt->delivery_sink.empty()) {
      // Plain host delivery.
      if (offset + data.size() <= rt->region.size()) {
        std::memcpy(rt->region.data() + offset, data.data(), data.size());
        ++stats_.host_writes;
      } else {
        ++stats_.protocol_anomalies;
      }
      target_name = "host";
      return;
    }
    svc::MemorySink* s = sink(rt->delivery_sink);
    if (s == nullptr) {
      ++stats_.protocol_anomalies;
      return;
    }
    if (rt->staged_delivery) {
      // Host staging buffer first, then an explicit copy to the sink.
      if (offset + data.size() <= rt->region.size()) {
        std::memcpy(rt->region.data() + offset, data.data(), data.size());
        ++stats_.host_writes;
        s->write(offset, {rt->region.data() + offset, data.size()});
        ++stats_.staging_copies;
      }
      target_name = "host+copy";
    } else {
      // Direct path: the host buffer is never touched.
      s->write(offset, data);
      ++stats_.device_writes;
      target_name = rt->delivery_sink.c_str();
    }
  };

  if (rt->rx_scatter.empty()) {
    write_out(cmd.offset, cmd.payload);
  } else {
    // Scatter layout: message bytes fill the configured ranges in order,
    // overflowing contiguously past the natural offset.
    uint64_t msg_pos = cmd.stream_offset;
    size_t consumed = 0;
    while (consumed < cmd.payload.size()) {
      bool placed = false;
      uint64_t pos = msg_pos;
      for (const auto& [dest, len] : rt->rx_scatter) {
        if (pos < len) {
          uint64_t room = len - pos;
          size_t take = std::min<uint64_t>(room, cmd.payload.size() - consumed);
          write_out(dest + pos, {cmd.payload.data() + consumed, take});
          consumed += take;
          msg_pos += take;
          placed = true;
          break;
        }
        pos -= len;
      }
      if (!placed) {
        size_t take = cmd.payload.size() - consumed;
        write_out(cmd.offset + consumed, {cmd.payload.data() + consumed, take});
        consumed += take;
        msg_pos += take;
      }
    }
  }

  credit_pool_.give_back();
  ++stats_.deliveries_consumed;
  stats_.delivered_bytes += cmd.payload.size();

  if (delivery_probe_) {
    DeliveryRecord rec;
    rec.qpn = cmd.qpn;
    rec.message_id = cmd.message_id;
    rec.offset = cmd.offset;
    rec.length = static_cast<uint32_t>(cmd.payload.size());
    rec.is_read_data = cmd.is_read_data;
    rec.malicious = cmd.malicious_packet;
    rec.target = target_name;
    delivery_probe_(rec);
  }

  if (cmd.message_done) {
    Completion c;
    c.request_id = cmd.request_id;
    c.qpn = cmd.qpn;
    c.kind = cmd.is_read_data ? CompletionKind::kRemoteRead : CompletionKind::kLocalWrite;
    c.status = CompletionStatus::kOk;
    c.length = cmd.message_length;
    c.malicious = cmd.message_malicious;
    complete(*rt, c);
    if (cmd.is_read_data) requests_.erase(cmd.request_id);
    if (cmd.message_malicious && rt->malicious_cb) {
      MaliciousEvent ev;
      ev.qpn = cmd.qpn;
      ev.offset = cmd.message_base;
      ev.length = cmd.message_length;
      ev.score = cmd.message_score;
      try {
        rt->malicious_cb(ev);
      } catch (...) {
        ++stats_.callback_exceptions;  // callbacks are isolated
      }
    }
  }
}

}  // namespace uroce
