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

#include "uroce/engine/tx_path.hpp"

namespace uroce {

using wire::MsgPosition;
using wire::Opcode;
using wire::RocePacket;

size_t message_wire_bytes(const TxMessage& msg, size_t mtu) {
  if (msg.kind == TxMessage::Kind::kReadRequest) {
    return wire::wire_size(/*reth=*/true, /*aeth=*/false, 0);
  }
  size_t segs = segment_count(msg.length, mtu);
  size_t total = 0;
  for (size_t i = 0; i < segs; ++i) {
    size_t chunk = std::min<uint64_t>(mtu, msg.length - i * mtu);
    size_t padded = chunk + wire::pad_for(chunk);
    bool reth = msg.kind == TxMessage::Kind::kWrite && (i == 0);
    bool aeth = msg.kind == TxMessage::Kind::kReadResponse &&
                (i == 0 || i + 1 == segs);
    total += wire::wire_size(reth, aeth, padded);
  }
  return total;
}

static RocePacket base_packet(const TxMessage& msg, const QpContext& ctx, const TxEnv& env) {
  RocePacket p;
  p.ip.src_addr = env.local_ip;
  p.ip.dst_addr = ctx.connection.remote_ip;
  p.udp.src_port = udp_source_port(ctx.connection.local_qpn);
  p.udp.dst_port = ctx.connection.remote_udp_port;
  p.bth.dest_qpn = ctx.connection.remote_qpn;
  (void)msg;
  return p;
}

std::vector<RocePacket> tx_build(const TxMessage& msg, QpContext& ctx, BytesView payload,
                                 const TxEnv& env) {
  std::vector<RocePacket> out;

  if (msg.kind == TxMessage::Kind::kReadRequest) {
    RocePacket p = base_packet(msg, ctx, env);
    p.bth.opcode = static_cast<uint8_t>(Opcode::kReadRequest);
    p.bth.psn = ctx.psn.next_send_psn;
    p.reth = wire::RethHeader{msg.remote_vaddr, ctx.connection.remote_rkey, msg.length};
    ctx.advance_tx(1);
    out.push_back(std::move(p));
    return out;
  }

  const size_t segs = segment_count(msg.length, env.mtu);
  out.reserve(segs);
  ctx.msn_tx.first_psn_of_message = ctx.psn.next_send_psn;
  ctx.msn_tx.in_progress_vaddr = msg.remote_vaddr;
  ctx.msn_tx.bytes_remaining = msg.length;

  for (size_t i = 0; i < segs; ++i) {
    size_t chunk = std::min<uint64_t>(env.mtu, msg.length - i * env.mtu);
    RocePacket p = base_packet(msg, ctx, env);
    p.bth.psn = ctx.psn.next_send_psn;

    bool last = i + 1 == segs;
    if (msg.kind == TxMessage::Kind::kWrite) {
      p.bth.opcode = static_cast<uint8_t>(wire::write_opcode_for_segment(i, segs));
      if (i == 0) {
        p.reth = wire::RethHeader{msg.remote_vaddr, ctx.connection.remote_rkey, msg.length};
      }
      p.bth.ack_request = last;
    } else {  // read response
      p.bth.opcode = static_cast<uint8_t>(wire::read_response_opcode_for_segment(i, segs));
      if (i == 0 || last) {
        p.aeth = wire::AethHeader{wire::kAethAck, ctx.msn_rx.msn};
      }
    }

    uint8_t pad = wire::pad_for(chunk);
    p.bth.pad_count = pad;
    p.payload.resize(chunk + pad, 0);
    std::memcpy(p.payload.data(), payload.data() + i * env.mtu, chunk);

    ctx.advance_tx(1);
    ctx.msn_tx.in_progress_vaddr += chunk;
    ctx.msn_tx.bytes_remaining -= static_cast<uint32_t>(chunk);
    out.push_back(std::move(p));
  }
  ctx.msn_tx.msn = (ctx.msn_tx.msn + 1) & wire::kPsnMask;
  return out;
}

}  // namespace uroce
