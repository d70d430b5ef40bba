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

#include <vector>

#include "uroce/qp/table.hpp"
#include "uroce/rel/stream_mux.hpp"
#include "uroce/wire/packet.hpp"

namespace uroce {

struct TxEnv {
  uint32_t local_ip = 0;
  size_t mtu = 4096;
};

/// Packets a data-bearing message occupies at a given MTU (>= 1 per the
/// dma_length >= 1 contract). A READ REQUEST itself is always one packet.
inline size_t segment_count(uint64_t length, size_t mtu) {
  return length == 0 ? 0 : static_cast<size_t>((length + mtu - 1) / mtu);
}

/// Exact wire bytes the message's packets will occupy (for retransmission
/// capacity admission).
size_t message_wire_bytes(const TxMessage& msg, size_t mtu);

/// Flow-control units the message consumes (packets put on the wire).
inline uint32_t message_packets(const TxMessage& msg, size_t mtu) {
  if (msg.kind == TxMessage::Kind::kReadRequest) return 1;
  return static_cast<uint32_t>(segment_count(msg.length, mtu));
}

/// Deterministic source port: flow entropy from the local QPN.
inline uint16_t udp_source_port(uint32_t local_qpn) {
  return static_cast<uint16_t>(wire::kRoceUdpPort ^ (local_qpn & 0xffff));
}

/// Turns one message into header-complete packets (ICRC not yet stamped):
/// consecutive PSNs from ctx.next_send_psn, RETH on FIRST/ONLY of writes and
/// on read requests, AETH on FIRST/LAST/ONLY read responses, pad on the
/// final segment. Advances ctx send-PSN and TX message cursor.
std::vector<wire::RocePacket> tx_build(const TxMessage& msg, QpContext& ctx, BytesView payload,
                                       const TxEnv& env);

}  // namespace uroce
