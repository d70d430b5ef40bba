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

#include <optional>

#include "uroce/common.hpp"
#include "uroce/wire/opcode.hpp"

namespace uroce::wire {

constexpr uint16_t kRoceUdpPort = 4791;
constexpr uint32_t kPsnMask = 0xffffff;
constexpr uint32_t kQpnMask = 0xffffff;
constexpr size_t kIpv4HeaderBytes = 20;
constexpr size_t kUdpHeaderBytes = 8;
constexpr size_t kBthBytes = 12;
constexpr size_t kRethBytes = 16;
constexpr size_t kAethBytes = 4;
constexpr size_t kIcrcBytes = 4;
/// IP + UDP + BTH + ICRC: the minimum plausible packet.
constexpr size_t kMinPacketBytes = kIpv4HeaderBytes + kUdpHeaderBytes + kBthBytes + kIcrcBytes;

// AETH syndrome values (high three bits select ACK/NAK class).
constexpr uint8_t kAethAck = 0x00;
constexpr uint8_t kAethNakSequence = 0x60;  // NAK, PSN sequence error
constexpr uint8_t kAethNakOther = 0x62;     // NAK, remote access / operational error

inline bool aeth_is_nak(uint8_t syndrome) { return (syndrome & 0xe0) == 0x60; }

struct Ipv4Header {
  uint32_t src_addr = 0;
  uint32_t dst_addr = 0;
  uint8_t dscp_ecn = 0;
  uint8_t ttl = 64;
  uint16_t total_length = 0;     // recomputed on serialize
  uint16_t header_checksum = 0;  // recomputed on serialize
};

struct UdpHeader {
  uint16_t src_port = kRoceUdpPort;
  uint16_t dst_port = kRoceUdpPort;
  uint16_t length = 0;    // recomputed on serialize
  uint16_t checksum = 0;  // always emitted as 0 (checksum-free UDP), masked in ICRC
};

/// Base transport header, 12 bytes.
struct BthHeader {
  uint8_t opcode = 0;
  bool solicited_event = false;
  bool mig_req = false;
  uint8_t pad_count = 0;       // payload pad bytes, 0..3
  uint8_t header_version = 0;  // 4 bits
  uint16_t partition_key = 0xffff;
  uint8_t reserved8a = 0;
  uint32_t dest_qpn = 0;  // 24 bits
  bool ack_request = false;
  uint8_t reserved7 = 0;  // 7 bits
  uint32_t psn = 0;       // 24 bits
};

/// RDMA extended transport header, 16 bytes.
struct RethHeader {
  uint64_t virtual_address = 0;
  uint32_t rkey = 0;
  uint32_t dma_length = 0;
};

/// ACK extended transport header, 4 bytes.
struct AethHeader {
  uint8_t syndrome = kAethAck;
  uint32_t msn = 0;  // 24 bits
};

/// A fully decoded packet. `payload` retains pad bytes; `pad_count` in the
/// BTH records how many of its trailing bytes are padding.
struct RocePacket {
  Ipv4Header ip;
  UdpHeader udp;
  BthHeader bth;
  std::optional<RethHeader> reth;
  std::optional<AethHeader> aeth;
  Bytes payload;
  uint32_t icrc = 0;

  Opcode opcode() const { return static_cast<Opcode>(bth.opcode); }
  const OpcodeProperties& props() const { return *opcode_properties(bth.opcode); }
  size_t payload_without_pad() const { return payload.size() - bth.pad_count; }

  bool operator==(const RocePacket& other) const;
};

enum class ParseError : uint8_t {
  kTruncated,      // shorter than declared or structurally impossible lengths
  kNotRoce,        // not an IPv4/UDP datagram addressed to the RoCE port
  kUnknownOpcode,  // opcode outside the supported set
  kMalformed,      // header/alignment invariants violated
};

const char* parse_error_name(ParseError e);

/// Decodes a wire image starting at the IP header. The image must include
/// the trailing ICRC; its value is captured but not checked here.
Result<RocePacket, ParseError> parse_packet(BytesView raw);

/// Byte-exact wire image, IP header first. Recomputes IP/UDP lengths and the
/// IP header checksum; emits `p.icrc` verbatim (callers stamp it beforehand,
/// see the icrc module). Throws std::invalid_argument on invariant
/// violations (alignment, pad, or header/opcode mismatch).
Bytes serialize_packet(const RocePacket& p);

/// Total wire size for a packet with the given extension header and payload.
size_t wire_size(bool has_reth, bool has_aeth, size_t payload_with_pad);

/// Number of pad bytes needed to 4-align `logical_len`.
inline uint8_t pad_for(size_t logical_len) {
  return static_cast<uint8_t>((4 - (logical_len & 3)) & 3);
}

}  // namespace uroce::wire
