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

#include "uroce/wire/packet.hpp"

#include <stdexcept>

namespace uroce::wire {

namespace {

uint16_t ipv4_checksum(const uint8_t* hdr) {
  uint32_t sum = 0;
  for (int i = 0; i < 20; i += 2) {
    if (i == 10) continue;  // checksum field itself
    sum += load_be16(hdr + i);
  }
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<uint16_t>(~sum);
}

}  // namespace

bool RocePacket::operator==(const RocePacket& other) const {
  auto ip_eq = [](const Ipv4Header& a, const Ipv4Header& b) {
    return a.src_addr == b.src_addr && a.dst_addr == b.dst_addr && a.dscp_ecn == b.dscp_ecn &&
           a.ttl == b.ttl;
  };
  auto udp_eq = [](const UdpHeader& a, const UdpHeader& b) {
    return a.src_port == b.src_port && a.dst_port == b.dst_port;
  };
  auto bth_eq = [](const BthHeader& a, const BthHeader& b) {
    return a.opcode == b.opcode && a.solicited_event == b.solicited_event &&
           a.mig_req == b.mig_req && a.pad_count == b.pad_count &&
           a.header_version == b.header_version && a.partition_key == b.partition_key &&
           a.reserved8a == b.reserved8a && a.dest_qpn == b.dest_qpn &&
           a.ack_request == b.ack_request && a.reserved7 == b.reserved7 && a.psn == b.psn;
  };
  auto reth_eq = [](const std::optional<RethHeader>& a, const std::optional<RethHeader>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->virtual_address == b->virtual_address && a->rkey == b->rkey &&
           a->dma_length == b->dma_length;
  };
  auto aeth_eq = [](const std::optional<AethHeader>& a, const std::optional<AethHeader>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->syndrome == b->syndrome && a->msn == b->msn;
  };
  return ip_eq(ip, other.ip) && udp_eq(udp, other.udp) && bth_eq(bth, other.bth) &&
         reth_eq(reth, other.reth) && aeth_eq(aeth, other.aeth) && payload == other.payload &&
         icrc == other.icrc;
}

const char* parse_error_name(ParseError e) {
  switch (e) {
    case ParseError::kTruncated:
      return "truncated";
    case ParseError::kNotRoce:
      return "not-roce";
    case ParseError::kUnknownOpcode:
      return "unknown-opcode";
    case ParseError::kMalformed:
      return "malformed";
  }
  return "?";
}

size_t wire_size(bool has_reth, bool has_aeth, size_t payload_with_pad) {
  size_t n = kIpv4HeaderBytes + kUdpHeaderBytes + kBthBytes + payload_with_pad + kIcrcBytes;
  if (has_reth) n += kRethBytes;
  if (has_aeth) n += kAethBytes;
  return n;
}

Result<RocePacket, ParseError> parse_packet(BytesView raw) {
  if (raw.size() < kMinPacketBytes) return ParseError::kTruncated;
  const uint8_t* p = raw.data();

  // IPv4, fixed 20-byte header, UDP only.
  if (p[0] != 0x45) return ParseError::kNotRoce;
  if (p[9] != 17) return ParseError::kNotRoce;
  RocePacket pkt;
  pkt.ip.dscp_ecn = p[1];
  uint16_t ip_total = load_be16(p + 2);
  pkt.ip.ttl = p[8];
  pkt.ip.header_checksum = load_be16(p + 10);
  pkt.ip.src_addr = load_be32(p + 12);
  pkt.ip.dst_addr = load_be32(p + 16);
  if (ip_total != raw.size()) return ParseError::kTruncated;

  const uint8_t* u = p + kIpv4HeaderBytes;
  pkt.udp.src_port = load_be16(u);
  pkt.udp.dst_port = load_be16(u + 2);
  pkt.udp.length = load_be16(u + 4);
  pkt.udp.checksum = load_be16(u + 6);
  if (pkt.udp.dst_port != kRoceUdpPort) return ParseError::kNotRoce;
  if (pkt.udp.length != raw.size() - kIpv4HeaderBytes) return ParseError::kTruncated;

  const uint8_t* b = u + kUdpHeaderBytes;
  pkt.bth.opcode = b[0];
  const OpcodeProperties* props = opcode_properties(pkt.bth.opcode);
  if (props == nullptr) return ParseError::kUnknownOpcode;
  pkt.bth.solicited_event = (b[1] & 0x80) != 0;
  pkt.bth.mig_req = (b[1] & 0x40) != 0;
  pkt.bth.pad_count = (b[1] >> 4) & 0x3;
  pkt.bth.header_version = b[1] & 0x0f;
  pkt.bth.partition_key = load_be16(b + 2);
  pkt.bth.reserved8a = b[4];
  pkt.bth.dest_qpn = load_be24(b + 5);
  pkt.bth.ack_request = (b[8] & 0x80) != 0;
  pkt.bth.reserved7 = b[8] & 0x7f;
  pkt.bth.psn = load_be24(b + 9);

  size_t off = kIpv4HeaderBytes + kUdpHeaderBytes + kBthBytes;
  if (props->has_reth) {
    if (raw.size() < off + kRethBytes + kIcrcBytes) return ParseError::kTruncated;
    RethHeader reth;
    reth.virtual_address = load_be64(p + off);
    reth.rkey = load_be32(p + off + 8);
    reth.dma_length = load_be32(p + off + 12);
    pkt.reth = reth;
    off += kRethBytes;
  }
  if (props->has_aeth) {
    if (raw.size() < off + kAethBytes + kIcrcBytes) return ParseError::kTruncated;
    AethHeader aeth;
    aeth.syndrome = p[off];
    aeth.msn = load_be24(p + off + 1);
    pkt.aeth = aeth;
    off += kAethBytes;
  }

  size_t payload_len = raw.size() - off - kIcrcBytes;
  if (!props->has_payload && payload_len != 0) return ParseError::kMalformed;
  if ((payload_len & 3) != 0) return ParseError::kMalformed;
  if (pkt.bth.pad_count > payload_len) return ParseError::kMalformed;
  if (!props->has_payload && pkt.bth.pad_count != 0) return ParseError::kMalformed;
  pkt.payload.assign(p + off, p + off + payload_len);
  pkt.icrc = load_le32(p + raw.size() - kIcrcBytes);
  return pkt;
}

Bytes serialize_packet(const RocePacket& p) {
  const OpcodeProperties* props = opcode_properties(p.bth.opcode);
  if (props == nullptr) throw std::invalid_argument("serialize: unsupported opcode");
  if (props->has_reth != p.reth.has_value() || props->has_aeth != p.aeth.has_value())
    throw std::invalid_argument("serialize: extension header does not match opcode");
  if (!props->has_payload && !p.payload.empty())
    throw std::invalid_argument("serialize: payload on payload-free opcode");
  if ((p.payload.size() & 3) != 0)
    throw std::invalid_argument("serialize: payload+pad not 4-byte aligned");
  if (p.bth.pad_count > 3 || p.bth.pad_count > p.payload.size())
    throw std::invalid_argument("serialize: bad pad count");
  if (p.bth.psn > kPsnMask || p.bth.dest_qpn > kQpnMask)
    throw std::invalid_argument("serialize: psn/qpn exceed 24 bits");
  if (p.reth && p.reth->dma_length == 0)
    throw std::invalid_argument("serialize: zero dma_length");

  Bytes out(wire_size(props->has_reth, props->has_aeth, p.payload.size()));
  uint8_t* o = out.data();

  // IPv4
  o[0] = 0x45;
  o[1] = p.ip.dscp_ecn;
  store_be16(o + 2, static_cast<uint16_t>(out.size()));
  store_be16(o + 4, 0);       // identification
  store_be16(o + 6, 0x4000);  // DF, no fragmentation
  o[8] = p.ip.ttl;
  o[9] = 17;
  store_be16(o + 10, 0);
  store_be32(o + 12, p.ip.src_addr);
  store_be32(o + 16, p.ip.dst_addr);
  store_be16(o + 10, ipv4_checksum(o));

  // UDP (checksum-free; the ICRC covers the payload end to end)
  uint8_t* u = o + kIpv4HeaderBytes;
  store_be16(u, p.udp.src_port);
  store_be16(u + 2, p.udp.dst_port);
  store_be16(u + 4, static_cast<uint16_t>(out.size() - kIpv4HeaderBytes));
  store_be16(u + 6, 0);

  // BTH
  uint8_t* b = u + kUdpHeaderBytes;
  b[0] = p.bth.opcode;
  b[1] = static_cast<uint8_t>((p.bth.solicited_event ? 0x80 : 0) | (p.bth.mig_req ? 0x40 : 0) |
                              ((p.bth.pad_count & 0x3) << 4) | (p.bth.header_version & 0x0f));
  store_be16(b + 2, p.bth.partition_key);
  b[4] = p.bth.reserved8a;
  store_be24(b + 5, p.bth.dest_qpn);
  b[8] = static_cast<uint8_t>((p.bth.ack_request ? 0x80 : 0) | (p.bth.reserved7 & 0x7f));
  store_be24(b + 9, p.bth.psn);

  size_t off = kIpv4HeaderBytes + kUdpHeaderBytes + kBthBytes;
  if (p.reth) {
    store_be64(o + off, p.reth->virtual_address);
    store_be32(o + off + 8, p.reth->rkey);
    store_be32(o + off + 12, p.reth->dma_length);
    off += kRethBytes;
  }
  if (p.aeth) {
    o[off] = p.aeth->syndrome;
    store_be24(o + off + 1, p.aeth->msn);
    off += kAethBytes;
  }
  if (!p.payload.empty()) {
    std::memcpy(o + off, p.payload.data(), p.payload.size());
    off += p.payload.size();
  }
  store_le32(o + off, p.icrc);
  return out;
}

}  // namespace uroce::wire
