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

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "uroce/wire/icrc.hpp"
#include "uroce/wire/packet.hpp"

using namespace uroce;
using namespace uroce::wire;

namespace {

std::mt19937_64 g_rng(0xBEEF);

RocePacket random_packet(std::mt19937_64& rng, size_t max_payload = 4096) {
  static const Opcode kOps[] = {Opcode::kWriteFirst,     Opcode::kWriteMiddle,
                                Opcode::kWriteLast,      Opcode::kWriteOnly,
                                Opcode::kReadRequest,    Opcode::kReadRespFirst,
                                Opcode::kReadRespMiddle, Opcode::kReadRespLast,
                                Opcode::kReadRespOnly,   Opcode::kAcknowledge};
  RocePacket p;
  p.bth.opcode = static_cast<uint8_t>(kOps[rng() % 10]);
  const auto& props = p.props();
  p.ip.src_addr = static_cast<uint32_t>(rng());
  p.ip.dst_addr = static_cast<uint32_t>(rng());
  p.ip.ttl = static_cast<uint8_t>(1 + rng() % 255);
  p.ip.dscp_ecn = static_cast<uint8_t>(rng());
  p.udp.src_port = static_cast<uint16_t>(rng());
  p.bth.solicited_event = rng() & 1;
  p.bth.mig_req = rng() & 1;
  p.bth.partition_key = static_cast<uint16_t>(rng());
  p.bth.reserved8a = static_cast<uint8_t>(rng());
  p.bth.dest_qpn = static_cast<uint32_t>(rng()) & kQpnMask;
  p.bth.ack_request = rng() & 1;
  p.bth.reserved7 = static_cast<uint8_t>(rng()) & 0x7f;
  p.bth.psn = static_cast<uint32_t>(rng()) & kPsnMask;
  if (props.has_reth) {
    RethHeader reth;
    reth.virtual_address = rng();
    reth.rkey = static_cast<uint32_t>(rng());
    reth.dma_length = 1 + static_cast<uint32_t>(rng() % 100000);
    p.reth = reth;
  }
  if (props.has_aeth) {
    AethHeader aeth;
    aeth.syndrome = (rng() % 3 == 0) ? kAethNakSequence : kAethAck;
    aeth.msn = static_cast<uint32_t>(rng()) & kPsnMask;
    p.aeth = aeth;
  }
  if (props.has_payload) {
    size_t logical = rng() % (max_payload + 1);
    p.bth.pad_count = pad_for(logical);
    p.payload.resize(logical + p.bth.pad_count);
    for (auto& b : p.payload) b = static_cast<uint8_t>(rng());
  }
  p.icrc = static_cast<uint32_t>(rng());
  return p;
}

}  // namespace

TEST_CASE("opcode properties match the RC layout table") {
  auto* wo = opcode_properties(0x0a);
  REQUIRE(wo != nullptr);
  CHECK(wo->has_reth);
  CHECK(!wo->has_aeth);
  CHECK(wo->has_payload);
  CHECK(wo->position == MsgPosition::kOnly);

  auto* ack = opcode_properties(0x11);
  REQUIRE(ack != nullptr);
  CHECK(!ack->has_reth);
  CHECK(ack->has_aeth);
  CHECK(!ack->has_payload);

  auto* rr = opcode_properties(0x0c);
  REQUIRE(rr != nullptr);
  CHECK(rr->has_reth);
  CHECK(!rr->has_aeth);
  CHECK(!rr->has_payload);

  CHECK(opcode_properties(0x00) == nullptr);  // SEND FIRST: unsupported
  CHECK(opcode_properties(0x13) == nullptr);  // CmpSwap: unsupported
}

TEST_CASE("parse/serialize round-trip over random packets") {
  for (int i = 0; i < 10000; ++i) {
    RocePacket p = random_packet(g_rng, 512);
    Bytes image = serialize_packet(p);
    // BTH-through-payload region is 4-byte aligned.
    CHECK(((image.size() - kIpv4HeaderBytes - kUdpHeaderBytes - kIcrcBytes) & 3) == 0);
    auto res = parse_packet(image);
    REQUIRE(res.ok());
    REQUIRE(res.value() == p);
    Bytes image2 = serialize_packet(res.value());
    REQUIRE(image == image2);
  }
}

TEST_CASE("write-only with 5-byte logical payload carries pad 3") {
  RocePacket p;
  p.bth.opcode = static_cast<uint8_t>(Opcode::kWriteOnly);
  p.reth = RethHeader{0x1000, 0xabcd, 5};
  p.bth.pad_count = pad_for(5);
  CHECK(p.bth.pad_count == 3);
  p.payload.assign(8, 0x55);
  Bytes image = serialize_packet(p);
  auto back = parse_packet(image);
  REQUIRE(back.ok());
  CHECK(back.value().payload.size() == 8);
  CHECK(back.value().bth.pad_count == 3);
  CHECK(back.value().payload_without_pad() == 5);
}

TEST_CASE("serialized ACK is exactly 48 bytes") {
  RocePacket p;
  p.bth.opcode = static_cast<uint8_t>(Opcode::kAcknowledge);
  p.aeth = AethHeader{kAethAck, 7};
  Bytes image = serialize_packet(p);
  CHECK(image.size() == 48);
  CHECK(image.size() == 20 + 8 + 12 + 4 + 4);
}

TEST_CASE("crafted WRITE FIRST parses with expected fields") {
  RocePacket p;
  p.bth.opcode = static_cast<uint8_t>(Opcode::kWriteFirst);
  p.bth.dest_qpn = 0x000010;
  p.bth.psn = 0x000000;
  p.reth = RethHeader{0xdeadbeef000ull, 0x11223344, 8192};
  p.payload.assign(4096, 0xa7);
  auto back = parse_packet(serialize_with_icrc(p));
  REQUIRE(back.ok());
  REQUIRE(back.value().reth.has_value());
  CHECK(back.value().reth->dma_length == 8192);
  CHECK(back.value().bth.dest_qpn == 0x10u);
  CHECK(back.value().reth->virtual_address == 0xdeadbeef000ull);
}

TEST_CASE("parse rejections") {
  RocePacket p;
  p.bth.opcode = static_cast<uint8_t>(Opcode::kAcknowledge);
  p.aeth = AethHeader{};
  Bytes image = serialize_packet(p);

  SUBCASE("short input") {
    Bytes cut(image.begin(), image.begin() + 20);
    auto r = parse_packet(cut);
    REQUIRE(!r.ok());
    CHECK(r.error() == ParseError::kTruncated);
  }
  SUBCASE("wrong UDP port") {
    Bytes bad = image;
    store_be16(bad.data() + 22, 4792);
    auto r = parse_packet(bad);
    REQUIRE(!r.ok());
    CHECK(r.error() == ParseError::kNotRoce);
  }
  SUBCASE("unsupported opcode") {
    Bytes bad = image;
    bad[28] = 0x04;  // SEND ONLY
    auto r = parse_packet(bad);
    REQUIRE(!r.ok());
    CHECK(r.error() == ParseError::kUnknownOpcode);
  }
  SUBCASE("declared length mismatch") {
    Bytes bad = image;
    store_be16(bad.data() + 2, static_cast<uint16_t>(bad.size() + 4));
    auto r = parse_packet(bad);
    REQUIRE(!r.ok());
    CHECK(r.error() == ParseError::kTruncated);
  }
}

TEST_CASE("icrc matches the bit-serial oracle on random packets") {
  for (int i = 0; i < 10000; ++i) {
    RocePacket p = random_packet(g_rng, i < 100 ? 4096 : 512);
    Bytes image = serialize_packet(p);
    BytesView body{image.data(), image.size() - kIcrcBytes};
    auto fast = icrc_compute(body);
    REQUIRE(fast.has_value());
    uint32_t slow = testing::icrc_bitserial(Bytes(body.begin(), body.end()));
    REQUIRE(*fast == slow);
  }
}

TEST_CASE("icrc is invariant under masked-field mutation") {
  RocePacket p = random_packet(g_rng);
  Bytes image = serialize_with_icrc(p);
  REQUIRE(icrc_verify_image(image));

  auto mutate_and_check = [&](size_t offset) {
    Bytes m = image;
    m[offset] ^= 0x5a;
    CHECK(icrc_verify_image(m));
  };
  mutate_and_check(1);   // DSCP/ECN
  mutate_and_check(8);   // TTL
  mutate_and_check(10);  // IP checksum hi
  mutate_and_check(11);  // IP checksum lo
  mutate_and_check(26);  // UDP checksum hi
  mutate_and_check(27);  // UDP checksum lo
  mutate_and_check(32);  // BTH reserved byte
}

TEST_CASE("icrc detects any single-bit flip in unmasked regions") {
  RocePacket p;
  p.bth.opcode = static_cast<uint8_t>(Opcode::kWriteOnly);
  p.reth = RethHeader{0x8000, 0x1, 64};
  p.payload.assign(64, 0);
  for (size_t i = 0; i < 64; ++i) p.payload[i] = static_cast<uint8_t>(i * 37);
  Bytes image = serialize_with_icrc(p);
  REQUIRE(icrc_verify_image(image));

  const size_t payload_off = 20 + 8 + 12 + 16;
  for (size_t byte = payload_off; byte < payload_off + 64; ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      Bytes m = image;
      m[byte] ^= static_cast<uint8_t>(1u << bit);
      REQUIRE(!icrc_verify_image(m));
    }
  }
}

TEST_CASE("icrc streaming accumulation is associative") {
  std::mt19937_64 rng(4242);
  Bytes data(1024);
  for (auto& b : data) b = static_cast<uint8_t>(rng());

  IcrcAccumulator whole;
  whole.update(data);

  IcrcAccumulator split;
  split.update({data.data(), 300});
  split.update({data.data() + 300, 724});
  CHECK(split.finalize() == whole.finalize());
  CHECK(split.bytes_consumed() == whole.bytes_consumed());
}
