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

#include "uroce/common.hpp"
#include "uroce/wire/packet.hpp"

namespace uroce::wire {

// Invariant CRC over the packet, CRC-32 (0x04C11DB7, all-ones init and
// final XOR, reflected I/O). The covered pseudo-packet is eight 0xFF
// prefix bytes followed by the wire image with the in-flight-variant
// fields forced to ones: IP DSCP/ECN, IP TTL, IP header checksum, UDP
// checksum, and the reserved byte of the transport header.

/// Raw CRC register value after the 0xFF prefix, before any packet bytes.
constexpr uint32_t kIcrcSeedState = 0xdebb20e3u;

/// Streaming accumulator over an already-masked pseudo-packet. Chunk
/// boundaries never change the result; feeding the same bytes in any
/// split yields the same final value.
class IcrcAccumulator {
 public:
  void update(BytesView chunk);
  uint32_t finalize() const { return state_ ^ 0xffffffffu; }
  size_t bytes_consumed() const { return consumed_; }

 private:
  uint32_t state_ = kIcrcSeedState;
  size_t consumed_ = 0;
};

/// Applies the five field masks in place. `image` must start at the IP header
/// and hold at least the fixed header stack.
void icrc_mask_fields(uint8_t* image, size_t len);

/// ICRC of a serialized packet image WITHOUT its trailing 4 ICRC bytes.
/// Returns nullopt when the image is too short to hold the header stack.
std::optional<uint32_t> icrc_compute(BytesView image_without_icrc);

/// Checks the trailing little-endian ICRC of a complete wire image.
bool icrc_verify_image(BytesView full_image);

/// Recomputes and compares the ICRC carried by a parsed packet.
bool icrc_verify(const RocePacket& p);

/// Serializes with the ICRC field computed and stamped.
Bytes serialize_with_icrc(RocePacket p);

}  // namespace uroce::wire
