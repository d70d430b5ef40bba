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

// Independent reference implementations used only by tests. These stay
// deliberately naive: each one checks a production path by a different
// route (bit-serial arithmetic, exhaustive window scans, ceil-division
// segmentation, per-record scalar math).

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "uroce/common.hpp"

namespace uroce::testing {

/// Bit-serial reflected CRC-32 register update (one bit at a time).
inline uint32_t crc32_bitserial_update(uint32_t state, const uint8_t* data, size_t len) {
  for (size_t i = 0; i < len; ++i) {
    state ^= data[i];
    for (int b = 0; b < 8; ++b) {
      state = (state >> 1) ^ ((state & 1u) ? 0xEDB88320u : 0u);
    }
  }
  return state;
}

/// Full bit-serial ICRC over an unmasked image (applies the mask itself,
/// without touching the production masking helper's table-driven path).
inline uint32_t icrc_bitserial(const Bytes& image_without_icrc) {
  Bytes pseudo;
  pseudo.reserve(8 + image_without_icrc.size());
  pseudo.insert(pseudo.end(), 8, 0xff);
  pseudo.insert(pseudo.end(), image_without_icrc.begin(), image_without_icrc.end());
  uint8_t* img = pseudo.data() + 8;
  img[1] = 0xff;                   // IP DSCP/ECN
  img[8] = 0xff;                   // IP TTL
  img[10] = img[11] = 0xff;        // IP header checksum
  img[26] = img[27] = 0xff;        // UDP checksum
  img[32] = 0xff;                  // BTH reserved byte
  uint32_t state = crc32_bitserial_update(0xffffffffu, pseudo.data(), pseudo.size());
  return state ^ 0xffffffffu;
}

enum class WindowClass { kInOrder, kDuplicate, kSequenceError };

/// Brute-force 24-bit modular window oracle: `incoming` is a duplicate iff
/// it equals expected - k (mod 2^24) for some k in [1, 2^23].
std::vector<WindowClass> psn_window_oracle_table(uint32_t expected);

/// Segment count by plain ceil division.
inline size_t segments_oracle(uint64_t length, size_t mtu) {
  return length == 0 ? 0 : static_cast<size_t>((length + mtu - 1) / mtu);
}

/// Offline scalar record transform: ln(1+max(x,0)) on dense floats,
/// v mod N on sparse words. Layout: `dense` f32 then `sparse` u32,
/// little-endian. Written independently of the kernels.
Bytes dlrm_oracle(const Bytes& stream, uint32_t dense, uint32_t sparse,
                  const std::vector<uint32_t>& moduli, uint32_t default_modulus);

}  // namespace uroce::testing
