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

#include "oracles.hpp"

#include <cstring>

namespace uroce::testing {

std::vector<WindowClass> psn_window_oracle_table(uint32_t expected) {
  constexpr uint32_t kSpace = 1u << 24;
  constexpr uint32_t kHalf = 1u << 23;
  std::vector<WindowClass> table(kSpace, WindowClass::kSequenceError);
  for (uint32_t k = 1; k <= kHalf; ++k) {
    table[(expected + kSpace - k) % kSpace] = WindowClass::kDuplicate;
  }
  table[expected] = WindowClass::kInOrder;
  return table;
}

Bytes dlrm_oracle(const Bytes& stream, uint32_t dense, uint32_t sparse,
                  const std::vector<uint32_t>& moduli, uint32_t default_modulus) {
  Bytes out = stream;
  const size_t rec_bytes = 4ull * (dense + sparse);
  for (size_t base = 0; base + rec_bytes <= out.size(); base += rec_bytes) {
    for (uint32_t d = 0; d < dense; ++d) {
      uint8_t* p = out.data() + base + 4ull * d;
      uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                      (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
      float x;
      std::memcpy(&x, &bits, 4);
      x = x > 0.0f ? x : 0.0f;
      x = std::log1pf(x);
      std::memcpy(&bits, &x, 4);
      p[0] = static_cast<uint8_t>(bits);
      p[1] = static_cast<uint8_t>(bits >> 8);
      p[2] = static_cast<uint8_t>(bits >> 16);
      p[3] = static_cast<uint8_t>(bits >> 24);
    }
    for (uint32_t s = 0; s < sparse; ++s) {
      uint8_t* p = out.data() + base + 4ull * (dense + s);
      uint32_t v = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                   (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
      v %= s < moduli.size() ? moduli[s] : default_modulus;
      p[0] = static_cast<uint8_t>(v);
      p[1] = static_cast<uint8_t>(v >> 8);
      p[2] = static_cast<uint8_t>(v >> 16);
      p[3] = static_cast<uint8_t>(v >> 24);
    }
  }
  return out;
}

}  // namespace uroce::testing
