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

#include <cstddef>
#include <cstdint>

namespace uroce::wire {

// Reliable-connection opcodes carried in the transport header. Only the
// one-sided subset plus acknowledgements is supported; anything else is
// rejected at parse time.
enum class Opcode : uint8_t {
  kWriteFirst = 0x06,
  kWriteMiddle = 0x07,
  kWriteLast = 0x08,
  kWriteOnly = 0x0a,
  kReadRequest = 0x0c,
  kReadRespFirst = 0x0d,
  kReadRespMiddle = 0x0e,
  kReadRespLast = 0x0f,
  kReadRespOnly = 0x10,
  kAcknowledge = 0x11,
};

enum class MsgPosition : uint8_t { kFirst, kMiddle, kLast, kOnly };

struct OpcodeProperties {
  Opcode opcode;
  bool has_reth;
  bool has_aeth;
  bool has_payload;
  MsgPosition position;
  const char* name;
};

/// nullptr for opcodes outside the supported set.
const OpcodeProperties* opcode_properties(uint8_t opcode);

inline bool is_write(Opcode op) {
  return op == Opcode::kWriteFirst || op == Opcode::kWriteMiddle || op == Opcode::kWriteLast ||
         op == Opcode::kWriteOnly;
}
inline bool is_read_response(Opcode op) {
  return op == Opcode::kReadRespFirst || op == Opcode::kReadRespMiddle ||
         op == Opcode::kReadRespLast || op == Opcode::kReadRespOnly;
}

/// Opcode for a segment of a multi-packet message (index within [0, count)).
Opcode write_opcode_for_segment(size_t index, size_t count);
Opcode read_response_opcode_for_segment(size_t index, size_t count);

}  // namespace uroce::wire
