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

#include "uroce/wire/opcode.hpp"

namespace uroce::wire {

namespace {

constexpr OpcodeProperties kTable[] = {
    {Opcode::kWriteFirst, true, false, true, MsgPosition::kFirst, "WRITE_FIRST"},
    {Opcode::kWriteMiddle, false, false, true, MsgPosition::kMiddle, "WRITE_MIDDLE"},
    {Opcode::kWriteLast, false, false, true, MsgPosition::kLast, "WRITE_LAST"},
    {Opcode::kWriteOnly, true, false, true, MsgPosition::kOnly, "WRITE_ONLY"},
    {Opcode::kReadRequest, true, false, false, MsgPosition::kOnly, "READ_REQUEST"},
    {Opcode::kReadRespFirst, false, true, true, MsgPosition::kFirst, "READ_RESP_FIRST"},
    {Opcode::kReadRespMiddle, false, false, true, MsgPosition::kMiddle, "READ_RESP_MIDDLE"},
    {Opcode::kReadRespLast, false, true, true, MsgPosition::kLast, "READ_RESP_LAST"},
    {Opcode::kReadRespOnly, false, true, true, MsgPosition::kOnly, "READ_RESP_ONLY"},
    {Opcode::kAcknowledge, false, true, false, MsgPosition::kOnly, "ACKNOWLEDGE"},
};

}  // namespace

const OpcodeProperties* opcode_properties(uint8_t opcode) {
  for (const auto& e : kTable) {
    if (static_cast<uint8_t>(e.opcode) == opcode) return &e;
  }
  return nullptr;
}

Opcode write_opcode_for_segment(size_t index, size_t count) {
  if (count == 1) return Opcode::kWriteOnly;
  if (index == 0) return Opcode::kWriteFirst;
  if (index + 1 == count) return Opcode::kWriteLast;
  return Opcode::kWriteMiddle;
}

Opcode read_response_opcode_for_segment(size_t index, size_t count) {
  if (count == 1) return Opcode::kReadRespOnly;
  if (index == 0) return Opcode::kReadRespFirst;
  if (index + 1 == count) return Opcode::kReadRespLast;
  return Opcode::kReadRespMiddle;
}

}  // namespace uroce::wire
