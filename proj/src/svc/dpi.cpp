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

#include "uroce/svc/dpi.hpp"

#include "uroce/kernels/byteclass.hpp"

namespace uroce::svc {

bool RuleBasedClassifier::has_executable_magic(BytesView p) {
  if (p.size() >= 4) {
    if (p[0] == 0x7f && p[1] == 'E' && p[2] == 'L' && p[3] == 'F') return true;   // ELF
    if (p[0] == 0xcf && p[1] == 0xfa && p[2] == 0xed && p[3] == 0xfe) return true;  // Mach-O 64
    if (p[0] == 0xfe && p[1] == 0xed && p[2] == 0xfa && (p[3] == 0xce || p[3] == 0xcf))
      return true;  // Mach-O BE
  }
  if (p.size() >= 2 && p[0] == 'M' && p[1] == 'Z') return true;  // PE/DOS stub
  return false;
}

DpiVerdict RuleBasedClassifier::classify(BytesView payload) const {
  if (payload.empty()) return {false, 0.0};
  if (has_executable_magic(payload)) return {true, 1.0};
  auto counts = kernels::byteclass_count(payload.data(), payload.size());
  double fraction = static_cast<double>(counts.binary()) / static_cast<double>(counts.total);
  return {fraction >= threshold_, fraction};
}

DpiVerdict DpiService::inspect(uint32_t qpn, const wire::RocePacket& packet) {
  (void)qpn;
  ++inspections_;
  if (packet.payload.empty()) return {false, 0.0};
  try {
    BytesView body{packet.payload.data(), packet.payload_without_pad()};
    return classifier_->classify(body);
  } catch (...) {
    ++failures_;
    return {false, 0.0};
  }
}

}  // namespace uroce::svc
