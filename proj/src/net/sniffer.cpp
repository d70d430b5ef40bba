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

#include "uroce/net/sniffer.hpp"

#include "uroce/wire/packet.hpp"

namespace uroce::net {

bool looks_like_roce(BytesView img) {
  if (img.size() < wire::kMinPacketBytes) return false;
  if (img[0] != 0x45 || img[9] != 17) return false;
  return load_be16(img.data() + 22) == wire::kRoceUdpPort;
}

size_t roce_header_span(BytesView img) {
  if (!looks_like_roce(img)) return img.size();
  size_t span = wire::kIpv4HeaderBytes + wire::kUdpHeaderBytes + wire::kBthBytes;
  const auto* props = wire::opcode_properties(img[28]);
  if (props == nullptr) return std::min(img.size(), span);
  if (props->has_reth) span += wire::kRethBytes;
  if (props->has_aeth) span += wire::kAethBytes;
  return std::min(img.size(), span);
}

bool Sniffer::enable(const SnifferConfig& cfg) {
  cfg_ = cfg;
  if (!writer_.open(cfg.output_path)) {
    ++io_errors_;
    return false;
  }
  return true;
}

void Sniffer::disable() { writer_.close(); }

void Sniffer::tap(BytesView img, TapDirection dir, MicroTime now) {
  if (!writer_.is_open()) return;
  if (cfg_.direction == SnifferConfig::Direction::kRx && dir != TapDirection::kRx) return;
  if (cfg_.direction == SnifferConfig::Direction::kTx && dir != TapDirection::kTx) return;
  if (cfg_.filter == SnifferConfig::Filter::kRoceOnly && !looks_like_roce(img)) return;

  BytesView captured = img;
  if (cfg_.omit_payload) captured = img.first(roce_header_span(img));
  if (!writer_.append(now, captured, static_cast<uint32_t>(img.size()))) {
    ++io_errors_;
    writer_.close();  // capture off, traffic unaffected
  }
}

}  // namespace uroce::net
