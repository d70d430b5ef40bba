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

#include <string>

#include "uroce/net/pcap.hpp"

namespace uroce::net {

enum class TapDirection : uint8_t { kRx, kTx };

struct SnifferConfig {
  enum class Direction : uint8_t { kRx, kTx, kBoth } direction = Direction::kBoth;
  enum class Filter : uint8_t { kAll, kRoceOnly } filter = Filter::kRoceOnly;
  bool omit_payload = false;
  std::string output_path;
};

/// Passive capture tap on the engine's RX/TX datapath. Never mutates or
/// drops forwarded traffic; an I/O failure disables capture with a counted
/// diagnostic and the datapath carries on.
class Sniffer {
 public:
  Sniffer() = default;

  bool enable(const SnifferConfig& cfg);
  void disable();
  bool enabled() const { return writer_.is_open(); }

  void tap(BytesView wire_image, TapDirection dir, MicroTime now);

  uint64_t records() const { return writer_.records_written(); }
  uint64_t io_errors() const { return io_errors_; }

 private:
  SnifferConfig cfg_;
  PcapWriter writer_;
  uint64_t io_errors_ = 0;
};

/// Header span of a RoCE wire image (through BTH and any extension header),
/// used for payload-omitting captures. Falls back to the full image when the
/// packet does not parse as RoCE.
size_t roce_header_span(BytesView wire_image);

/// Cheap wire-level test: IPv4 + UDP + destination port 4791.
bool looks_like_roce(BytesView wire_image);

}  // namespace uroce::net
