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

#include <optional>

#include "uroce/common.hpp"

namespace uroce::net {

/// Worst-case header bytes in front of the payload (IP+UDP+BTH+RETH+ICRC).
constexpr size_t kMaxHeaderOverhead = 60;

enum class LinkSendError : uint8_t { kOk, kOversized, kClosed };

/// A point-to-point frame carrier for IP-level wire images. Implementations:
/// the deterministic in-process simulator and the UDP datagram overlay.
class Link {
 public:
  virtual ~Link() = default;

  virtual LinkSendError send(BytesView frame, MicroTime now) = 0;
  virtual std::optional<Bytes> recv(MicroTime now) = 0;
  virtual size_t mtu() const = 0;
};

}  // namespace uroce::net
