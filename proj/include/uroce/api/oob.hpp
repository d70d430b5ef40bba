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

#include <array>
#include <optional>
#include <string>

#include "uroce/common.hpp"

namespace uroce::api {

// Out-of-band connection setup: each side contributes one ASCII line over a
// TCP stream. Grep-able on the wire and trivially portable:
//
//   BALBOA1 qpn=<hex6> psn=<hex6> rkey=<hex8> vaddr=<hex16> size=<dec>
//           ip=<dotted> port=<dec> aes=<hex32|->\n
struct OobQpDescriptor {
  uint32_t qpn = 0;
  uint32_t initial_psn = 0;
  uint32_t rkey = 0;
  uint64_t region_vaddr = 0;
  uint64_t region_size = 0;
  uint32_t ip = 0;
  uint16_t udp_port = 0;
  std::optional<std::array<uint8_t, 16>> aes_key;
};

std::string oob_format(const OobQpDescriptor& d);
Result<OobQpDescriptor, std::string> oob_parse(const std::string& line);

/// Client side: connects to host:port (retrying until `timeout_ms`), sends
/// our line, reads the peer's.
Result<OobQpDescriptor, std::string> oob_exchange_client(const std::string& host, uint16_t port,
                                                         const OobQpDescriptor& mine,
                                                         int timeout_ms);

/// Server side: accepts exactly one connection on `port`, reads the peer's
/// line, answers with ours.
Result<OobQpDescriptor, std::string> oob_exchange_server(uint16_t port,
                                                         const OobQpDescriptor& mine,
                                                         int timeout_ms);

}  // namespace uroce::api
