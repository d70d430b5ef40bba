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

#include <memory>
#include <string>

#include "uroce/net/link.hpp"

namespace uroce::net {

// Datagram overlay: each serialized packet (including its inner IP/UDP
// headers and ICRC) rides verbatim as the payload of one real UDP datagram,
// so byte-exact images cross real networks without raw-socket privileges.
class UdpLink : public Link {
 public:
  static Result<std::unique_ptr<UdpLink>, std::string> open(const std::string& bind_addr,
                                                            uint16_t bind_port,
                                                            const std::string& peer_addr,
                                                            uint16_t peer_port, size_t mtu);
  ~UdpLink() override;
  UdpLink(const UdpLink&) = delete;
  UdpLink& operator=(const UdpLink&) = delete;

  LinkSendError send(BytesView frame, MicroTime now) override;
  std::optional<Bytes> recv(MicroTime now) override;
  size_t mtu() const override { return mtu_; }

  uint16_t bound_port() const { return bound_port_; }
  void close();

 private:
  UdpLink(int fd, size_t mtu, uint16_t bound_port);

  int fd_ = -1;
  size_t mtu_;
  uint16_t bound_port_;
};

}  // namespace uroce::net
