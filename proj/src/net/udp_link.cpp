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

#include "uroce/net/udp_link.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace uroce::net {

namespace {

bool fill_sockaddr(const std::string& addr, uint16_t port, sockaddr_in* out) {
  std::memset(out, 0, sizeof(*out));
  out->sin_family = AF_INET;
  out->sin_port = htons(port);
  return inet_pton(AF_INET, addr.c_str(), &out->sin_addr) == 1;
}

}  // namespace

UdpLink::UdpLink(int fd, size_t mtu, uint16_t bound_port)
    : fd_(fd), mtu_(mtu), bound_port_(bound_port) {}

Result<std::unique_ptr<UdpLink>, std::string> UdpLink::open(const std::string& bind_addr,
                                                            uint16_t bind_port,
                                                            const std::string& peer_addr,
                                                            uint16_t peer_port, size_t mtu) {
  sockaddr_in local{}, peer{};
  if (!fill_sockaddr(bind_addr, bind_port, &local))
    return std::string("udp: bad bind address " + bind_addr);
  if (!fill_sockaddr(peer_addr, peer_port, &peer))
    return std::string("udp: bad peer address " + peer_addr);

  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) return std::string("udp: socket: ") + std::strerror(errno);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&local), sizeof(local)) != 0) {
    std::string err = std::string("udp: bind: ") + std::strerror(errno);
    ::close(fd);
    return err;
  }
  // connect() pins the peer so plain send/recv suffice and stray datagrams
  // from other sources are filtered by the kernel.
  if (::connect(fd, reinterpret_cast<sockaddr*>(&peer), sizeof(peer)) != 0) {
    std::string err = std::string("udp: connect: ") + std::strerror(errno);
    ::close(fd);
    return err;
  }
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);

  sockaddr_in bound{};
  socklen_t blen = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &blen);
  return std::unique_ptr<UdpLink>(new UdpLink(fd, mtu, ntohs(bound.sin_port)));
}

UdpLink::~UdpLink() { close(); }

void UdpLink::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

LinkSendError UdpLink::send(BytesView frame, MicroTime) {
  if (fd_ < 0) return LinkSendError::kClosed;
  if (frame.size() > mtu_ + kMaxHeaderOverhead) return LinkSendError::kOversized;
  ssize_t n = ::send(fd_, frame.data(), frame.size(), 0);
  (void)n;  // drops behave like link loss; retransmission covers them
  return LinkSendError::kOk;
}

std::optional<Bytes> UdpLink::recv(MicroTime) {
  if (fd_ < 0) return std::nullopt;
  uint8_t buf[65536];
  ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
  if (n <= 0) return std::nullopt;
  return Bytes(buf, buf + n);
}

}  // namespace uroce::net
