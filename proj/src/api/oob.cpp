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

#include "uroce/api/oob.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <thread>

namespace uroce::api {

namespace {
constexpr const char* kMagic = "BALBOA1";
}

std::string oob_format(const OobQpDescriptor& d) {
  char buf[256];
  std::string aes = "-";
  if (d.aes_key.has_value()) aes = to_hex({d.aes_key->data(), d.aes_key->size()});
  std::snprintf(buf, sizeof(buf),
                "%s qpn=%06x psn=%06x rkey=%08x vaddr=%016llx size=%llu ip=%s port=%u aes=%s\n",
                kMagic, d.qpn & 0xffffff, d.initial_psn & 0xffffff, d.rkey,
                static_cast<unsigned long long>(d.region_vaddr),
                static_cast<unsigned long long>(d.region_size), format_ipv4(d.ip).c_str(),
                d.udp_port, aes.c_str());
  return buf;
}

Result<OobQpDescriptor, std::string> oob_parse(const std::string& line) {
  char magic[16], ip[64], aes[64];
  unsigned qpn, psn, port;
  unsigned rkey;
  unsigned long long vaddr, size;
  int n = std::sscanf(line.c_str(), "%15s qpn=%x psn=%x rkey=%x vaddr=%llx size=%llu ip=%63s port=%u aes=%63s",
                      magic, &qpn, &psn, &rkey, &vaddr, &size, ip, &port, aes);
  if (n != 9) return std::string("oob: malformed descriptor line");
  if (std::strcmp(magic, kMagic) != 0) return std::string("oob: bad magic");

  OobQpDescriptor d;
  d.qpn = qpn & 0xffffff;
  d.initial_psn = psn & 0xffffff;
  d.rkey = rkey;
  d.region_vaddr = vaddr;
  d.region_size = size;
  auto parsed_ip = parse_ipv4(ip);
  if (!parsed_ip) return std::string("oob: bad ip");
  d.ip = *parsed_ip;
  if (port > 0xffff) return std::string("oob: bad port");
  d.udp_port = static_cast<uint16_t>(port);
  std::string aes_s(aes);
  if (aes_s != "-") {
    auto key = from_hex(aes_s);
    if (!key || key->size() != 16) return std::string("oob: bad aes key");
    std::array<uint8_t, 16> k;
    std::memcpy(k.data(), key->data(), 16);
    d.aes_key = k;
  }
  return d;
}

namespace {

// Reads up to a newline (descriptor lines are short).
bool read_line(int fd, int timeout_ms, std::string* line, std::string* err) {
  char c;
  for (int i = 0; i < 512; ++i) {
    pollfd pfd{fd, POLLIN, 0};
    int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr <= 0) {
      *err = "oob: timeout waiting for descriptor";
      return false;
    }
    ssize_t n = ::read(fd, &c, 1);
    if (n <= 0) {
      *err = "oob: connection closed";
      return false;
    }
    if (c == '\n') return true;
    line->push_back(c);
  }
  *err = "oob: descriptor line too long";
  return false;
}

bool write_all(int fd, const std::string& s) {
  size_t off = 0;
  while (off < s.size()) {
    ssize_t n = ::write(fd, s.data() + off, s.size() - off);
    if (n <= 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

}  // namespace

Result<OobQpDescriptor, std::string> oob_exchange_client(const std::string& host, uint16_t port,
                                                         const OobQpDescriptor& mine,
                                                         int timeout_ms) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    return std::string("oob: bad host " + host);

  int fd = -1;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return std::string("oob: socket: ") + std::strerror(errno);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) break;
    ::close(fd);
    fd = -1;
    if (std::chrono::steady_clock::now() >= deadline)
      return std::string("oob: connect timeout to " + host);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  if (!write_all(fd, oob_format(mine))) {
    ::close(fd);
    return std::string("oob: send failed");
  }
  std::string line, err;
  bool ok = read_line(fd, timeout_ms, &line, &err);
  ::close(fd);
  if (!ok) return err;
  return oob_parse(line);
}

Result<OobQpDescriptor, std::string> oob_exchange_server(uint16_t port,
                                                         const OobQpDescriptor& mine,
                                                         int timeout_ms) {
  int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) return std::string("oob: socket: ") + std::strerror(errno);
  int one = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    std::string err = std::string("oob: bind: ") + std::strerror(errno);
    ::close(lfd);
    return err;
  }
  if (::listen(lfd, 1) != 0) {
    std::string err = std::string("oob: listen: ") + std::strerror(errno);
    ::close(lfd);
    return err;
  }
  pollfd pfd{lfd, POLLIN, 0};
  if (::poll(&pfd, 1, timeout_ms) <= 0) {
    ::close(lfd);
    return std::string("oob: accept timeout");
  }
  int fd = ::accept(lfd, nullptr, nullptr);
  ::close(lfd);
  if (fd < 0) return std::string("oob: accept: ") + std::strerror(errno);

  std::string line, err;
  if (!read_line(fd, timeout_ms, &line, &err)) {
    ::close(fd);
    return err;
  }
  bool sent = write_all(fd, oob_format(mine));
  ::close(fd);
  if (!sent) return std::string("oob: send failed");
  return oob_parse(line);
}

}  // namespace uroce::api
