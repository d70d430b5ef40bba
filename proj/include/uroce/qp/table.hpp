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
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uroce/common.hpp"
#include "uroce/wire/packet.hpp"

namespace uroce {

constexpr size_t kDefaultQpCapacity = 500;

/// Half of the 24-bit sequence space; anything this far behind the
/// expected value classifies as a duplicate.
constexpr uint32_t kPsnHalfWindow = 1u << 23;

struct QpConnection {
  uint32_t local_qpn = 0;
  uint32_t remote_qpn = 0;
  uint32_t remote_ip = 0;
  uint16_t remote_udp_port = wire::kRoceUdpPort;
  uint32_t local_rkey = 0;
  uint32_t remote_rkey = 0;
  std::optional<std::array<uint8_t, 16>> aes_key;
  std::string service_binding;  // named service chain, empty for plain transport
};

struct QpPsnState {
  uint32_t next_send_psn = 0;
  uint32_t expected_rx_psn = 0;
  // PSN one before the first unacked outbound packet (modular); everything
  // at or behind it has been cumulatively acknowledged.
  uint32_t last_acked_psn = 0;
  uint32_t retry_count = 0;
};

/// Message-level cursor, one for each direction of a QP.
struct MsnEntry {
  uint32_t msn = 0;
  uint64_t in_progress_vaddr = 0;
  uint32_t bytes_remaining = 0;
  uint32_t first_psn_of_message = 0;
  bool in_progress = false;
};

struct QpContext {
  QpConnection connection;
  QpPsnState psn;
  MsnEntry msn_rx;
  MsnEntry msn_tx;
  std::optional<MicroTime> timer_deadline;
  bool failed = false;  // set when retransmission retries are exhausted

  void advance_rx() { psn.expected_rx_psn = (psn.expected_rx_psn + 1) & wire::kPsnMask; }
  void advance_tx(uint32_t n_packets) {
    psn.next_send_psn = (psn.next_send_psn + n_packets) & wire::kPsnMask;
  }
};

enum class PsnCheck : uint8_t { kInOrder, kDuplicate, kSequenceError };

/// Pure modular-window classification of an incoming PSN; no state change.
inline PsnCheck psn_window_classify(uint32_t expected, uint32_t incoming) {
  uint32_t diff = (incoming - expected) & wire::kPsnMask;
  if (diff == 0) return PsnCheck::kInOrder;
  if (diff >= kPsnHalfWindow) return PsnCheck::kDuplicate;
  return PsnCheck::kSequenceError;
}

/// True when `a` is modularly at or behind `b` within the half window.
inline bool psn_le(uint32_t a, uint32_t b) {
  return ((b - a) & wire::kPsnMask) < kPsnHalfWindow;
}

enum class QpError : uint8_t { kTableFull, kDuplicateQpn, kUnknownQpn };

/// Flat, fixed-capacity store of per-QP contexts.
class QpTable {
 public:
  explicit QpTable(size_t capacity = kDefaultQpCapacity);

  /// Installs a context. expected_rx_psn starts at the peer's initial send
  /// PSN; next_send_psn at the local initial PSN.
  Result<uint32_t, QpError> create(const QpConnection& conn, uint32_t initial_send_psn,
                                   uint32_t initial_recv_psn);

  QpContext* find(uint32_t qpn);
  const QpContext* find(uint32_t qpn) const;
  bool destroy(uint32_t qpn);

  Result<PsnCheck, QpError> psn_check(uint32_t qpn, uint32_t incoming) const;

  size_t size() const { return index_.size(); }
  size_t capacity() const { return capacity_; }

  template <typename F>
  void for_each(F&& f) {
    for (auto& slot : slots_) {
      if (slot.has_value()) f(*slot);
    }
  }

 private:
  size_t capacity_;
  std::vector<std::optional<QpContext>> slots_;
  std::unordered_map<uint32_t, size_t> index_;
  std::vector<size_t> free_slots_;
};

}  // namespace uroce
