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

#include <deque>
#include <unordered_map>
#include <vector>

#include "uroce/common.hpp"
#include "uroce/qp/table.hpp"

namespace uroce {

constexpr size_t kDefaultRetransCapacityBytes = 16ull << 20;  // 16 MiB
constexpr MicroTime kDefaultRetransTimeoutUs = 50'000;        // simulator profile
constexpr MicroTime kDefaultRetransTimeoutUdpUs = 200'000;    // datagram-socket profile
constexpr uint32_t kDefaultMaxRetries = 7;
constexpr MicroTime kDefaultTimerTickUs = 1'000;

/// One buffered message: complete wire images for consecutive PSNs starting
/// at `first_psn`, kept verbatim until the remote end acknowledges them.
struct RetransEntry {
  uint64_t request_id = 0;
  uint32_t first_psn = 0;
  std::vector<Bytes> packet_images;
  MicroTime enqueue_time = 0;
  uint32_t psn_after() const {
    return (first_psn + static_cast<uint32_t>(packet_images.size())) & wire::kPsnMask;
  }
  size_t bytes() const {
    size_t n = 0;
    for (const auto& img : packet_images) n += img.size();
    return n;
  }
};

/// Bounded retransmission store. Insertion is all-or-nothing against the
/// byte capacity; a false return means the TX path must stall until a
/// release frees space.
class RetransBuffer {
 public:
  explicit RetransBuffer(size_t capacity_bytes = kDefaultRetransCapacityBytes)
      : capacity_(capacity_bytes) {}

  bool can_insert(size_t bytes) const { return used_ + bytes <= capacity_; }

  bool insert(uint32_t qpn, RetransEntry entry);

  struct ReleaseResult {
    size_t freed_bytes = 0;
    uint32_t packets_retired = 0;
    // request ids whose final PSN retired with this release, in PSN order
    std::vector<uint64_t> completed_requests;
  };
  /// Cumulative release of everything at or behind `acked_psn`. Progress
  /// resets the QP's retry counter.
  ReleaseResult release_upto(uint32_t qpn, uint32_t acked_psn);

  /// Fails one buffered message by request id (used on remote NAK-other).
  /// Returns freed packet count, or 0 when nothing matched.
  uint32_t drop_request(uint32_t qpn, uint64_t request_id, size_t* freed_bytes);

  /// Verbatim images for every unacked PSN at or after `from_psn`, in PSN
  /// order; resets their timeout clock. Empty result counts as a no-op
  /// replay when `from_psn` is already acked.
  std::vector<const Bytes*> replay_from(uint32_t qpn, uint32_t from_psn, MicroTime now);

  struct Expiry {
    uint32_t qpn = 0;
    uint32_t from_psn = 0;
    bool exhausted = false;  // retry budget spent; QP must fail
  };
  /// QPs whose oldest unacked entry exceeded `timeout_us` at `now`. For
  /// non-exhausted expiries the retry counter is consumed here; the caller
  /// follows up with replay_from.
  std::vector<Expiry> poll_expired(MicroTime now, MicroTime timeout_us, uint32_t max_retries);

  /// Drops all state for a QP (teardown or failure). Returns freed bytes.
  size_t drop_qp(uint32_t qpn);

  /// Request id of the buffered message covering an unacked PSN, if any.
  std::optional<uint64_t> request_covering(uint32_t qpn, uint32_t psn) const;

  size_t used_bytes() const { return used_; }
  size_t capacity_bytes() const { return capacity_; }
  uint32_t unacked_packets(uint32_t qpn) const;
  std::vector<uint64_t> pending_requests(uint32_t qpn) const;
  uint64_t noop_replays() const { return noop_replays_; }

 private:
  struct PerQp {
    std::deque<RetransEntry> entries;  // PSN order
    uint32_t retries_used = 0;
  };

  size_t capacity_;
  size_t used_ = 0;
  uint64_t noop_replays_ = 0;
  std::unordered_map<uint32_t, PerQp> qps_;
};

}  // namespace uroce
