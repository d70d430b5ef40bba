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

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>

namespace uroce {

/// A message-granular unit of outgoing work.
struct TxMessage {
  enum class Kind : uint8_t { kWrite, kReadRequest, kReadResponse };

  uint64_t request_id = 0;  // 0 for responder-generated traffic
  uint32_t qpn = 0;
  Kind kind = Kind::kWrite;
  uint64_t remote_vaddr = 0;  // write/read-response target; read source for requests
  uint32_t length = 0;
  uint64_t local_offset = 0;  // payload source (write, read response) or read landing offset
};

/// The two independent outbound streams: host-submitted requests (writes and
/// read requests, in submission order per QP) and responder-generated read
/// responses. Merged one source at a time at message granularity so neither
/// can block the other.
enum class TxSource : uint8_t { kHostRequest = 0, kReadResponse = 1 };

class StreamMux {
 public:
  void push(TxSource src, TxMessage msg);

  /// Next admissible message under round-robin arbitration: the source
  /// classes alternate at message boundaries, and QPs rotate within a
  /// class. `admissible` may veto a head-of-queue message (budget or
  /// capacity stall); vetoed queues keep their position.
  std::optional<TxMessage> select(
      const std::function<bool(const TxMessage&)>& admissible);

  bool empty() const;
  size_t pending(TxSource src) const;

  /// Discards everything queued for a QP (teardown/failure). Returns the
  /// dropped host-request messages so callers can fail them.
  std::vector<TxMessage> drop_qp(uint32_t qpn);

 private:
  struct ClassQueues {
    std::deque<uint32_t> round_robin;  // QPs with queued messages
    std::unordered_map<uint32_t, std::deque<TxMessage>> queues;
    size_t total = 0;
  };

  std::optional<TxMessage> select_from(ClassQueues& cls,
                                       const std::function<bool(const TxMessage&)>& admissible);

  ClassQueues classes_[2];
  int last_served_ = 1;  // host requests go first on an idle mux
};

}  // namespace uroce
