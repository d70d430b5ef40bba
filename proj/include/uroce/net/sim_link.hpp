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

#include <queue>
#include <random>

#include "uroce/net/link.hpp"

namespace uroce::net {

/// Deterministic per-direction fault and timing model. With a fixed seed the
/// fate of every frame is a pure function of the send sequence.
struct LinkConfig {
  double loss_prob = 0.0;
  double reorder_prob = 0.0;
  double duplicate_prob = 0.0;
  MicroTime delay_min_us = 5;
  MicroTime delay_max_us = 15;
  uint64_t bandwidth_bytes_per_sec = 0;  // 0 = uncapped
  size_t mtu = 4096;
  uint64_t rng_seed = 1;

  bool valid() const {
    auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
    return in01(loss_prob) && in01(reorder_prob) && in01(duplicate_prob) &&
           delay_min_us >= 0 && delay_max_us >= delay_min_us && mtu >= 256;
  }
};

struct LinkStats {
  uint64_t sent = 0;
  uint64_t delivered = 0;
  uint64_t dropped = 0;
  uint64_t duplicated = 0;
  uint64_t reordered = 0;
  uint64_t bytes_delivered = 0;
};

/// One simulated wire joining two endpoints "a" and "b". Endpoints implement
/// the Link interface; time is supplied by the caller (virtual in tests and
/// sim benches).
class SimNet {
 public:
  SimNet(const LinkConfig& a_to_b, const LinkConfig& b_to_a);

  Link& a() { return end_a_; }
  Link& b() { return end_b_; }

  /// Earliest pending delivery instant across both directions.
  std::optional<MicroTime> next_event_time() const;
  bool idle() const;

  const LinkStats& stats_a_to_b() const { return dir_[0].stats; }
  const LinkStats& stats_b_to_a() const { return dir_[1].stats; }

  /// Order+content hash of everything delivered so far in one direction
  /// (0 = a->b); equal hashes across runs certify a deterministic schedule.
  uint64_t delivery_trace_hash(int direction) const { return dir_[direction].trace_hash; }

 private:
  struct InFlight {
    MicroTime deliver_at;
    uint64_t seq;
    Bytes frame;
    bool operator>(const InFlight& o) const {
      if (deliver_at != o.deliver_at) return deliver_at > o.deliver_at;
      return seq > o.seq;
    }
  };

  struct Direction {
    LinkConfig cfg;
    std::mt19937_64 rng;
    std::priority_queue<InFlight, std::vector<InFlight>, std::greater<InFlight>> queue;
    int64_t next_free_ns = 0;     // serialization model for the bandwidth cap
    MicroTime last_deliver = 0;   // FIFO floor: only reorder events may jump it
    uint64_t seq = 0;
    uint64_t trace_hash = 0xcbf29ce484222325ull;
    LinkStats stats;
  };

  class Endpoint : public Link {
   public:
    Endpoint(SimNet* net, int side) : net_(net), side_(side) {}
    LinkSendError send(BytesView frame, MicroTime now) override {
      return net_->send(side_, frame, now);
    }
    std::optional<Bytes> recv(MicroTime now) override { return net_->recv(side_, now); }
    size_t mtu() const override { return net_->dir_[side_].cfg.mtu; }

   private:
    SimNet* net_;
    int side_;
  };

  LinkSendError send(int from_side, BytesView frame, MicroTime now);
  std::optional<Bytes> recv(int side, MicroTime now);
  void schedule(Direction& dir, Bytes frame, MicroTime deliver_at);

  Direction dir_[2];  // [0] carries a->b, [1] carries b->a
  Endpoint end_a_{this, 0};
  Endpoint end_b_{this, 1};
};

}  // namespace uroce::net
