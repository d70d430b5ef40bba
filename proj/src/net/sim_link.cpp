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

#include "uroce/net/sim_link.hpp"

namespace uroce::net {

SimNet::SimNet(const LinkConfig& a_to_b, const LinkConfig& b_to_a) {
  dir_[0].cfg = a_to_b;
  dir_[1].cfg = b_to_a;
  // Distinct streams per direction so interleaving across directions cannot
  // perturb either fate sequence.
  dir_[0].rng.seed(a_to_b.rng_seed * 2 + 1);
  dir_[1].rng.seed(b_to_a.rng_seed * 2 + 2);
}

void SimNet::schedule(Direction& dir, Bytes frame, MicroTime deliver_at) {
  dir.queue.push(InFlight{deliver_at, dir.seq++, std::move(frame)});
}

LinkSendError SimNet::send(int from_side, BytesView frame, MicroTime now) {
  Direction& dir = dir_[from_side];
  if (frame.size() > dir.cfg.mtu + kMaxHeaderOverhead) return LinkSendError::kOversized;
  ++dir.stats.sent;

  // Fixed draw order per frame keeps the fate sequence a function of the
  // send sequence alone.
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double p_loss = uni(dir.rng);
  double p_dup = uni(dir.rng);
  double p_reorder = uni(dir.rng);
  std::uniform_int_distribution<MicroTime> jitter_dist(dir.cfg.delay_min_us, dir.cfg.delay_max_us);
  MicroTime jitter = jitter_dist(dir.rng);

  if (p_loss < dir.cfg.loss_prob) {
    ++dir.stats.dropped;
    return LinkSendError::kOk;
  }

  int64_t now_ns = static_cast<int64_t>(now) * 1000;
  int64_t start_ns = std::max(now_ns, dir.next_free_ns);
  int64_t ser_ns = 0;
  if (dir.cfg.bandwidth_bytes_per_sec > 0) {
    ser_ns = static_cast<int64_t>(frame.size() * 1'000'000'000ull /
                                  dir.cfg.bandwidth_bytes_per_sec);
  }
  dir.next_free_ns = start_ns + ser_ns;
  MicroTime deliver_at = (start_ns + ser_ns) / 1000 + jitter;

  if (p_reorder < dir.cfg.reorder_prob) {
    // Hold the frame back roughly one slot: one MTU of serialization plus
    // the worst-case jitter, so the next frame overtakes it. Held frames do
    // not raise the FIFO floor.
    ++dir.stats.reordered;
    MicroTime penalty = dir.cfg.delay_max_us + 1;
    if (dir.cfg.bandwidth_bytes_per_sec > 0) {
      penalty += static_cast<MicroTime>((dir.cfg.mtu + kMaxHeaderOverhead) * 1'000'000ull /
                                        dir.cfg.bandwidth_bytes_per_sec);
    }
    deliver_at = std::max(deliver_at, dir.last_deliver) + penalty;
  } else {
    // Absent an explicit reorder event the wire is FIFO: jitter may stretch
    // spacing but never overtake.
    deliver_at = std::max(deliver_at, dir.last_deliver);
    dir.last_deliver = deliver_at;
  }

  schedule(dir, Bytes(frame.begin(), frame.end()), deliver_at);
  if (p_dup < dir.cfg.duplicate_prob) {
    ++dir.stats.duplicated;
    schedule(dir, Bytes(frame.begin(), frame.end()), deliver_at + 1);
  }
  return LinkSendError::kOk;
}

std::optional<Bytes> SimNet::recv(int side, MicroTime now) {
  // Endpoint `side` receives what the *other* side sent.
  Direction& dir = dir_[1 - side];
  if (dir.queue.empty() || dir.queue.top().deliver_at > now) return std::nullopt;
  Bytes frame = dir.queue.top().frame;
  dir.queue.pop();
  ++dir.stats.delivered;
  dir.stats.bytes_delivered += frame.size();
  dir.trace_hash = fnv1a(frame, dir.trace_hash);
  return frame;
}

std::optional<MicroTime> SimNet::next_event_time() const {
  std::optional<MicroTime> t;
  for (const auto& dir : dir_) {
    if (!dir.queue.empty()) {
      MicroTime at = dir.queue.top().deliver_at;
      if (!t.has_value() || at < *t) t = at;
    }
  }
  return t;
}

bool SimNet::idle() const { return dir_[0].queue.empty() && dir_[1].queue.empty(); }

}  // namespace uroce::net
