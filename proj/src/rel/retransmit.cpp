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

#include "uroce/rel/retransmit.hpp"

#include <algorithm>

namespace uroce {

bool RetransBuffer::insert(uint32_t qpn, RetransEntry entry) {
  size_t bytes = entry.bytes();
  if (!can_insert(bytes)) return false;
  used_ += bytes;
  qps_[qpn].entries.push_back(std::move(entry));
  return true;
}

RetransBuffer::ReleaseResult RetransBuffer::release_upto(uint32_t qpn, uint32_t acked_psn) {
  ReleaseResult result;
  auto it = qps_.find(qpn);
  if (it == qps_.end()) return result;
  auto& per_qp = it->second;
  while (!per_qp.entries.empty()) {
    RetransEntry& head = per_qp.entries.front();
    uint32_t last_psn = (head.psn_after() - 1) & wire::kPsnMask;
    if (!psn_le(last_psn, acked_psn)) break;  // head not fully covered
    result.freed_bytes += head.bytes();
    result.packets_retired += static_cast<uint32_t>(head.packet_images.size());
    result.completed_requests.push_back(head.request_id);
    per_qp.entries.pop_front();
  }
  used_ -= result.freed_bytes;
  if (result.packets_retired > 0) per_qp.retries_used = 0;
  if (per_qp.entries.empty()) qps_.erase(it);
  return result;
}

uint32_t RetransBuffer::drop_request(uint32_t qpn, uint64_t request_id, size_t* freed_bytes) {
  auto it = qps_.find(qpn);
  if (it == qps_.end()) return 0;
  auto& entries = it->second.entries;
  for (auto e = entries.begin(); e != entries.end(); ++e) {
    if (e->request_id != request_id) continue;
    uint32_t packets = static_cast<uint32_t>(e->packet_images.size());
    size_t bytes = e->bytes();
    used_ -= bytes;
    if (freed_bytes != nullptr) *freed_bytes = bytes;
    entries.erase(e);
    if (entries.empty()) qps_.erase(it);
    return packets;
  }
  return 0;
}

std::vector<const Bytes*> RetransBuffer::replay_from(uint32_t qpn, uint32_t from_psn,
                                                     MicroTime now) {
  std::vector<const Bytes*> images;
  auto it = qps_.find(qpn);
  if (it == qps_.end()) {
    ++noop_replays_;
    return images;
  }
  for (auto& entry : it->second.entries) {
    uint32_t psn = entry.first_psn;
    bool touched = false;
    for (const Bytes& img : entry.packet_images) {
      if (psn_le(from_psn, psn)) {
        images.push_back(&img);
        touched = true;
      }
      psn = (psn + 1) & wire::kPsnMask;
    }
    if (touched) entry.enqueue_time = now;
  }
  if (images.empty()) ++noop_replays_;
  return images;
}

std::vector<RetransBuffer::Expiry> RetransBuffer::poll_expired(MicroTime now, MicroTime timeout_us,
                                                               uint32_t max_retries) {
  std::vector<Expiry> expired;
  for (auto& [qpn, per_qp] : qps_) {
    if (per_qp.entries.empty()) continue;
    const RetransEntry& oldest = per_qp.entries.front();
    if (now - oldest.enqueue_time < timeout_us) continue;
    Expiry e;
    e.qpn = qpn;
    e.from_psn = oldest.first_psn;
    if (per_qp.retries_used >= max_retries) {
      e.exhausted = true;
    } else {
      ++per_qp.retries_used;
    }
    expired.push_back(e);
  }
  return expired;
}

size_t RetransBuffer::drop_qp(uint32_t qpn) {
  auto it = qps_.find(qpn);
  if (it == qps_.end()) return 0;
  size_t freed = 0;
  for (const auto& e : it->second.entries) freed += e.bytes();
  used_ -= freed;
  qps_.erase(it);
  return freed;
}

std::optional<uint64_t> RetransBuffer::request_covering(uint32_t qpn, uint32_t psn) const {
  auto it = qps_.find(qpn);
  if (it == qps_.end()) return std::nullopt;
  for (const auto& e : it->second.entries) {
    uint32_t diff = (psn - e.first_psn) & wire::kPsnMask;
    if (diff < e.packet_images.size()) return e.request_id;
  }
  return std::nullopt;
}

uint32_t RetransBuffer::unacked_packets(uint32_t qpn) const {
  auto it = qps_.find(qpn);
  if (it == qps_.end()) return 0;
  uint32_t n = 0;
  for (const auto& e : it->second.entries) n += static_cast<uint32_t>(e.packet_images.size());
  return n;
}

std::vector<uint64_t> RetransBuffer::pending_requests(uint32_t qpn) const {
  std::vector<uint64_t> ids;
  auto it = qps_.find(qpn);
  if (it == qps_.end()) return ids;
  ids.reserve(it->second.entries.size());
  for (const auto& e : it->second.entries) ids.push_back(e.request_id);
  return ids;
}

}  // namespace uroce
