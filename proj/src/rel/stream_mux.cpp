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

#include "uroce/rel/stream_mux.hpp"

namespace uroce {

void StreamMux::push(TxSource src, TxMessage msg) {
  ClassQueues& cls = classes_[static_cast<int>(src)];
  auto [it, inserted] = cls.queues.try_emplace(msg.qpn);
  if (it->second.empty()) cls.round_robin.push_back(msg.qpn);
  it->second.push_back(std::move(msg));
  ++cls.total;
}

std::optional<TxMessage> StreamMux::select_from(
    ClassQueues& cls, const std::function<bool(const TxMessage&)>& admissible) {
  for (size_t scanned = 0; scanned < cls.round_robin.size(); ++scanned) {
    uint32_t qpn = cls.round_robin.front();
    auto qit = cls.queues.find(qpn);
    TxMessage& head = qit->second.front();
    if (!admissible(head)) {
      // Keep position but look at the next QP.
      cls.round_robin.pop_front();
      cls.round_robin.push_back(qpn);
      continue;
    }
    TxMessage msg = std::move(head);
    qit->second.pop_front();
    --cls.total;
    cls.round_robin.pop_front();
    if (qit->second.empty()) {
      cls.queues.erase(qit);
    } else {
      cls.round_robin.push_back(qpn);
    }
    return msg;
  }
  return std::nullopt;
}

std::optional<TxMessage> StreamMux::select(
    const std::function<bool(const TxMessage&)>& admissible) {
  int first = 1 - last_served_;
  for (int attempt = 0; attempt < 2; ++attempt) {
    int cls_idx = attempt == 0 ? first : 1 - first;
    auto msg = select_from(classes_[cls_idx], admissible);
    if (msg.has_value()) {
      last_served_ = cls_idx;
      return msg;
    }
  }
  return std::nullopt;
}

std::vector<TxMessage> StreamMux::drop_qp(uint32_t qpn) {
  std::vector<TxMessage> dropped;
  for (int c = 0; c < 2; ++c) {
    ClassQueues& cls = classes_[c];
    auto qit = cls.queues.find(qpn);
    if (qit == cls.queues.end()) continue;
    cls.total -= qit->second.size();
    if (c == static_cast<int>(TxSource::kHostRequest)) {
      for (auto& m : qit->second) dropped.push_back(std::move(m));
    }
    cls.queues.erase(qit);
    std::erase(cls.round_robin, qpn);
  }
  return dropped;
}

bool StreamMux::empty() const { return classes_[0].total == 0 && classes_[1].total == 0; }

size_t StreamMux::pending(TxSource src) const { return classes_[static_cast<int>(src)].total; }

}  // namespace uroce
