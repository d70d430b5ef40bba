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

#include "uroce/qp/table.hpp"

namespace uroce {

QpTable::QpTable(size_t capacity) : capacity_(capacity), slots_(capacity) {
  free_slots_.reserve(capacity);
  for (size_t i = capacity; i > 0; --i) free_slots_.push_back(i - 1);
}

Result<uint32_t, QpError> QpTable::create(const QpConnection& conn, uint32_t initial_send_psn,
                                          uint32_t initial_recv_psn) {
  if (index_.contains(conn.local_qpn)) return QpError::kDuplicateQpn;
  if (free_slots_.empty()) return QpError::kTableFull;
  size_t slot = free_slots_.back();
  free_slots_.pop_back();

  QpContext ctx;
  ctx.connection = conn;
  ctx.psn.next_send_psn = initial_send_psn & wire::kPsnMask;
  ctx.psn.expected_rx_psn = initial_recv_psn & wire::kPsnMask;
  ctx.psn.last_acked_psn = (initial_send_psn - 1) & wire::kPsnMask;
  slots_[slot] = std::move(ctx);
  index_.emplace(conn.local_qpn, slot);
  return conn.local_qpn;
}

QpContext* QpTable::find(uint32_t qpn) {
  auto it = index_.find(qpn);
  if (it == index_.end()) return nullptr;
  return &*slots_[it->second];
}

const QpContext* QpTable::find(uint32_t qpn) const {
  auto it = index_.find(qpn);
  if (it == index_.end()) return nullptr;
  return &*slots_[it->second];
}

bool QpTable::destroy(uint32_t qpn) {
  auto it = index_.find(qpn);
  if (it == index_.end()) return false;
  slots_[it->second].reset();
  free_slots_.push_back(it->second);
  index_.erase(it);
  return true;
}

Result<PsnCheck, QpError> QpTable::psn_check(uint32_t qpn, uint32_t incoming) const {
  const QpContext* ctx = find(qpn);
  if (ctx == nullptr) return QpError::kUnknownQpn;
  return psn_window_classify(ctx->psn.expected_rx_psn, incoming & wire::kPsnMask);
}

}  // namespace uroce
