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

namespace uroce {

constexpr uint32_t kDefaultMaxOutstanding = 128;
constexpr uint32_t kDefaultCreditPoolCapacity = 1024;

// ACK-clocked per-QP send budget, counted in packets: drained by passing
// requests, refilled only by returning acknowledgements.
class QpBudget {
 public:
  explicit QpBudget(uint32_t max_outstanding = kDefaultMaxOutstanding)
      : max_(max_outstanding), available_(max_outstanding) {}

  bool try_admit(uint32_t n_packets) {
    if (available_ < n_packets) return false;
    available_ -= n_packets;
    return true;
  }

  void give_back(uint32_t n_packets) {
    uint64_t next = static_cast<uint64_t>(available_) + n_packets;
    if (next > max_) {
      // An over-return is an accounting bug upstream; clamp and count.
      ++over_returns_;
      next = max_;
    }
    available_ = static_cast<uint32_t>(next);
  }

  uint32_t available() const { return available_; }
  uint32_t max_outstanding() const { return max_; }
  uint32_t in_flight() const { return max_ - available_; }
  uint64_t over_returns() const { return over_returns_; }

 private:
  uint32_t max_;
  uint32_t available_;
  uint64_t over_returns_ = 0;
};

// Receiver-side credits mirroring the consumption capacity of the
// host-facing delivery path. One credit per accepted data packet, returned
// when the corresponding delivery is consumed by its sink.
class CreditPool {
 public:
  explicit CreditPool(uint32_t capacity = kDefaultCreditPoolCapacity)
      : capacity_(capacity), available_(capacity) {}

  bool try_consume() {
    if (available_ == 0) return false;
    --available_;
    return true;
  }

  void give_back() {
    if (available_ >= capacity_) {
      ++over_returns_;
      return;
    }
    ++available_;
  }

  uint32_t available() const { return available_; }
  uint32_t capacity() const { return capacity_; }
  uint32_t outstanding() const { return capacity_ - available_; }
  uint64_t over_returns() const { return over_returns_; }

 private:
  uint32_t capacity_;
  uint32_t available_;
  uint64_t over_returns_ = 0;
};

/// Hook points for congestion-control policies. The ACK-clocked budget above
/// is the only shipped policy; DCQCN/TIMELY-style schemes can observe these
/// events and resize budgets.
class CongestionControl {
 public:
  virtual ~CongestionControl() = default;
  virtual void on_packets_sent(uint32_t qpn, uint32_t n) {
    (void)qpn;
    (void)n;
  }
  virtual void on_ack(uint32_t qpn, uint32_t n_retired) {
    (void)qpn;
    (void)n_retired;
  }
  virtual void on_nak(uint32_t qpn) { (void)qpn; }
  virtual void on_timeout(uint32_t qpn) { (void)qpn; }
};

}  // namespace uroce
