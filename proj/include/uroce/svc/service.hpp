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

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "uroce/common.hpp"
#include "uroce/wire/packet.hpp"

namespace uroce::svc {

enum class ServiceDirection : uint8_t { kRx, kTx, kBoth };

inline bool applies_to(ServiceDirection svc, ServiceDirection traffic) {
  return svc == ServiceDirection::kBoth || svc == traffic;
}

// A transform sitting on the payload datapath of bound QPs. Transforms are
// position-preserving (length in == length out) and deterministic; a chunk
// is identified by its byte offset within the message payload stream, so
// segmentation and go-back-N replay cannot change the result.
class OnPathService {
 public:
  virtual ~OnPathService() = default;

  virtual const std::string& name() const = 0;
  virtual ServiceDirection direction() const = 0;
  virtual double expansion_factor() const { return 1.0; }

  /// In-place transform of one chunk. False signals a contract violation
  /// (alignment/length); the datapath rejects the message.
  virtual bool transform(uint32_t qpn, ServiceDirection traffic, uint64_t stream_offset,
                         uint8_t* data, size_t len) = 0;

  /// Whole-message admissibility (checked once per message).
  virtual bool admits_length(uint64_t total_length) const {
    (void)total_length;
    return true;
  }
};

struct DpiVerdict {
  bool malicious = false;
  double score = 0.0;
};

/// Payload classifier behind the inspector; a learned model and the shipped
/// deterministic rule set present the same interface.
class PayloadClassifier {
 public:
  virtual ~PayloadClassifier() = default;
  virtual const std::string& name() const = 0;
  virtual DpiVerdict classify(BytesView payload) const = 0;
};

// An inspector on a parallel copy of the packet; it never mutates or delays
// the payload, only contributes a verdict that joins the delivery commit.
class ParallelPathService {
 public:
  virtual ~ParallelPathService() = default;
  virtual const std::string& name() const = 0;
  virtual DpiVerdict inspect(uint32_t qpn, const wire::RocePacket& packet) = 0;
};

enum class BindError : uint8_t { kUnknownService, kExpansionRejected };

class ServiceRegistry {
 public:
  void add(std::shared_ptr<OnPathService> svc);
  void add(std::shared_ptr<ParallelPathService> svc);

  struct Chain {
    std::vector<std::shared_ptr<OnPathService>> on_path;  // applied in bind order
    std::vector<std::shared_ptr<ParallelPathService>> parallel;
  };

  /// Binds an ordered chain of service names to a QP. The composed RX
  /// expansion factor must stay at or below 1.0.
  Result<uint32_t, BindError> bind(uint32_t qpn, const std::vector<std::string>& names);
  void unbind(uint32_t qpn);

  /// nullptr when the QP has no binding (identity datapath).
  const Chain* chain_for(uint32_t qpn) const;

  bool has_service(const std::string& name) const;

 private:
  std::unordered_map<std::string, std::shared_ptr<OnPathService>> on_path_;
  std::unordered_map<std::string, std::shared_ptr<ParallelPathService>> parallel_;
  std::unordered_map<uint32_t, Chain> bindings_;
};

}  // namespace uroce::svc
