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

#include "uroce/svc/service.hpp"

namespace uroce::svc {

// Deterministic reference classifier: flags payloads that start with a known
// executable image magic, or whose non-text byte fraction crosses a
// threshold. Score is 1.0 for a magic hit, otherwise the binary fraction.
class RuleBasedClassifier : public PayloadClassifier {
 public:
  explicit RuleBasedClassifier(double binary_fraction_threshold = 0.9)
      : threshold_(binary_fraction_threshold) {}

  const std::string& name() const override { return name_; }
  DpiVerdict classify(BytesView payload) const override;

  static bool has_executable_magic(BytesView payload);

 private:
  std::string name_ = "rules";
  double threshold_;
};

/// Parallel-path packet inspector: runs the classifier on a read-only view
/// of each payload-bearing packet. Classifier failures never drop data; they
/// count as Clean with a diagnostic.
class DpiService : public ParallelPathService {
 public:
  explicit DpiService(std::shared_ptr<PayloadClassifier> classifier)
      : classifier_(std::move(classifier)) {}

  const std::string& name() const override { return name_; }
  DpiVerdict inspect(uint32_t qpn, const wire::RocePacket& packet) override;

  uint64_t inspections() const { return inspections_; }
  uint64_t classifier_failures() const { return failures_; }
  const PayloadClassifier& classifier() const { return *classifier_; }

 private:
  std::string name_ = "dpi";
  std::shared_ptr<PayloadClassifier> classifier_;
  uint64_t inspections_ = 0;
  uint64_t failures_ = 0;
};

}  // namespace uroce::svc
