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

#include "uroce/kernels/dlrm.hpp"
#include "uroce/svc/service.hpp"

namespace uroce::svc {

enum class DlrmError : uint8_t { kMisalignedStream, kZeroModulus };

/// Offline whole-stream form of the preprocessing pipeline. The stream must
/// be a whole number of records.
Result<Bytes, DlrmError> dlrm_pipeline(BytesView stream, const kernels::DlrmParams& params);

// RX-datapath preprocessing of fixed-width recommender records. Single-pass
// with O(1) state: a chunk's transform depends only on its stream offset, so
// records split across packets come out the same as an offline pass.
class DlrmPreprocService : public OnPathService {
 public:
  /// Throws std::invalid_argument on an unusable parameter set (zero modulus
  /// or empty schema).
  explicit DlrmPreprocService(kernels::DlrmParams params);

  const std::string& name() const override { return name_; }
  ServiceDirection direction() const override { return ServiceDirection::kRx; }

  bool transform(uint32_t qpn, ServiceDirection traffic, uint64_t stream_offset, uint8_t* data,
                 size_t len) override;
  bool admits_length(uint64_t total_length) const override {
    return total_length % params_.record_bytes() == 0;
  }

  const kernels::DlrmParams& params() const { return params_; }

 private:
  std::string name_ = "dlrm-preproc";
  kernels::DlrmParams params_;
};

}  // namespace uroce::svc
