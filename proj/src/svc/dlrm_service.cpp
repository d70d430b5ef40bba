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

#include "uroce/svc/dlrm_service.hpp"

#include <stdexcept>

namespace uroce::svc {

Result<Bytes, DlrmError> dlrm_pipeline(BytesView stream, const kernels::DlrmParams& params) {
  if (!params.valid()) return DlrmError::kZeroModulus;
  if (stream.size() % params.record_bytes() != 0) return DlrmError::kMisalignedStream;
  Bytes out(stream.begin(), stream.end());
  kernels::dlrm_transform(out.data(), out.size(), 0, params);
  return out;
}

DlrmPreprocService::DlrmPreprocService(kernels::DlrmParams params) : params_(std::move(params)) {
  if (!params_.valid()) throw std::invalid_argument("dlrm-preproc: zero modulus or empty schema");
}

bool DlrmPreprocService::transform(uint32_t qpn, ServiceDirection traffic, uint64_t stream_offset,
                                   uint8_t* data, size_t len) {
  (void)qpn;
  (void)traffic;
  if ((stream_offset & 3) != 0 || (len & 3) != 0) return false;
  kernels::dlrm_transform(data, len, stream_offset, params_);
  return true;
}

}  // namespace uroce::svc
