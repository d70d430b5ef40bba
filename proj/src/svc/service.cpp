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

#include "uroce/svc/service.hpp"

namespace uroce::svc {

void ServiceRegistry::add(std::shared_ptr<OnPathService> svc) {
  on_path_[svc->name()] = std::move(svc);
}

void ServiceRegistry::add(std::shared_ptr<ParallelPathService> svc) {
  parallel_[svc->name()] = std::move(svc);
}

Result<uint32_t, BindError> ServiceRegistry::bind(uint32_t qpn,
                                                  const std::vector<std::string>& names) {
  Chain chain;
  double rx_expansion = 1.0;
  for (const auto& name : names) {
    if (auto it = on_path_.find(name); it != on_path_.end()) {
      if (applies_to(it->second->direction(), ServiceDirection::kRx)) {
        rx_expansion *= it->second->expansion_factor();
      }
      chain.on_path.push_back(it->second);
      continue;
    }
    if (auto it = parallel_.find(name); it != parallel_.end()) {
      chain.parallel.push_back(it->second);
      continue;
    }
    return BindError::kUnknownService;
  }
  // An expanding RX chain would outgrow the inbound line rate; refuse the
  // binding instead of backpressuring the wire.
  if (rx_expansion > 1.0) return BindError::kExpansionRejected;
  bindings_[qpn] = std::move(chain);
  return qpn;
}

void ServiceRegistry::unbind(uint32_t qpn) { bindings_.erase(qpn); }

const ServiceRegistry::Chain* ServiceRegistry::chain_for(uint32_t qpn) const {
  auto it = bindings_.find(qpn);
  if (it == bindings_.end()) return nullptr;
  return &it->second;
}

bool ServiceRegistry::has_service(const std::string& name) const {
  return on_path_.contains(name) || parallel_.contains(name);
}

}  // namespace uroce::svc
