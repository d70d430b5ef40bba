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

#include <map>
#include <string>
#include <vector>

#include "uroce/flow/credit.hpp"
#include "uroce/kernels/dlrm.hpp"
#include "uroce/net/sim_link.hpp"
#include "uroce/net/sniffer.hpp"
#include "uroce/qp/table.hpp"
#include "uroce/rel/retransmit.hpp"

namespace uroce {

struct EngineConfig {
  size_t qp_capacity = kDefaultQpCapacity;
  size_t mtu = 4096;
  uint32_t max_outstanding = kDefaultMaxOutstanding;
  uint32_t credit_pool_capacity = kDefaultCreditPoolCapacity;
  size_t retrans_capacity_bytes = kDefaultRetransCapacityBytes;
  MicroTime retrans_timeout_us = kDefaultRetransTimeoutUs;
  uint32_t max_retries = kDefaultMaxRetries;
  MicroTime timer_tick_us = kDefaultTimerTickUs;
  uint32_t local_ip = 0x0a000001;  // 10.0.0.1
  uint16_t local_udp_port = wire::kRoceUdpPort;
  uint64_t rng_seed = 0x105e;  // initial PSN / rkey generation
  bool stage_timing = false;  // wall-clock per-stage probes (bench breakdown)
  bool sniffer_enabled = false;
  net::SnifferConfig sniffer;
};

/// Whole-application configuration: engine knobs, service parameters, and
/// named link profiles for the CLI.
struct AppConfig {
  EngineConfig engine;
  kernels::DlrmParams dlrm;
  double dpi_threshold = 0.9;
  std::string aes_key_hex;                  // 32 hex chars; empty = unkeyed QPs
  std::vector<std::string> default_chain;   // service names bound at QP setup
  std::map<std::string, net::LinkConfig> link_profiles;
};

/// Built-in link profiles: "ideal" (lossless, uncapped), "lan-1g" (1 GB/s
/// cap), "lossy" (5% loss, 2% reorder, 1% duplication).
AppConfig default_config();

Result<AppConfig, std::string> load_config_file(const std::string& path);
Result<AppConfig, std::string> parse_config_json(const std::string& text);

}  // namespace uroce
