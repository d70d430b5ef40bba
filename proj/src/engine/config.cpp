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

#include "uroce/engine/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uroce {

using nlohmann::json;

AppConfig default_config() {
  AppConfig cfg;

  net::LinkConfig ideal;
  ideal.loss_prob = 0;
  ideal.reorder_prob = 0;
  ideal.duplicate_prob = 0;
  ideal.delay_min_us = 5;
  ideal.delay_max_us = 10;
  cfg.link_profiles["ideal"] = ideal;

  net::LinkConfig lan = ideal;
  lan.bandwidth_bytes_per_sec = 1'000'000'000;  // 1 GB/s
  cfg.link_profiles["lan-1g"] = lan;

  net::LinkConfig lossy = ideal;
  lossy.loss_prob = 0.05;
  lossy.reorder_prob = 0.02;
  lossy.duplicate_prob = 0.01;
  cfg.link_profiles["lossy"] = lossy;

  return cfg;
}

namespace {

void parse_link(const json& j, net::LinkConfig* link) {
  if (j.contains("loss")) link->loss_prob = j["loss"].get<double>();
  if (j.contains("reorder")) link->reorder_prob = j["reorder"].get<double>();
  if (j.contains("duplicate")) link->duplicate_prob = j["duplicate"].get<double>();
  if (j.contains("delay_min_us")) link->delay_min_us = j["delay_min_us"].get<MicroTime>();
  if (j.contains("delay_max_us")) link->delay_max_us = j["delay_max_us"].get<MicroTime>();
  if (j.contains("bandwidth_bytes_per_sec"))
    link->bandwidth_bytes_per_sec = j["bandwidth_bytes_per_sec"].get<uint64_t>();
  if (j.contains("mtu")) link->mtu = j["mtu"].get<size_t>();
  if (j.contains("seed")) link->rng_seed = j["seed"].get<uint64_t>();
}

}  // namespace

Result<AppConfig, std::string> parse_config_json(const std::string& text) {
  AppConfig cfg = default_config();
  json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) return std::string("config: invalid JSON");

  if (root.contains("engine")) {
    const json& e = root["engine"];
    EngineConfig& ec = cfg.engine;
    if (e.contains("qp_capacity")) ec.qp_capacity = e["qp_capacity"].get<size_t>();
    if (e.contains("mtu")) ec.mtu = e["mtu"].get<size_t>();
    if (e.contains("max_outstanding")) ec.max_outstanding = e["max_outstanding"].get<uint32_t>();
    if (e.contains("credit_pool")) ec.credit_pool_capacity = e["credit_pool"].get<uint32_t>();
    if (e.contains("retrans_capacity_bytes"))
      ec.retrans_capacity_bytes = e["retrans_capacity_bytes"].get<size_t>();
    if (e.contains("retrans_timeout_us"))
      ec.retrans_timeout_us = e["retrans_timeout_us"].get<MicroTime>();
    if (e.contains("max_retries")) ec.max_retries = e["max_retries"].get<uint32_t>();
    if (e.contains("timer_tick_us")) ec.timer_tick_us = e["timer_tick_us"].get<MicroTime>();
    if (e.contains("local_ip")) {
      auto ip = parse_ipv4(e["local_ip"].get<std::string>());
      if (!ip) return std::string("config: bad engine.local_ip");
      ec.local_ip = *ip;
    }
    if (e.contains("local_udp_port")) ec.local_udp_port = e["local_udp_port"].get<uint16_t>();
  }

  if (root.contains("sniffer")) {
    const json& s = root["sniffer"];
    cfg.engine.sniffer_enabled = s.value("enabled", false);
    if (s.contains("path")) cfg.engine.sniffer.output_path = s["path"].get<std::string>();
    if (s.contains("direction")) {
      std::string d = s["direction"].get<std::string>();
      using D = net::SnifferConfig::Direction;
      cfg.engine.sniffer.direction = d == "rx" ? D::kRx : d == "tx" ? D::kTx : D::kBoth;
    }
    if (s.contains("filter")) {
      cfg.engine.sniffer.filter = s["filter"].get<std::string>() == "all"
                                      ? net::SnifferConfig::Filter::kAll
                                      : net::SnifferConfig::Filter::kRoceOnly;
    }
    cfg.engine.sniffer.omit_payload = s.value("omit_payload", false);
  }

  if (root.contains("dlrm")) {
    const json& d = root["dlrm"];
    if (d.contains("dense")) cfg.dlrm.dense_count = d["dense"].get<uint32_t>();
    if (d.contains("sparse")) cfg.dlrm.sparse_count = d["sparse"].get<uint32_t>();
    if (d.contains("default_modulus")) cfg.dlrm.default_modulus = d["default_modulus"].get<uint32_t>();
    if (d.contains("moduli")) cfg.dlrm.moduli = d["moduli"].get<std::vector<uint32_t>>();
    if (!cfg.dlrm.valid()) return std::string("config: invalid dlrm parameters");
  }

  if (root.contains("services")) {
    const json& s = root["services"];
    if (s.contains("default_chain"))
      cfg.default_chain = s["default_chain"].get<std::vector<std::string>>();
    if (s.contains("aes_key")) cfg.aes_key_hex = s["aes_key"].get<std::string>();
    if (s.contains("dpi_threshold")) cfg.dpi_threshold = s["dpi_threshold"].get<double>();
  }

  if (root.contains("link_profiles")) {
    for (auto& [name, j] : root["link_profiles"].items()) {
      net::LinkConfig link = cfg.link_profiles.count(name) ? cfg.link_profiles[name]
                                                           : net::LinkConfig{};
      parse_link(j, &link);
      if (!link.valid()) return std::string("config: invalid link profile " + name);
      cfg.link_profiles[name] = link;
    }
  }

  if (!cfg.aes_key_hex.empty()) {
    auto key = from_hex(cfg.aes_key_hex);
    if (!key || key->size() != 16) return std::string("config: aes_key must be 32 hex chars");
  }
  return cfg;
}

Result<AppConfig, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::string("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

}  // namespace uroce
