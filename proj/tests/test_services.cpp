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

#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "sim_fixture.hpp"
#include "uroce/svc/aes_service.hpp"
#include "uroce/svc/dlrm_service.hpp"
#include "uroce/svc/dpi.hpp"

using namespace uroce;
using namespace uroce::testing;

namespace {

const char* kTestKeyHex = "000102030405060708090a0b0c0d0e0f";

SimPair::Options svc_options(uint64_t seed) {
  SimPair::Options opt;
  opt.link_ab = lossless_link(seed);
  opt.link_ba = lossless_link(seed + 1);
  return opt;
}

void register_all_services(Engine& e, const kernels::DlrmParams& dlrm, double dpi_threshold) {
  Engine* ep = &e;
  e.services().add(std::make_shared<svc::AesEcbService>(
      [ep](uint32_t qpn) { return ep->aes_schedule(qpn); }));
  e.services().add(std::make_shared<svc::DlrmPreprocService>(dlrm));
  e.services().add(
      std::make_shared<svc::DpiService>(std::make_shared<svc::RuleBasedClassifier>(dpi_threshold)));
}

Bytes random_records(size_t n_records, const kernels::DlrmParams& p, uint64_t seed) {
  Bytes stream = pattern_bytes(n_records * p.record_bytes(), seed);
  return stream;
}

}  // namespace

TEST_CASE("registry: unknown service and expansion rejection") {
  svc::ServiceRegistry reg;
  auto missing = reg.bind(1, {"no-such-service"});
  REQUIRE(!missing.ok());
  CHECK(missing.error() == svc::BindError::kUnknownService);

  class Expander : public svc::OnPathService {
   public:
    const std::string& name() const override { return name_; }
    svc::ServiceDirection direction() const override { return svc::ServiceDirection::kRx; }
    double expansion_factor() const override { return 2.0; }
    bool transform(uint32_t, svc::ServiceDirection, uint64_t, uint8_t*, size_t) override {
      return true;
    }

   private:
    std::string name_ = "expander";
  };
  reg.add(std::make_shared<Expander>());
  auto rejected = reg.bind(1, {"expander"});
  REQUIRE(!rejected.ok());
  CHECK(rejected.error() == svc::BindError::kExpansionRejected);

  CHECK(reg.chain_for(1) == nullptr);  // nothing bound
}

TEST_CASE("empty chain is byte-equivalent to no binding") {
  SimPair sim(svc_options(31));
  REQUIRE(sim.eb().bind_services(sim.hb().qpn(), {}).ok());

  Bytes data = pattern_bytes(4096, 1);
  std::memcpy(sim.ha().buffer(), data.data(), data.size());
  REQUIRE(sim.ha().invoke(WorkKind::kRemoteWrite, SgEntry{4096, 0, 0}).ok());
  REQUIRE(sim.run_until(
      [&] { return sim.hb().check_completed(CompletionKind::kLocalWrite) == 1; }));
  CHECK(std::memcmp(sim.hb().buffer(), data.data(), data.size()) == 0);
}

TEST_CASE("aes service: end-to-end write decrypts to the original, wire is ciphertext") {
  auto opt = svc_options(32);
  opt.cfg_a.aes_key_hex = kTestKeyHex;
  opt.cfg_b.aes_key_hex = kTestKeyHex;
  opt.chain_a = {"aes-ecb"};
  opt.chain_b = {"aes-ecb"};
  opt.cfg_b.engine.sniffer_enabled = true;
  opt.cfg_b.engine.sniffer.direction = net::SnifferConfig::Direction::kRx;
  opt.cfg_b.engine.sniffer.output_path = "/tmp/uroce_aes_wire.pcap";
  // Services must exist before chains bind; construct unconnected first.
  auto chains_a = opt.chain_a;
  auto chains_b = opt.chain_b;
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), {}, 0.9);
  register_all_services(sim.eb(), {}, 0.9);
  sim.connect(chains_a, chains_b);

  Bytes plain = pattern_bytes(16 * 1024, 2);
  std::memcpy(sim.ha().buffer(), plain.data(), plain.size());
  REQUIRE(sim.ha().invoke(WorkKind::kRemoteWrite, SgEntry{16 * 1024, 0, 0}).ok());
  REQUIRE(sim.run_until(
      [&] { return sim.hb().check_completed(CompletionKind::kLocalWrite) == 1; }));
  CHECK(std::memcmp(sim.hb().buffer(), plain.data(), plain.size()) == 0);

  sim.eb().sniffer().disable();
  auto capture = net::pcap_read_file("/tmp/uroce_aes_wire.pcap");
  REQUIRE(capture.ok());
  bool saw_payload = false;
  for (const auto& rec : capture.value().packets) {
    auto p = wire::parse_packet(rec.data);
    REQUIRE(p.ok());
    if (p.value().payload.empty()) continue;
    saw_payload = true;
    // On-the-wire bytes are ciphertext, never the plaintext chunk.
    CHECK(std::memcmp(p.value().payload.data(), plain.data(), 16) != 0);
  }
  CHECK(saw_payload);
  std::remove("/tmp/uroce_aes_wire.pcap");
}

TEST_CASE("aes service: non-block-multiple lengths are refused at the API") {
  auto opt = svc_options(33);
  opt.cfg_a.aes_key_hex = kTestKeyHex;
  opt.cfg_b.aes_key_hex = kTestKeyHex;
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), {}, 0.9);
  register_all_services(sim.eb(), {}, 0.9);
  auto pair =
      api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {"aes-ecb"}, {"aes-ecb"});
  REQUIRE(pair.ok());
  auto ha = pair.value().first;

  auto bad = ha.invoke(WorkKind::kRemoteWrite, SgEntry{100, 0, 0});
  REQUIRE(!bad.ok());
  CHECK(bad.error() == SubmitError::kBadLength);
  CHECK(ha.invoke(WorkKind::kRemoteWrite, SgEntry{112, 0, 0}).ok());
}

TEST_CASE("dpi: executable magic flags once per message, data still delivered") {
  auto opt = svc_options(34);
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), {}, 0.9);
  register_all_services(sim.eb(), {}, 0.9);
  auto pair = api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {}, {"dpi"});
  REQUIRE(pair.ok());
  auto ha = pair.value().first;
  auto hb = pair.value().second;

  std::vector<MaliciousEvent> events;
  REQUIRE(hb.on_malicious([&](const MaliciousEvent& ev) { events.push_back(ev); }).ok());

  // Multi-packet message starting with the ELF magic.
  Bytes evil = pattern_bytes(12 * 1024, 3);
  evil[0] = 0x7f;
  evil[1] = 'E';
  evil[2] = 'L';
  evil[3] = 'F';
  std::memcpy(ha.buffer(), evil.data(), evil.size());
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite, SgEntry{12 * 1024, 0, 0}).ok());
  REQUIRE(sim.run_until([&] { return hb.check_completed(CompletionKind::kLocalWrite) == 1; }));

  REQUIRE(events.size() == 1);  // exactly once per message
  CHECK(events[0].length == 12 * 1024);
  CHECK(events[0].score == 1.0);
  CHECK(std::memcmp(hb.buffer(), evil.data(), evil.size()) == 0);  // flag-and-deliver

  // Clean ASCII traffic produces no callbacks.
  std::string csv = "user,item,score\n";
  Bytes clean;
  while (clean.size() < 8192) clean.insert(clean.end(), csv.begin(), csv.end());
  clean.resize(8192);
  std::memcpy(ha.buffer(), clean.data(), clean.size());
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite, SgEntry{8192, 0, 0}).ok());
  REQUIRE(sim.run_until([&] { return hb.check_completed(CompletionKind::kLocalWrite) == 2; }));
  CHECK(events.size() == 1);

  auto completions = hb.drain_completions();
  REQUIRE(completions.size() == 2);
  CHECK(completions[0].malicious);
  CHECK(!completions[1].malicious);
}

TEST_CASE("dpi: callback exceptions are isolated") {
  auto opt = svc_options(35);
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), {}, 0.9);
  register_all_services(sim.eb(), {}, 0.9);
  auto pair = api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {}, {"dpi"});
  REQUIRE(pair.ok());
  auto ha = pair.value().first;
  auto hb = pair.value().second;
  REQUIRE(hb.on_malicious([&](const MaliciousEvent&) -> void {
    throw std::runtime_error("handler bug");
  }).ok());

  Bytes evil(64, 0);
  evil[0] = 'M';
  evil[1] = 'Z';
  std::memcpy(ha.buffer(), evil.data(), evil.size());
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite, SgEntry{64, 0, 0}).ok());
  REQUIRE(sim.run_until([&] { return hb.check_completed(CompletionKind::kLocalWrite) == 1; }));
  CHECK(sim.eb().stats().callback_exceptions == 1);
  // Engine still functional afterwards.
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite, SgEntry{64, 0, 0}).ok());
  REQUIRE(sim.run_until([&] { return hb.check_completed(CompletionKind::kLocalWrite) == 2; }));
}

TEST_CASE("dpi non-interference: identical bytes and completion counts with inspection on/off") {
  auto run_with = [&](bool with_dpi, uint64_t seed) {
    auto opt = svc_options(seed);
    opt.connect = false;
    SimPair sim(opt);
    register_all_services(sim.ea(), {}, 0.9);
    register_all_services(sim.eb(), {}, 0.9);
    std::vector<std::string> chain = with_dpi ? std::vector<std::string>{"dpi"}
                                              : std::vector<std::string>{};
    auto pair = api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {}, chain);
    REQUIRE(pair.ok());
    auto ha = pair.value().first;
    auto hb = pair.value().second;
    for (int i = 0; i < 10; ++i) {
      Bytes data = pattern_bytes(3000 + i * 500, 100 + i);
      std::memcpy(ha.buffer(), data.data(), data.size());
      REQUIRE(ha.invoke(WorkKind::kRemoteWrite,
                        SgEntry{static_cast<uint32_t>(data.size()), 0,
                                static_cast<uint64_t>(i) * 8192})
                  .ok());
    }
    REQUIRE(sim.run_until(
        [&] { return hb.check_completed(CompletionKind::kLocalWrite) == 10; }));
    return std::make_pair(fnv1a({hb.buffer(), hb.buffer_size()}),
                          hb.check_completed(CompletionKind::kLocalWrite));
  };
  auto off = run_with(false, 77);
  auto on = run_with(true, 77);
  CHECK(off.first == on.first);
  CHECK(off.second == on.second);
}

TEST_CASE("dlrm service: packet-spanning records equal the offline oracle") {
  kernels::DlrmParams params;
  params.moduli.assign(26, 1u << 20);

  auto opt = svc_options(36);
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), params, 0.9);
  register_all_services(sim.eb(), params, 0.9);
  auto pair =
      api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {}, {"dlrm-preproc"});
  REQUIRE(pair.ok());
  auto ha = pair.value().first;
  auto hb = pair.value().second;

  // 100 records = 15600 bytes: crosses three MTU boundaries mid-record.
  Bytes stream = random_records(100, params, 4);
  Bytes expected = dlrm_oracle(stream, params.dense_count, params.sparse_count, params.moduli,
                               params.default_modulus);
  std::memcpy(ha.buffer(), stream.data(), stream.size());
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite,
                    SgEntry{static_cast<uint32_t>(stream.size()), 0, 0})
              .ok());
  REQUIRE(sim.run_until([&] { return hb.check_completed(CompletionKind::kLocalWrite) == 1; }));
  CHECK(std::memcmp(hb.buffer(), expected.data(), expected.size()) == 0);

  // A stream that is not a whole number of records is refused with a NAK.
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite, SgEntry{200, 0, 0}).ok());
  REQUIRE(sim.run_until(
      [&] { return ha.check_completed(CompletionKind::kRemoteWrite) == 2; }));
  auto completions = ha.drain_completions();
  REQUIRE(completions.size() == 2);
  CHECK(completions[1].status == CompletionStatus::kNak);
}

TEST_CASE("dlrm offline pipeline errors") {
  kernels::DlrmParams params;
  auto misaligned = svc::dlrm_pipeline(Bytes(100, 0), params);
  REQUIRE(!misaligned.ok());
  CHECK(misaligned.error() == svc::DlrmError::kMisalignedStream);

  kernels::DlrmParams zero = params;
  zero.default_modulus = 0;
  auto bad = svc::dlrm_pipeline(Bytes(params.record_bytes(), 0), zero);
  REQUIRE(!bad.ok());
  CHECK(bad.error() == svc::DlrmError::kZeroModulus);
  CHECK_THROWS_AS(svc::DlrmPreprocService{zero}, std::invalid_argument);
}

TEST_CASE("chain order: decrypt before preprocess reproduces the plaintext oracle") {
  kernels::DlrmParams params;
  auto key_raw = *from_hex(kTestKeyHex);

  auto opt = svc_options(37);
  opt.cfg_a.aes_key_hex = kTestKeyHex;
  opt.cfg_b.aes_key_hex = kTestKeyHex;
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), params, 0.9);
  register_all_services(sim.eb(), params, 0.9);
  // TX side encrypts; RX side decrypts then preprocesses.
  auto pair = api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {"aes-ecb"},
                                {"aes-ecb", "dlrm-preproc"});
  REQUIRE(pair.ok());
  auto ha = pair.value().first;
  auto hb = pair.value().second;

  // 52 records = 8112 bytes (multiple of 16 for the cipher).
  Bytes stream = random_records(52, params, 9);
  REQUIRE(stream.size() % 16 == 0);
  Bytes expected = dlrm_oracle(stream, params.dense_count, params.sparse_count, params.moduli,
                               params.default_modulus);
  std::memcpy(ha.buffer(), stream.data(), stream.size());
  REQUIRE(ha.invoke(WorkKind::kRemoteWrite,
                    SgEntry{static_cast<uint32_t>(stream.size()), 0, 0})
              .ok());
  REQUIRE(sim.run_until([&] { return hb.check_completed(CompletionKind::kLocalWrite) == 1; }));
  CHECK(std::memcmp(hb.buffer(), expected.data(), expected.size()) == 0);
}

TEST_CASE("two QPs with different chains process interleaved traffic independently") {
  kernels::DlrmParams params;
  auto opt = svc_options(38);
  opt.connect = false;
  SimPair sim(opt);
  register_all_services(sim.ea(), params, 0.9);
  register_all_services(sim.eb(), params, 0.9);
  auto plain = api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {}, {});
  auto preproc =
      api::connect_pair(sim.node_a(), sim.node_b(), 1 << 20, 1 << 20, {}, {"dlrm-preproc"});
  REQUIRE(plain.ok());
  REQUIRE(preproc.ok());
  auto ha1 = plain.value().first, hb1 = plain.value().second;
  auto ha2 = preproc.value().first, hb2 = preproc.value().second;

  Bytes stream = random_records(26, params, 10);  // 4056 bytes
  Bytes expected = dlrm_oracle(stream, params.dense_count, params.sparse_count, params.moduli,
                               params.default_modulus);
  std::memcpy(ha1.buffer(), stream.data(), stream.size());
  std::memcpy(ha2.buffer(), stream.data(), stream.size());
  REQUIRE(ha1.invoke(WorkKind::kRemoteWrite, SgEntry{4056, 0, 0}).ok());
  REQUIRE(ha2.invoke(WorkKind::kRemoteWrite, SgEntry{4056, 0, 0}).ok());
  REQUIRE(sim.run_until([&] {
    return hb1.check_completed(CompletionKind::kLocalWrite) == 1 &&
           hb2.check_completed(CompletionKind::kLocalWrite) == 1;
  }));
  CHECK(std::memcmp(hb1.buffer(), stream.data(), stream.size()) == 0);    // untouched
  CHECK(std::memcmp(hb2.buffer(), expected.data(), expected.size()) == 0);  // transformed
}

TEST_CASE("delivery routing: direct device path never touches the host buffer") {
  SimPair sim(svc_options(39));
  sim.eb().add_sink("gpu0", 1 << 20, /*device=*/true);

  SUBCASE("direct") {
    REQUIRE(sim.eb().set_delivery_route(sim.hb().qpn(), "gpu0", /*staged=*/false).ok());
    Bytes data = pattern_bytes(8192, 5);
    std::memcpy(sim.ha().buffer(), data.data(), data.size());
    REQUIRE(sim.ha().invoke(WorkKind::kRemoteWrite, SgEntry{8192, 0, 0}).ok());
    REQUIRE(sim.run_until(
        [&] { return sim.hb().check_completed(CompletionKind::kLocalWrite) == 1; }));
    CHECK(std::memcmp(sim.eb().sink("gpu0")->bytes().data(), data.data(), data.size()) == 0);
    CHECK(sim.eb().stats().host_writes == 0);
    CHECK(sim.eb().stats().staging_copies == 0);
    CHECK(sim.eb().stats().device_writes == 2);  // one per packet
  }

  SUBCASE("staged") {
    REQUIRE(sim.eb().set_delivery_route(sim.hb().qpn(), "gpu0", /*staged=*/true).ok());
    Bytes data = pattern_bytes(8192, 6);
    std::memcpy(sim.ha().buffer(), data.data(), data.size());
    REQUIRE(sim.ha().invoke(WorkKind::kRemoteWrite, SgEntry{8192, 0, 0}).ok());
    REQUIRE(sim.run_until(
        [&] { return sim.hb().check_completed(CompletionKind::kLocalWrite) == 1; }));
    CHECK(std::memcmp(sim.eb().sink("gpu0")->bytes().data(), data.data(), data.size()) == 0);
    CHECK(sim.eb().stats().host_writes == 2);      // staging buffer
    CHECK(sim.eb().stats().staging_copies == 2);   // explicit copy per delivery
  }

  SUBCASE("unknown sink") {
    auto bad = sim.eb().set_delivery_route(sim.hb().qpn(), "gpu9", false);
    REQUIRE(!bad.ok());
    CHECK(bad.error() == Engine::RouteError::kUnknownSink);
  }
}

TEST_CASE("scatter delivery splits one packet across two sub-ranges") {
  SimPair sim(svc_options(40));
  // First 100 bytes land at 0x100, the next 156 at 0x4000, remainder natural.
  sim.eb().set_rx_scatter(sim.hb().qpn(), {{0x100, 100}, {0x4000, 156}});

  Bytes data = pattern_bytes(256, 7);
  std::memcpy(sim.ha().buffer(), data.data(), data.size());
  REQUIRE(sim.ha().invoke(WorkKind::kRemoteWrite, SgEntry{256, 0, 0}).ok());
  REQUIRE(sim.run_until(
      [&] { return sim.hb().check_completed(CompletionKind::kLocalWrite) == 1; }));
  CHECK(std::memcmp(sim.hb().buffer() + 0x100, data.data(), 100) == 0);
  CHECK(std::memcmp(sim.hb().buffer() + 0x4000, data.data() + 100, 156) == 0);
}
