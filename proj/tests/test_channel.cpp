#include <cmath>
#include <map>

#include "doctest.h"
#include "mcs/channel.hpp"
#include "test_helpers.hpp"

using namespace mcs;

TEST_CASE("degenerate single-level fading always yields that gain") {
  GridDims dims{2, 1};
  ChannelModel model;
  model.base.kind = LinkFading::Kind::DiscreteLevels;
  model.base.levels = {{0.7, 1.0}};
  RngStream rng(3, 1);
  const CsiState csi = sample_csi(model, dims, rng);
  for (double g : csi.raw()) CHECK(g == doctest::Approx(0.7));
}

TEST_CASE("two-level fading on a 2x2 grid spans 256 global states") {
  auto m = mcs_test::two_cell_models();
  const auto count = csi_state_count(m.channel, m.cfg.dims);
  REQUIRE(count.has_value());
  CHECK(*count == 256);  // 2^(M*M*K) links, two levels each

  // Monte-Carlo: states appear essentially uniformly.
  RngStream rng(11, 1);
  std::map<std::vector<double>, int> seen;
  const int draws = 256 * 200;
  for (int i = 0; i < draws; ++i)
    seen[sample_csi(m.channel, m.cfg.dims, rng).raw()] += 1;
  CHECK(seen.size() == 256);
  for (const auto& [state, n] : seen)
    CHECK(std::abs(n / static_cast<double>(draws) - 1.0 / 256) < 0.002);
}

TEST_CASE("Rayleigh mean gain matches its configuration") {
  ChannelModel model;  // defaults to Rayleigh(1)
  GridDims dims{1, 1};
  RngStream rng(5, 1);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_csi(model, dims, rng).raw()[0];
  CHECK(std::abs(sum / n - 1.0) < 0.02);
}

TEST_CASE("rates: inactive BS, zero gain, and a hand-computed SINR") {
  auto m = mcs_test::two_cell_models();
  const auto& dims = m.cfg.dims;

  SUBCASE("users at an inactive BS get rate zero") {
    IciPattern p{{1, 0}};
    CsiState csi(dims, std::vector<double>(8, 1.0));
    const RateReport r = candidate_rates(m.cfg, csi, p);
    CHECK(r.rate_bps[dims.flat(1, 0)] == 0.0);
    CHECK(r.rate_bps[dims.flat(1, 1)] == 0.0);
    CHECK(r.rate_bps[dims.flat(0, 0)] > 0.0);
  }
  SUBCASE("zero own gain means zero rate") {
    IciPattern p{{1, 1}};
    std::vector<double> h(8, 1.0);
    h[0 * 4 + dims.flat(0, 0)] = 0.0;
    const RateReport r = candidate_rates(m.cfg, CsiState(dims, h), p);
    CHECK(r.rate_bps[dims.flat(0, 0)] == 0.0);
  }
  SUBCASE("own gain 3, cross gain 1, unit powers: rate log2(2.5)") {
    IciPattern p{{1, 1}};
    std::vector<double> h(8, 0.0);
    h[0 * 4 + dims.flat(0, 0)] = 3.0;  // own link
    h[1 * 4 + dims.flat(0, 0)] = 1.0;  // interferer
    const RateReport r = candidate_rates(m.cfg, CsiState(dims, h), p);
    CHECK(r.rate_bps[dims.flat(0, 0)] ==
          doctest::Approx(std::log2(2.5)).epsilon(1e-12));
    CHECK(r.signal_w[dims.flat(0, 0)] == doctest::Approx(3.0));
    CHECK(r.interference_noise_w[dims.flat(0, 0)] == doctest::Approx(2.0));
  }
}

TEST_CASE("activating an extra interferer never raises a rate") {
  auto m = mcs_test::two_cell_models();
  RngStream rng(17, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const CsiState csi = sample_csi(m.channel, m.cfg.dims, rng);
    const RateReport solo = candidate_rates(m.cfg, csi, IciPattern{{1, 0}});
    const RateReport both = candidate_rates(m.cfg, csi, IciPattern{{1, 1}});
    for (int k = 0; k < 2; ++k) {
      const int u = m.cfg.dims.flat(0, k);
      CHECK(both.rate_bps[u] <= solo.rate_bps[u] + 1e-12);
    }
  }
}

TEST_CASE("rate is nondecreasing in own gain") {
  auto m = mcs_test::two_cell_models();
  const auto& dims = m.cfg.dims;
  IciPattern p{{1, 1}};
  std::vector<double> h(8, 1.0);
  double prev = -1;
  for (double own = 0.0; own <= 8.0; own += 0.5) {
    h[0 * 4 + dims.flat(0, 0)] = own;
    const RateReport r = candidate_rates(m.cfg, CsiState(dims, h), p);
    CHECK(r.rate_bps[dims.flat(0, 0)] >= prev);
    prev = r.rate_bps[dims.flat(0, 0)];
  }
}

TEST_CASE("rate computation is pure: identical inputs, identical outputs") {
  auto m = mcs_test::two_cell_models();
  RngStream rng(23, 1);
  const CsiState csi = sample_csi(m.channel, m.cfg.dims, rng);
  IciPattern p{{1, 1}};
  const RateReport a = candidate_rates(m.cfg, csi, p);
  const RateReport b = candidate_rates(m.cfg, csi, p);
  CHECK(a.rate_bps == b.rate_bps);
  CHECK(a.bits == b.bits);
}

TEST_CASE("compute_rates masks to the schedule and rejects inactive BSs") {
  auto m = mcs_test::two_cell_models();
  const auto& dims = m.cfg.dims;
  RngStream rng(29, 1);
  const CsiState csi = sample_csi(m.channel, dims, rng);
  IciPattern p{{1, 0}};
  ScheduleAction s(dims);
  s.select(0, 1);
  const RateReport r = compute_rates(m.cfg, csi, p, s);
  CHECK(r.rate_bps[dims.flat(0, 0)] == 0.0);
  CHECK(r.rate_bps[dims.flat(0, 1)] > 0.0);

  ScheduleAction bad(dims);
  bad.select(1, 0);
  CHECK_THROWS_AS(compute_rates(m.cfg, csi, p, bad), std::invalid_argument);
}

TEST_CASE("deliverable bits floor the rate-time product") {
  auto m = mcs_test::two_cell_models();
  const auto& dims = m.cfg.dims;
  RngStream rng(31, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const CsiState csi = sample_csi(m.channel, dims, rng);
    const RateReport r = candidate_rates(m.cfg, csi, IciPattern{{1, 1}});
    for (int u = 0; u < 4; ++u)
      CHECK(r.bits[u] ==
            static_cast<long long>(
                std::floor(r.rate_bps[u] * m.cfg.slot_seconds)));
  }
}

TEST_CASE("path-loss helper converts dB to linear gain") {
  // 34.5 + 35 log10(100) = 104.5 dB
  CHECK(path_loss_gain_db(34.5, 35.0, 100.0) ==
        doctest::Approx(std::pow(10.0, -10.45)).epsilon(1e-12));
}
