#include <cmath>

#include "doctest.h"
#include "mcs/queueing.hpp"
#include "test_helpers.hpp"

using namespace mcs;

TEST_CASE("queue step: service, arrival, clamp and drop") {
  GridDims dims{1, 1};

  SUBCASE("ordinary slot") {
    QsiState q(dims, 3, {3});
    const auto out = step_queues(q, {2}, {1});
    CHECK(out.post[0] == 1);
    CHECK(out.next.at_flat(0) == 2);
    CHECK(out.dropped[0] == 0);
    CHECK(out.served[0] == 2);
  }
  SUBCASE("buffer-full drop") {
    QsiState q(dims, 3, {3});
    const auto out = step_queues(q, {0}, {5});
    CHECK(out.post[0] == 3);
    CHECK(out.next.at_flat(0) == 3);
    CHECK(out.dropped[0] == 5);
  }
  SUBCASE("over-service clamps at zero") {
    QsiState q(dims, 3, {1});
    const auto out = step_queues(q, {4}, {0});
    CHECK(out.post[0] == 0);
    CHECK(out.next.at_flat(0) == 0);
    CHECK(out.served[0] == 1);
  }
}

TEST_CASE("per-slot conservation holds for random traffic") {
  GridDims dims{2, 2};
  RngStream rng(41, 0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<long long> qv(4), u(4), a(4);
    for (int i = 0; i < 4; ++i) {
      qv[i] = static_cast<long long>(rng.below(4));
      u[i] = static_cast<long long>(rng.below(4));
      a[i] = static_cast<long long>(rng.below(4));
    }
    QsiState q(dims, 3, qv);
    const auto out = step_queues(q, u, a);
    for (int i = 0; i < 4; ++i) {
      CHECK(out.next.at_flat(i) ==
            qv[i] - std::min(u[i], qv[i]) + a[i] - out.dropped[i]);
      CHECK(out.next.at_flat(i) >= 0);
      CHECK(out.next.at_flat(i) <= 3);
      if (out.dropped[i] > 0) CHECK(out.post[i] + a[i] > 3);
    }
  }
}

TEST_CASE("arrival sampling: deterministic, silent and Poisson means") {
  GridDims dims{1, 2};
  RngStream rng(43, 2);

  ArrivalModel det;
  det.kind = ArrivalModel::Kind::Deterministic;
  det.size = 1;
  for (int t = 0; t < 10; ++t) {
    const auto a = sample_arrivals(det, dims, rng);
    CHECK(a == std::vector<long long>{1, 1});
  }

  ArrivalModel off;
  off.kind = ArrivalModel::Kind::Bernoulli;
  off.rate = {0.0, 0.0};
  for (int t = 0; t < 10; ++t) {
    const auto a = sample_arrivals(off, dims, rng);
    CHECK(a == std::vector<long long>{0, 0});
  }

  ArrivalModel poisson;
  poisson.kind = ArrivalModel::Kind::PoissonPackets;
  poisson.rate = {1.0, 1.0};
  poisson.mean_packet_bits = 5e6;
  double sum = 0;
  const int slots = 100000;
  for (int t = 0; t < slots; ++t) {
    const auto a = sample_arrivals(poisson, dims, rng);
    sum += static_cast<double>(a[0]);
  }
  CHECK(std::abs(sum / slots - 1.0) < 0.02);
}

TEST_CASE("arrival support matches the configured distributions") {
  ArrivalModel bern;
  bern.kind = ArrivalModel::Kind::Bernoulli;
  bern.rate = {0.3};
  const auto sup = bern.support(0);
  REQUIRE(sup.size() == 2);
  CHECK(sup[0].first == 0);
  CHECK(sup[0].second == doctest::Approx(0.7));
  CHECK(sup[1].first == 1);
  CHECK(sup[1].second == doctest::Approx(0.3));

  ArrivalModel poisson;
  poisson.kind = ArrivalModel::Kind::PoissonPackets;
  poisson.rate = {1.0};
  poisson.mean_packet_bits = 1.0;
  CHECK_THROWS_AS(poisson.support(0), UnsupportedInstance);
}

TEST_CASE("joint transition frequency factors into fading and arrivals") {
  // On the always-scheduled single-cell chain the next fading state and
  // this slot's arrivals must be independent; tally their joint counts
  // and run a chi-square independence test (1 dof, 1% critical 6.63).
  auto m = mcs_test::single_cell_models(2, 0.3, 1.0);
  m.channel.base.levels = {{3.0, 0.5}, {1.0, 0.5}};
  RngStream csi_rng(47, 1), arr_rng(47, 2);
  long long counts[2][2] = {{0, 0}, {0, 0}};
  const int slots = 20000;
  auto level_of = [](double g) { return g == 3.0 ? 0 : 1; };
  CsiState csi = sample_csi(m.channel, m.cfg.dims, csi_rng);
  for (int t = 0; t < slots; ++t) {
    const auto a = sample_arrivals(m.arrivals, m.cfg.dims, arr_rng);
    const CsiState next_csi = sample_csi(m.channel, m.cfg.dims, csi_rng);
    counts[level_of(next_csi.raw()[0])][a[0]] += 1;
    csi = next_csi;
  }
  double row[2] = {0, 0}, col[2] = {0, 0};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      row[i] += counts[i][j];
      col[j] += counts[i][j];
    }
  double chi2 = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double expect = row[i] * col[j] / slots;
      chi2 += (counts[i][j] - expect) * (counts[i][j] - expect) / expect;
    }
  CHECK(chi2 < 6.63);
}

TEST_CASE("packet buffers: whole packets leave, partial progress carries") {
  GridDims dims{1, 1};
  PacketBuffers buf(dims, 3);
  buf.push_arrivals(0, {100.0, 50.0, 80.0});
  CHECK(buf.queue_len(0) == 3);

  // 120 bits: completes the 100-bit head, eats 20 bits of the next.
  CHECK(buf.packets_served(0, 120) == 1);
  CHECK(buf.commit_service(0, 120) == 1);
  CHECK(buf.queue_len(0) == 2);
  // Remaining head is 30 bits now.
  CHECK(buf.packets_served(0, 30) == 1);
  CHECK(buf.packets_served(0, 29) == 0);

  // Buffer cap drops excess arrivals.
  CHECK(buf.push_arrivals(0, {10.0, 10.0, 10.0}) == 2);
  CHECK(buf.queue_len(0) == 3);
}
