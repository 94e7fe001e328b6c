#include "doctest.h"
#include "mcs/rng.hpp"
#include "mcs/types.hpp"

using namespace mcs;

TEST_CASE("per-slot cost: zero queues cost nothing") {
  GridDims dims{1, 2};
  CostModel cost{CostKind::NormalizedQueue, {1.0, 5.0}, {0.5, 0.5}, 3};
  QsiState q(dims, 3, 0);
  CHECK(per_slot_cost(q, cost) == doctest::Approx(0.0));
}

TEST_CASE("per-slot cost: normalized queue with identity weights") {
  GridDims dims{1, 1};
  CostModel cost{CostKind::NormalizedQueue, {1.0}, {1.0}, 5};
  QsiState q(dims, 5, {3});
  CHECK(per_slot_cost(q, cost) == doctest::Approx(3.0));
}

TEST_CASE("per-slot cost: overflow indicator fires only at the buffer") {
  GridDims dims{1, 2};
  CostModel cost{CostKind::OverflowIndicator, {1.0, 2.0}, {}, 3};
  QsiState q(dims, 3, {3, 1});
  CHECK(per_slot_cost(q, cost) == doctest::Approx(1.0));
}

TEST_CASE("per-slot cost: zero arrival rate rejected for normalized queue") {
  GridDims dims{1, 1};
  CostModel cost{CostKind::NormalizedQueue, {1.0}, {0.0}, 3};
  CHECK_THROWS_AS(cost.validate(dims), ConfigError);
  QsiState q(dims, 3, {1});
  CHECK_THROWS_AS(per_slot_cost(q, cost), ConfigError);
}

TEST_CASE("per-slot cost is monotone in the queue vector") {
  GridDims dims{2, 2};
  RngStream rng(7, 0);
  for (int kind = 0; kind < 2; ++kind) {
    CostModel cost;
    cost.kind = kind == 0 ? CostKind::NormalizedQueue
                          : CostKind::OverflowIndicator;
    cost.beta = {1.0, 2.0, 0.5, 3.0};
    cost.lambda = {0.3, 0.7, 0.5, 0.9};
    cost.buffer_size = 4;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<long long> lo(4), hi(4);
      for (int i = 0; i < 4; ++i) {
        lo[i] = static_cast<long long>(rng.below(5));
        hi[i] = lo[i] + static_cast<long long>(rng.below(5 - lo[i]));
      }
      QsiState qlo(dims, 4, lo), qhi(dims, 4, hi);
      CHECK(per_slot_cost(qhi, cost) >= per_slot_cost(qlo, cost));
    }
  }
}

TEST_CASE("cost function f is nondecreasing over the queue grid") {
  CostModel cost{CostKind::OverflowIndicator, {1.0}, {}, 6};
  for (int q = 0; q < 6; ++q) CHECK(cost.f(0, q + 1) >= cost.f(0, q));
  CostModel norm{CostKind::NormalizedQueue, {1.0}, {0.4}, 6};
  for (int q = 0; q < 6; ++q) CHECK(norm.f(0, q + 1) >= norm.f(0, q));
}

TEST_CASE("pattern catalog: canonical order, uniqueness, activation sets") {
  PatternSet all = PatternSet::all_nonempty(3);
  CHECK(all.size() == 7);
  for (int i = 1; i < all.size(); ++i) CHECK(all.at(i - 1) < all.at(i));

  // Round trip: p activates m  <=>  p is listed under activating(m).
  for (int m = 0; m < 3; ++m) {
    std::vector<bool> listed(all.size(), false);
    for (int idx : all.activating(m)) listed[idx] = true;
    for (int i = 0; i < all.size(); ++i)
      CHECK(listed[i] == all.at(i).activates(m));
  }

  CHECK_THROWS_AS(PatternSet({IciPattern{{1, 0}}, IciPattern{{1, 0}}}),
                  ConfigError);
  CHECK_THROWS_AS(PatternSet({IciPattern{{0, 0}}}), ConfigError);
}

TEST_CASE("reference pattern: fewest active BSs, then lowest index") {
  PatternSet all = PatternSet::all_nonempty(3);
  for (int m = 0; m < 3; ++m) {
    const int ref = all.reference_pattern(m);
    CHECK(all.at(ref).activates(m));
    CHECK(all.at(ref).num_active() == 1);  // singletons exist in this catalog
  }
  // Without singletons the smallest containing pattern wins.
  PatternSet custom({IciPattern{{1, 1, 0}}, IciPattern{{1, 1, 1}}});
  CHECK(custom.at(custom.reference_pattern(2)).num_active() == 3);
  CHECK(custom.at(custom.reference_pattern(0)).num_active() == 2);
}

TEST_CASE("validate_action flags inactive-BS and empty-queue scheduling") {
  GridDims dims{2, 2};
  QsiState q(dims, 3, {1, 0, 2, 0});

  SUBCASE("all-off pattern with no schedule is fine") {
    IciPattern off{{0, 0}};
    ScheduleAction none(dims);
    CHECK(validate_action(off, none, q).empty());
  }
  SUBCASE("scheduling at an inactive BS is a violation") {
    IciPattern p{{1, 0}};
    ScheduleAction s(dims);
    s.select(1, 0);
    const auto v = validate_action(p, s, q);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("inactive") != std::string::npos);
  }
  SUBCASE("scheduling an empty queue is a violation") {
    IciPattern p{{1, 1}};
    ScheduleAction s(dims);
    s.select(0, 1);
    const auto v = validate_action(p, s, q);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("empty") != std::string::npos);
  }
  SUBCASE("one user per BS holds by construction") {
    ScheduleAction s(dims);
    s.select(0, 0);
    s.select(0, 1);  // overwrites, does not add
    CHECK(s.scheduled(0, 1));
    CHECK_FALSE(s.scheduled(0, 0));
  }
}

TEST_CASE("state types enforce their bounds") {
  GridDims dims{1, 2};
  CHECK_THROWS(QsiState(dims, 3, {4, 0}));
  CHECK_THROWS(QsiState(dims, 3, {-1, 0}));
  CHECK_THROWS(CsiState(dims, {1.0, -0.5}));
  QsiState q(dims, 3, {1, 2});
  CHECK_THROWS(q.set_flat(0, 9));
}
