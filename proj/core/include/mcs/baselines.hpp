#pragma once

#include "mcs/sim.hpp"

namespace mcs {

// Proper 3-coloring of the hex layouts used here (center + rings); for
// other topologies callers supply explicit colors.
std::vector<int> default_reuse_colors(int num_bs, int factor = 3);

// Rate-greedy pick per BS, blind to queues: argmax_k rate, ties to the
// lowest user index. Selected users with empty buffers just deliver 0.
ScheduleAction csit_only_schedule(const QsiState& q,
                                  const RateReport& candidates);

// Max-weight pick per BS: argmax_k q * rate, ties to the lowest index.
ScheduleAction backpressure_schedule(const QsiState& q,
                                     const RateReport& candidates);

// CSIT-only user selection over a static reuse plan.
class CsitOnlyPolicy : public Policy {
 public:
  CsitOnlyPolicy(const RunModels& models, ReusePlan plan)
      : plan_(std::move(plan)) {
    plan_.validate(models.cfg.dims.num_bs);
  }
  const ReusePlan* reuse_plan() const override { return &plan_; }
  int select_pattern_index(long long, const QsiState&, RngStream&) override {
    return -1;
  }
  ScheduleAction schedule(long long, const QsiState& q, const CsiState&,
                          const IciPattern&, const RateReport& candidates,
                          const std::vector<long long>&, RngStream&) override {
    return csit_only_schedule(q, candidates);
  }

 private:
  ReusePlan plan_;
};

// Dynamic backpressure (max-weight) over a static reuse plan.
class BackpressurePolicy : public Policy {
 public:
  BackpressurePolicy(const RunModels& models, ReusePlan plan)
      : plan_(std::move(plan)) {
    plan_.validate(models.cfg.dims.num_bs);
  }
  const ReusePlan* reuse_plan() const override { return &plan_; }
  int select_pattern_index(long long, const QsiState&, RngStream&) override {
    return -1;
  }
  ScheduleAction schedule(long long, const QsiState& q, const CsiState&,
                          const IciPattern&, const RateReport& candidates,
                          const std::vector<long long>&, RngStream&) override {
    return backpressure_schedule(q, candidates);
  }

 private:
  ReusePlan plan_;
};

struct TimescaleParams {
  long long slow_period = 100;   // slots between pattern re-selection
  double window = 1000;          // averaging horizon (EWMA, slots)
  enum class Utility { ProportionalFair, SumRate };
  Utility utility = Utility::ProportionalFair;
};

// Slow-timescale pattern reuse with fast proportional-fair user
// selection: every slow_period slots the pattern maximizing a windowed
// network-utility estimate is adopted; within slots each active BS runs
// PF (rate over windowed throughput). Queue-blind apart from delivering
// at most the backlog.
class TimescaleDecompositionPolicy : public Policy {
 public:
  TimescaleDecompositionPolicy(const RunModels& models, TimescaleParams params);

  int select_pattern_index(long long slot, const QsiState& q,
                           RngStream& policy_rng) override;
  ScheduleAction schedule(long long slot, const QsiState& q,
                          const CsiState& csi, const IciPattern& pattern,
                          const RateReport& candidates,
                          const std::vector<long long>& candidate_units,
                          RngStream& policy_rng) override;
  void observe_slot(const SlotObservation& obs) override;

  int current_pattern() const { return pattern_; }

 private:
  double utility_of(int pattern) const;

  SystemConfig cfg_;
  ChannelModel channel_;
  PatternSet patterns_;
  TimescaleParams params_;
  int pattern_ = 0;
  // Windowed averages (EWMA with coefficient 1/window).
  std::vector<double> avg_throughput_;            // per flat user, units/slot
  std::vector<std::vector<double>> avg_rate_;     // [pattern][flat user]
};

}  // namespace mcs
