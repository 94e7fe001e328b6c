#pragma once

#include <vector>

#include "mcs/learner.hpp"
#include "mcs/sim.hpp"
#include "mcs/types.hpp"

namespace mcs {

// Contiguous partition of the per-user queue range 0..buffer into
// regions; a BS-level region id is the tuple of its users' region ids.
struct QsiRegionPartition {
  std::vector<int> starts;  // region lower bounds, starts[0] == 0
  int buffer_size = 0;

  // Near-equal contiguous blocks; with buffer 9 and 4 regions this gives
  // {0,1,2} {3,4,5} {6,7} {8,9}.
  static QsiRegionPartition uniform(int buffer_size, int regions);
  static QsiRegionPartition from_starts(int buffer_size,
                                        std::vector<int> starts);
  // Degenerate partition with one region per queue level, used as the
  // no-aggregation control when measuring signaling overhead.
  static QsiRegionPartition singleton(int buffer_size);

  int num_regions() const { return static_cast<int>(starts.size()); }
  int region_of(long long q) const;
  void validate() const;
};

// Pattern-indexed per-BS Q-information cached at the controller, plus
// the region-change bookkeeping that gates refresh messages.
struct BscQInfo {
  std::vector<std::vector<double>> cache;        // [bs][pattern]
  std::vector<std::vector<int>> last_region;     // [bs][user], empty until first refresh
  std::vector<long long> messages;               // per BS

  static BscQInfo init(int num_bs, int num_patterns);
};

// Refreshes BS m's cached row from its users' Q-tables when (and only
// when) the BS-level region id changed; returns whether a message was
// sent. `force` is used for the slot-0 initialization.
bool refresh_qinfo(BscQInfo& info, int m, const QsiState& q,
                   const QsiRegionPartition& partition,
                   const std::vector<PerUserQTable>& qtables,
                   bool force = false);

// argmin_p sum_m cache[m][p]; ties to the lowest catalog index.
int select_pattern(const BscQInfo& info, const PatternSet& patterns);

// delta_{m,k} = v(q) - v((q - u)^+): the value drop one slot of service
// would buy. Zero for empty queues by construction.
struct DeltaReport {
  std::vector<double> delta;        // per flat user
  std::vector<long long> units;     // candidate service used
};

DeltaReport compute_deltas(const std::vector<PerUserValueTable>& vtables,
                           const QsiState& q,
                           const std::vector<long long>& candidate_units);

// Corollary-style scheduling: each active BS serves its largest-delta
// user among those with backlog; nobody when every queue is empty.
// Ties go to the lowest user index.
ScheduleAction schedule_users(const IciPattern& pattern,
                              const std::vector<PerUserValueTable>& vtables,
                              const QsiState& q,
                              const std::vector<long long>& candidate_units,
                              DeltaReport* out_deltas = nullptr);

struct ExplorationParams {
  enum class Mode { Off, Reference, UniformCatalog };
  Mode mode = Mode::Reference;
  double epsilon0 = 0.05;
  bool inv_sqrt_decay = true;

  double epsilon(long long slot) const;
};

struct ControllerParams {
  QsiRegionPartition partition;
  StepSizeSchedule step;
  ExplorationParams exploration;
  double init_value_slope = 0.01;
};

// The online two-timescale controller: region-gated Q-information and
// pattern selection at the controller each slot, delta-rule scheduling
// at each active BS, and the per-user value / Q-factor updates applied
// from purely local observations afterwards.
class TwoTimescaleController : public Policy {
 public:
  TwoTimescaleController(const RunModels& models, ControllerParams params);

  int select_pattern_index(long long slot, const QsiState& q,
                           RngStream& policy_rng) override;
  ScheduleAction schedule(long long slot, const QsiState& q,
                          const CsiState& csi, const IciPattern& pattern,
                          const RateReport& candidates,
                          const std::vector<long long>& candidate_units,
                          RngStream& policy_rng) override;
  void observe_slot(const SlotObservation& obs) override;

  long long bsc_messages() const override;
  std::vector<long long> bsc_messages_per_bs() const override {
    return bsc_.messages;
  }

  const std::vector<PerUserValueTable>& value_tables() const { return vtab_; }
  const std::vector<PerUserQTable>& qfactor_tables() const { return qtab_; }
  const BscQInfo& bsc_info() const { return bsc_; }

 private:
  double value_gamma(int flat_user, int cell);
  double qfactor_gamma(int flat_user, int cell);

  const SystemConfig cfg_;
  const PatternSet patterns_;
  ControllerParams params_;
  std::vector<PerUserValueTable> vtab_;
  std::vector<PerUserQTable> qtab_;
  BscQInfo bsc_;
  long long slot_ = 0;
  // Per-cell visit counters for the per-visit step-size mode.
  std::vector<std::vector<long long>> value_visits_;
  std::vector<std::vector<long long>> qfactor_visits_;
  // Previous slot's post-decision state and arrivals, consumed by the
  // value update one slot later when the reference pattern recurs.
  std::vector<long long> prev_post_;
  std::vector<long long> prev_arrived_;
  bool have_prev_ = false;
};

}  // namespace mcs
