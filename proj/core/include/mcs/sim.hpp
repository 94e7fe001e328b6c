#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mcs/channel.hpp"
#include "mcs/queueing.hpp"
#include "mcs/rng.hpp"
#include "mcs/types.hpp"

namespace mcs {

// Static frequency-reuse plan used by the reuse baselines.
struct ReusePlan {
  int factor = 3;
  std::vector<int> colors;  // one per BS, in [0, factor)

  void validate(int num_bs) const;
};

// Everything a policy may look at after one slot has been played out.
struct SlotObservation {
  long long slot;
  const QsiState& pre;           // queue state at slot start
  const CsiState& csi;
  int pattern_index;             // catalog index, -1 under a reuse plan
  const RateReport& candidates;  // per-user rates assuming s = 1
  // Deliverable queue units per user if scheduled (bits, or whole
  // packets in packets mode).
  const std::vector<long long>& candidate_units;
  const SlotOutcome& outcome;
};

// A per-slot controller. The engine owns physics and randomness; the
// policy owns decisions and any learning state.
class Policy {
 public:
  virtual ~Policy() = default;

  // Non-null for policies driven by static frequency reuse; the engine
  // then skips pattern selection and uses reuse channelization.
  virtual const ReusePlan* reuse_plan() const { return nullptr; }

  // Catalog index of the pattern to apply this slot; called once per
  // slot before CSI is revealed (the pattern may depend on QSI only).
  virtual int select_pattern_index(long long slot, const QsiState& q,
                                   RngStream& policy_rng) = 0;

  // Pick at most one user per active BS given this slot's candidates.
  virtual ScheduleAction schedule(long long slot, const QsiState& q,
                                  const CsiState& csi,
                                  const IciPattern& pattern,
                                  const RateReport& candidates,
                                  const std::vector<long long>& candidate_units,
                                  RngStream& policy_rng) = 0;

  virtual void observe_slot(const SlotObservation& obs) {}

  // Counters a policy wants surfaced in the metrics (BSC messages etc.).
  virtual long long bsc_messages() const { return 0; }
  virtual std::vector<long long> bsc_messages_per_bs() const { return {}; }
};

struct RunSpec {
  std::uint64_t seed = 1;
  long long horizon = 0;
  long long warmup = 0;  // slots excluded from averages
  std::vector<long long> checkpoint_slots;
  std::string policy_name = "unnamed";

  void validate() const;
};

// Aggregated statistics of one run. All averages exclude warmup;
// arrival/service/drop totals cover the full horizon so conservation is
// exact.
struct MetricsRecord {
  std::string policy;
  std::uint64_t seed = 0;
  long long horizon = 0;
  long long warmup = 0;
  int num_users = 0;
  int buffer_size = 0;

  // Per flat user.
  std::vector<double> mean_cost_f;   // mean f(q)
  std::vector<double> mean_queue;    // mean q
  std::vector<double> mean_delay;    // mean q / lambda
  std::vector<double> drop_prob;     // dropped / arrived, 0 when no arrivals
  std::vector<long long> arrived_total;
  std::vector<long long> served_total;
  std::vector<long long> dropped_total;
  std::vector<long long> final_queue;

  // Aggregates.
  double avg_cost = 0;             // mean per-slot g
  double avg_cost_ci = 0;          // batch-means 95% half-width
  double avg_delay_per_user = 0;   // mean over users of mean_delay
  double overall_drop_prob = 0;

  // Queue-length histogram over (post-warmup slots x users).
  std::vector<long long> queue_histogram;

  long long bsc_messages = 0;
  std::vector<long long> bsc_messages_by_bs;
  std::vector<long long> pattern_usage;  // per catalog index, post-warmup

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_rows(const std::string& run_label) const;
};

// The per-slot models one run draws from.
struct RunModels {
  SystemConfig cfg;
  ChannelModel channel;
  ArrivalModel arrivals;
  PatternSet patterns;
  // Deliverable-unit candidates follow the rate expression with the
  // bandwidth factor unless this is false.
  bool include_bandwidth_in_units = true;
};

using CheckpointFn =
    std::function<void(long long slot, const Policy& policy)>;

// Runs the slot loop: pattern selection, per-BS scheduling, transmission
// and queue step, then policy observation (learning), in that order.
// Deterministic given (spec, models, policy construction).
MetricsRecord run(const RunSpec& spec, const RunModels& models,
                  Policy& policy, const CheckpointFn& on_checkpoint = {});

// One grid point of a sweep. Models are built per replicate from the
// derived run seed so seed-dependent setup (user placement) is re-drawn.
struct SweepPoint {
  std::string label;
  double x = 0;  // numeric axis value for reports
  std::function<RunModels(std::uint64_t run_seed)> make_models;
};

struct SweepResult {
  std::string label;
  double x = 0;
  std::vector<MetricsRecord> replicates;
  double mean_delay = 0;
  double delay_ci = 0;  // 95% across replicates
  double mean_cost = 0;
  double mean_drop = 0;
};

// Runs `replicates` seeded runs per point (seeds derived from
// spec.seed, point index and replicate index via splitmix64) and
// aggregates. `make_policy` builds a fresh policy per run. Points run in
// parallel; results are ordered by grid position.
std::vector<SweepResult> sweep(
    const RunSpec& spec, const std::vector<SweepPoint>& grid, int replicates,
    const std::function<std::unique_ptr<Policy>(const RunModels&)>& make_policy,
    int threads = 0);

// Seed derivation shared by sweep() and the CLI, documented in README.
std::uint64_t derive_run_seed(std::uint64_t master, int point, int replicate);

}  // namespace mcs
