#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcs/learner.hpp"
#include "mcs/sim.hpp"

namespace mcs {

// Mixed-radix indexing over global queue vectors: user 0 is the least
// significant digit, each digit in 0..buffer.
struct QsiIndexer {
  int num_users = 0;
  int buffer_size = 0;

  long long num_states() const;
  long long index_of(const std::vector<long long>& q) const;
  std::vector<long long> decode(long long index) const;
};

// Converged relative value function over the global queue space, with
// the reference state (all-empty) pinned to zero.
struct CentralValueTable {
  QsiIndexer indexer;
  std::vector<double> v;
  double theta = 0;  // average cost per slot

  // Nondecreasing along every single-coordinate increment (hence over
  // the whole componentwise order).
  bool is_monotone() const;
};

// Extracted stationary policy: pattern from the queue state alone,
// schedule from (queue state, fading state).
struct CentralPolicy {
  QsiIndexer indexer;
  std::vector<int> pattern_of;  // catalog index per queue state
  // Selected user per (queue state, csi state, bs); -1 for none. Present
  // only when the instance is small enough to materialize.
  bool has_schedule_table = false;
  long long num_csi_states = 0;
  int num_bs = 0;
  std::vector<std::int8_t> schedule_of;

  int scheduled_user(long long q_index, long long h_index, int bs) const {
    return schedule_of[(q_index * num_csi_states + h_index) * num_bs + bs];
  }
};

struct OracleStats {
  long long iterations = 0;
  double final_span = 0;
  std::vector<double> span_history;
};

struct OracleResult {
  CentralValueTable value;
  CentralPolicy policy;
  OracleStats stats;
};

// Every global fading state of a discrete channel, with probabilities.
// Throws UnsupportedInstance beyond `cap` states or for continuous
// models.
std::vector<std::pair<CsiState, double>> enumerate_csi_states(
    const ChannelModel& channel, const GridDims& dims, long long cap = 1 << 20);

// One evaluation of the minimization on the right-hand side of the
// queue-state Bellman recursion: stage cost plus the expectation over
// fading and arrivals of the optimal pattern/schedule choice.
struct BellmanRhs {
  double value = 0;
  int best_pattern = 0;
  // Joint schedule per enumerated fading state under the best pattern.
  std::vector<ScheduleAction> best_schedules;
};

BellmanRhs bellman_rhs(const std::vector<long long>& q,
                       const std::vector<double>& value_table,
                       const RunModels& models);

struct OracleOptions {
  double tol = 1e-9;
  long long max_iters = 100000;
  // Refuse instances with more than this many (queue, fading) pairs.
  long long max_state_pairs = 2000000;
  bool materialize_schedule = true;
  int threads = 0;  // 0 = hardware concurrency
};

// Relative value iteration on the queue-state chain:
//   V_{l+1}(Q) = T(V_l, Q) - T(V_l, Q_ref),  Q_ref = all-empty,
// stopping when the span of successive differences drops below tol.
OracleResult relative_value_iteration(const RunModels& models,
                                      const OracleOptions& opts = {});

// The extracted policy as a simulator policy (pattern lookup by queue
// index; schedule lookup by fading index, or recomputed on the fly).
class OraclePolicy : public Policy {
 public:
  OraclePolicy(const RunModels& models, const OracleResult& result);

  int select_pattern_index(long long, const QsiState& q, RngStream&) override;
  ScheduleAction schedule(long long, const QsiState& q, const CsiState& csi,
                          const IciPattern& pattern,
                          const RateReport& candidates,
                          const std::vector<long long>& candidate_units,
                          RngStream&) override;

 private:
  long long csi_index_of(const CsiState& csi) const;

  RunModels models_;
  const OracleResult& result_;
  // Level lookup per link for mapping sampled gains back to indices.
  std::vector<std::vector<double>> link_levels_;
  std::vector<double> smoothed_;  // arrival-smoothed value table
};

// Finite-horizon policy evaluation: mean per-slot cost with a
// batch-means confidence interval. Thin wrapper over the simulator.
struct PolicyEvaluation {
  double avg_cost = 0;
  double ci_halfwidth = 0;
  MetricsRecord metrics;
};

PolicyEvaluation evaluate_policy(Policy& policy, const RunModels& models,
                                 long long horizon, long long warmup,
                                 std::uint64_t seed);

// Serialization of oracle results (documented in the README).
std::string oracle_result_to_json(const OracleResult& result,
                                  bool include_schedule_table = false);

// Arrival smoothing of a value table: W(q) = E_A[V(min(q + A, buffer))]
// componentwise, computed by one pass per user dimension. Shared by the
// solver and the policy adapter.
std::vector<double> smooth_over_arrivals(const std::vector<double>& value,
                                         const QsiIndexer& indexer,
                                         const ArrivalModel& arrivals);

}  // namespace mcs
