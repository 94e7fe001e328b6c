#pragma once

#include <vector>

#include "mcs/channel.hpp"
#include "mcs/queueing.hpp"
#include "mcs/types.hpp"

namespace mcs {

// Diagnostic error for iterative solvers that fail to reach tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::vector<double> spans)
      : std::runtime_error(what), span_history(std::move(spans)) {}
  std::vector<double> span_history;
};

// Deliverable units for one user under each fading combination, assuming
// the user is scheduled (s = 1) and the given pattern is in force:
// a finite list of (units, probability). Requires a discrete channel.
using ServiceDist = std::vector<std::pair<long long, double>>;

ServiceDist user_service_dist(const SystemConfig& cfg,
                              const ChannelModel& channel,
                              const IciPattern& pattern, int flat_user,
                              bool include_bandwidth_in_bits = true,
                              long long combo_cap = 1LL << 20);

// Learned post-decision value vector of one user, indexed by the queue
// state left right after service. Initialized strictly increasing.
struct PerUserValueTable {
  std::vector<double> v;  // size buffer+1
  int ref_state = 0;      // normalization state
  int ref_pattern = 0;    // catalog index of the reference pattern

  static PerUserValueTable init(int buffer_size, int ref_pattern,
                                double slope = 0.01);
  double max_abs() const;
};

// Learned per-user relative Q-factor over (pre-decision queue, pattern).
struct PerUserQTable {
  int buffer_size = 0;
  int num_patterns = 0;
  std::vector<double> q;  // (buffer+1) x num_patterns, row-major
  int ref_state = 0;
  int ref_pattern = 0;

  static PerUserQTable init(int buffer_size, int num_patterns,
                            int ref_pattern);
  double& at(int qi, int p) { return q[qi * num_patterns + p]; }
  double at(int qi, int p) const { return q[qi * num_patterns + p]; }
  // min over patterns, ties to the lowest catalog index.
  double row_min(int qi) const;
  double max_abs() const;
};

// Robbins-Monro step sizes gamma(n) = a / (b + n). PerVisit counts
// per-cell updates instead of global slots.
struct StepSizeSchedule {
  enum class Mode { GlobalSlot, PerVisit };
  double a = 1.0;
  double b = 2.0;
  Mode mode = Mode::GlobalSlot;

  double gamma(long long n) const { return a / (b + static_cast<double>(n)); }
};

// One stochastic step of the post-decision value iteration, applied only
// when the realized pattern is the user's reference pattern:
//   v(q~) += gamma * [ beta f(Q) + v((Q - u)^+) - v(ref) - v(q~) ]
// with Q = min(q~ + a, buffer) the pre-decision state the observation
// produced. Returns true when an update was applied.
bool update_value(PerUserValueTable& table, const CostModel& cost,
                  int flat_user, long long post_queue, long long arrived,
                  long long served_units, int realized_pattern, double gamma);

// One stochastic step of the relative Q-factor update for the realized
// (queue, pattern) cell:
//   qf(q,p) += gamma * [ beta f(q) - qf(ref) - qf(q,p)
//                        + min_p' qf(min((q-u)^+ + a, buffer), p') ]
void update_qfactor(PerUserQTable& table, const CostModel& cost, int flat_user,
                    long long pre_queue, int realized_pattern,
                    long long arrived, long long served_units, double gamma);

// Direct solution of the per-user post-decision fixed point
//   v + v(ref) e = g~ + P v
// on the queue grid, where P is the expected transition kernel under the
// reference pattern with the user always scheduled, and
// g~(q~) = E_A[beta f(min(q~ + A, buffer))]. This is the limit the online
// value iterate approaches; it is computed by an independent linear
// solve, not by running the update rule.
PerUserValueTable solve_value_fixed_point(const SystemConfig& cfg,
                                          const ChannelModel& channel,
                                          const ArrivalModel& arrivals,
                                          const PatternSet& patterns,
                                          int flat_user,
                                          bool include_bandwidth_in_bits = true);

// Max-abs residual of the fixed-point equation at a given table.
double value_fixed_point_residual(const PerUserValueTable& table,
                                  const SystemConfig& cfg,
                                  const ChannelModel& channel,
                                  const ArrivalModel& arrivals,
                                  const PatternSet& patterns, int flat_user,
                                  bool include_bandwidth_in_bits = true);

// Direct solution of the per-user Q-factor fixed point
//   qf(q,p) = beta f(q) - qf(ref) + sum_q' P_p(q,q') min_p' qf(q',p')
// by relative Q-value iteration to span tolerance. The min makes the
// system nonlinear, hence the iterative solve.
PerUserQTable solve_qfactor_fixed_point(const SystemConfig& cfg,
                                        const ChannelModel& channel,
                                        const ArrivalModel& arrivals,
                                        const PatternSet& patterns,
                                        int flat_user,
                                        bool include_bandwidth_in_bits = true,
                                        double tol = 1e-9,
                                        long long max_iters = 200000);

double qfactor_fixed_point_residual(const PerUserQTable& table,
                                    const SystemConfig& cfg,
                                    const ChannelModel& channel,
                                    const ArrivalModel& arrivals,
                                    const PatternSet& patterns, int flat_user,
                                    bool include_bandwidth_in_bits = true);

// Running mean / second moment of update-noise samples
// Z = observed_target - expected_target.
struct NoiseDiagnostics {
  long long count = 0;
  double sum = 0;
  double sum_sq = 0;

  double mean() const { return count ? sum / count : 0.0; }
  double second_moment() const { return count ? sum_sq / count : 0.0; }
  double variance() const {
    double m = mean();
    return second_moment() - m * m;
  }
};

void record_noise(NoiseDiagnostics& diag, double observed_target,
                  double expected_target);

// Kernel expectations of the stochastic update targets at a frozen
// table; these are what the noise samples are measured against.
double expected_value_target(const PerUserValueTable& table,
                             const CostModel& cost, int flat_user,
                             const ServiceDist& service,
                             const std::vector<std::pair<long long, double>>&
                                 arrival_support,
                             long long post_queue);

double expected_qfactor_target(const PerUserQTable& table,
                               const CostModel& cost, int flat_user,
                               const ServiceDist& service,
                               const std::vector<std::pair<long long, double>>&
                                   arrival_support,
                               long long pre_queue);

// The stochastic targets themselves, for one observed (arrival, service)
// draw. Kept here so tests and the simulator share one definition.
double observed_value_target(const PerUserValueTable& table,
                             const CostModel& cost, int flat_user,
                             long long post_queue, long long arrived,
                             long long served_units);

double observed_qfactor_target(const PerUserQTable& table,
                               const CostModel& cost, int flat_user,
                               long long pre_queue, long long arrived,
                               long long served_units);

}  // namespace mcs
