#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcs {

// Thrown for invalid configuration files or inconsistent model setups.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an operation requires a finite/discrete instance but the
// configured models are continuous or too large.
class UnsupportedInstance : public std::runtime_error {
 public:
  explicit UnsupportedInstance(const std::string& what)
      : std::runtime_error(what) {}
};

// Cell grid: M base stations, K users each. User (m,k) has flat index
// m*K + k; that flat index is the canonical ordering everywhere.
struct GridDims {
  int num_bs = 0;
  int users_per_bs = 0;

  int num_users() const { return num_bs * users_per_bs; }
  int flat(int m, int k) const { return m * users_per_bs + k; }
  int bs_of(int flat_idx) const { return flat_idx / users_per_bs; }
  int user_of(int flat_idx) const { return flat_idx % users_per_bs; }
  bool operator==(const GridDims&) const = default;
};

enum class QueueUnit { Bits, Packets };

enum class CostKind { NormalizedQueue, OverflowIndicator };

// Per-slot cost model: g(Q) = sum_{m,k} beta_{m,k} * f(Q_{m,k}).
// NormalizedQueue: f(q) = q / lambda (Little's-law delay proxy).
// OverflowIndicator: f(q) = 1{q >= buffer_size} (drop-probability proxy).
struct CostModel {
  CostKind kind = CostKind::NormalizedQueue;
  std::vector<double> beta;    // per flat user, > 0
  std::vector<double> lambda;  // per flat user; used by NormalizedQueue
  int buffer_size = 0;

  double f(int flat_user, long long q) const {
    if (kind == CostKind::NormalizedQueue)
      return static_cast<double>(q) / lambda[flat_user];
    return q >= buffer_size ? 1.0 : 0.0;
  }
  double user_cost(int flat_user, long long q) const {
    return beta[flat_user] * f(flat_user, q);
  }
  void validate(const GridDims& dims) const;
};

// Global queue state, one integer per user, in queue units (bits or
// packets depending on the configured mode). Bounds-checked on build.
class QsiState {
 public:
  QsiState() = default;
  QsiState(GridDims dims, int buffer_size, long long fill = 0);
  QsiState(GridDims dims, int buffer_size, std::vector<long long> q);

  long long at(int m, int k) const { return q_[dims_.flat(m, k)]; }
  long long at_flat(int i) const { return q_[i]; }
  void set_flat(int i, long long v);

  const std::vector<long long>& raw() const { return q_; }
  const GridDims& dims() const { return dims_; }
  int buffer_size() const { return buffer_size_; }
  bool operator==(const QsiState&) const = default;

 private:
  GridDims dims_;
  int buffer_size_ = 0;
  std::vector<long long> q_;
};

// Global fading state: h(n -> user (m,k)) is the small-scale power gain
// of the link from BS n to user (m,k). Nonnegative.
class CsiState {
 public:
  CsiState() = default;
  CsiState(GridDims dims, std::vector<double> h);

  double gain(int from_bs, int flat_user) const {
    return h_[from_bs * dims_.num_users() + flat_user];
  }
  const std::vector<double>& raw() const { return h_; }
  const GridDims& dims() const { return dims_; }
  bool operator==(const CsiState&) const = default;

 private:
  GridDims dims_;
  std::vector<double> h_;  // size num_bs * num_users
};

// Interference management pattern: which BSs transmit this slot.
struct IciPattern {
  std::vector<std::uint8_t> active;  // one flag per BS

  bool activates(int m) const { return active[m] != 0; }
  int num_active() const;
  bool operator==(const IciPattern&) const = default;
  // Lexicographic on the activity vector; canonical catalog order.
  bool operator<(const IciPattern& o) const { return active < o.active; }
  std::string to_string() const;
};

// Ordered catalog of admissible patterns. Patterns are sorted into the
// canonical lexicographic order and must be unique and nonempty.
class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(std::vector<IciPattern> patterns);

  // All 2^M - 1 nonempty on/off combinations.
  static PatternSet all_nonempty(int num_bs);

  int size() const { return static_cast<int>(patterns_.size()); }
  const IciPattern& at(int i) const { return patterns_[i]; }
  const std::vector<IciPattern>& patterns() const { return patterns_; }

  // Indices of patterns that activate BS m.
  const std::vector<int>& activating(int m) const { return activating_[m]; }

  // Reference pattern for BS m: fewest active BSs among those that
  // activate m, ties by catalog (lexicographic) index.
  int reference_pattern(int m) const;

  int index_of(const IciPattern& p) const;  // -1 if absent

 private:
  std::vector<IciPattern> patterns_;
  std::vector<std::vector<int>> activating_;  // per BS
};

// Per-slot scheduling decision: at most one user per BS, stored as the
// selected user index (-1 for none) so the one-user rule holds by
// construction.
class ScheduleAction {
 public:
  ScheduleAction() = default;
  explicit ScheduleAction(GridDims dims)
      : dims_(dims), user_of_bs_(dims.num_bs, -1) {}

  void select(int m, int k) { user_of_bs_[m] = k; }
  void clear(int m) { user_of_bs_[m] = -1; }
  int selected_user(int m) const { return user_of_bs_[m]; }
  bool scheduled(int m, int k) const { return user_of_bs_[m] == k; }

  const GridDims& dims() const { return dims_; }
  bool operator==(const ScheduleAction&) const = default;

 private:
  GridDims dims_;
  std::vector<int> user_of_bs_;
};

// Full physical-layer configuration of one instance.
struct SystemConfig {
  GridDims dims;
  double slot_seconds = 0;
  double bandwidth_hz = 0;
  double noise_psd = 0;    // W/Hz
  double coding_gap = 1;   // xi in (0, 1]
  std::vector<double> max_power_w;  // per BS
  // path_loss[n * num_users + flat_user]: linear gain BS n -> user.
  std::vector<double> path_loss;
  int buffer_size = 0;  // queue units
  QueueUnit unit = QueueUnit::Bits;
  CostModel cost;

  double loss(int from_bs, int flat_user) const {
    return path_loss[from_bs * dims.num_users() + flat_user];
  }
  void validate() const;
};

// g(Q) = sum beta * f(q). Throws ConfigError when NormalizedQueue is
// configured with a zero arrival rate.
double per_slot_cost(const QsiState& q, const CostModel& cost);

// Diagnostic check of a (pattern, schedule) pair against the queue
// state: inactive-BS scheduling, multi-user scheduling (impossible by
// representation but checked for completeness), and empty-queue
// scheduling are reported, not thrown.
std::vector<std::string> validate_action(const IciPattern& p,
                                         const ScheduleAction& s,
                                         const QsiState& q);

}  // namespace mcs
