#include "mcs/types.hpp"

#include <algorithm>
#include <set>

namespace mcs {

void CostModel::validate(const GridDims& dims) const {
  const int n = dims.num_users();
  if (static_cast<int>(beta.size()) != n)
    throw ConfigError("cost weights must have one entry per user");
  for (double b : beta)
    if (!(b > 0)) throw ConfigError("cost weights must be positive");
  if (kind == CostKind::NormalizedQueue) {
    if (static_cast<int>(lambda.size()) != n)
      throw ConfigError("normalized-queue cost needs per-user arrival rates");
    for (double l : lambda)
      if (!(l > 0))
        throw ConfigError(
            "normalized-queue cost undefined for zero arrival rate");
  }
  if (buffer_size < 1) throw ConfigError("buffer size must be >= 1");
}

QsiState::QsiState(GridDims dims, int buffer_size, long long fill)
    : dims_(dims), buffer_size_(buffer_size), q_(dims.num_users(), fill) {
  if (fill < 0 || fill > buffer_size)
    throw std::out_of_range("queue fill outside [0, buffer_size]");
}

QsiState::QsiState(GridDims dims, int buffer_size, std::vector<long long> q)
    : dims_(dims), buffer_size_(buffer_size), q_(std::move(q)) {
  if (static_cast<int>(q_.size()) != dims.num_users())
    throw std::out_of_range("queue vector has wrong size");
  for (long long v : q_)
    if (v < 0 || v > buffer_size)
      throw std::out_of_range("queue length outside [0, buffer_size]");
}

void QsiState::set_flat(int i, long long v) {
  if (v < 0 || v > buffer_size_)
    throw std::out_of_range("queue length outside [0, buffer_size]");
  q_[i] = v;
}

CsiState::CsiState(GridDims dims, std::vector<double> h)
    : dims_(dims), h_(std::move(h)) {
  if (static_cast<int>(h_.size()) != dims.num_bs * dims.num_users())
    throw std::out_of_range("fading vector has wrong size");
  for (double g : h_)
    if (!(g >= 0)) throw std::out_of_range("fading gains must be >= 0");
}

int IciPattern::num_active() const {
  int n = 0;
  for (auto a : active) n += a ? 1 : 0;
  return n;
}

std::string IciPattern::to_string() const {
  std::string s;
  s.reserve(active.size());
  for (auto a : active) s.push_back(a ? '1' : '0');
  return s;
}

PatternSet::PatternSet(std::vector<IciPattern> patterns)
    : patterns_(std::move(patterns)) {
  if (patterns_.empty()) throw ConfigError("pattern catalog is empty");
  const size_t num_bs = patterns_[0].active.size();
  for (const auto& p : patterns_) {
    if (p.active.size() != num_bs)
      throw ConfigError("pattern length mismatch in catalog");
    if (p.num_active() == 0)
      throw ConfigError("catalog patterns must activate at least one BS");
  }
  std::sort(patterns_.begin(), patterns_.end());
  for (size_t i = 1; i < patterns_.size(); ++i)
    if (patterns_[i] == patterns_[i - 1])
      throw ConfigError("duplicate pattern in catalog");
  activating_.resize(num_bs);
  for (size_t m = 0; m < num_bs; ++m)
    for (int i = 0; i < size(); ++i)
      if (patterns_[i].activates(static_cast<int>(m)))
        activating_[m].push_back(i);
}

PatternSet PatternSet::all_nonempty(int num_bs) {
  std::vector<IciPattern> list;
  const int total = 1 << num_bs;
  for (int mask = 1; mask < total; ++mask) {
    IciPattern p;
    p.active.resize(num_bs);
    for (int m = 0; m < num_bs; ++m) p.active[m] = (mask >> m) & 1;
    list.push_back(std::move(p));
  }
  return PatternSet(std::move(list));
}

int PatternSet::reference_pattern(int m) const {
  const auto& cand = activating_[m];
  if (cand.empty())
    throw ConfigError("no catalog pattern activates BS " + std::to_string(m));
  int best = cand[0];
  for (int i : cand)
    if (patterns_[i].num_active() < patterns_[best].num_active()) best = i;
  return best;
}

int PatternSet::index_of(const IciPattern& p) const {
  for (int i = 0; i < size(); ++i)
    if (patterns_[i] == p) return i;
  return -1;
}

void SystemConfig::validate() const {
  if (dims.num_bs < 1 || dims.users_per_bs < 1)
    throw ConfigError("need at least one BS and one user per BS");
  if (!(slot_seconds > 0)) throw ConfigError("slot length must be positive");
  if (!(bandwidth_hz > 0)) throw ConfigError("bandwidth must be positive");
  if (!(noise_psd > 0)) throw ConfigError("noise PSD must be positive");
  if (!(coding_gap > 0) || coding_gap > 1)
    throw ConfigError("coding gap must lie in (0, 1]");
  if (static_cast<int>(max_power_w.size()) != dims.num_bs)
    throw ConfigError("need one max power per BS");
  for (double p : max_power_w)
    if (!(p > 0)) throw ConfigError("BS power must be positive");
  if (static_cast<int>(path_loss.size()) != dims.num_bs * dims.num_users())
    throw ConfigError("path loss matrix has wrong size");
  for (double l : path_loss)
    if (!(l >= 0)) throw ConfigError("path loss gains must be >= 0");
  if (buffer_size < 1) throw ConfigError("buffer size must be >= 1");
  cost.validate(dims);
}

double per_slot_cost(const QsiState& q, const CostModel& cost) {
  if (cost.kind == CostKind::NormalizedQueue)
    for (double l : cost.lambda)
      if (!(l > 0))
        throw ConfigError(
            "normalized-queue cost undefined for zero arrival rate");
  double g = 0;
  for (int i = 0; i < q.dims().num_users(); ++i)
    g += cost.user_cost(i, q.at_flat(i));
  return g;
}

std::vector<std::string> validate_action(const IciPattern& p,
                                         const ScheduleAction& s,
                                         const QsiState& q) {
  std::vector<std::string> violations;
  const auto& dims = s.dims();
  for (int m = 0; m < dims.num_bs; ++m) {
    const int k = s.selected_user(m);
    if (k < 0) continue;
    if (k >= dims.users_per_bs) {
      violations.push_back("BS " + std::to_string(m) +
                           ": user index out of range");
      continue;
    }
    if (!p.activates(m))
      violations.push_back("BS " + std::to_string(m) +
                           ": schedules a user while inactive");
    if (q.at(m, k) == 0)
      violations.push_back("BS " + std::to_string(m) + ": schedules user " +
                           std::to_string(k) + " with empty queue");
  }
  return violations;
}

}  // namespace mcs
