#include "mcs/control.hpp"

#include <algorithm>
#include <cmath>

namespace mcs {

QsiRegionPartition QsiRegionPartition::uniform(int buffer_size, int regions) {
  const int levels = buffer_size + 1;
  regions = std::min(regions, levels);
  std::vector<int> starts;
  const int base = levels / regions;
  const int extra = levels % regions;
  int at = 0;
  for (int r = 0; r < regions; ++r) {
    starts.push_back(at);
    at += base + (r < extra ? 1 : 0);
  }
  return from_starts(buffer_size, std::move(starts));
}

QsiRegionPartition QsiRegionPartition::from_starts(int buffer_size,
                                                   std::vector<int> starts) {
  QsiRegionPartition p;
  p.buffer_size = buffer_size;
  p.starts = std::move(starts);
  p.validate();
  return p;
}

QsiRegionPartition QsiRegionPartition::singleton(int buffer_size) {
  std::vector<int> starts(buffer_size + 1);
  for (int i = 0; i <= buffer_size; ++i) starts[i] = i;
  return from_starts(buffer_size, std::move(starts));
}

int QsiRegionPartition::region_of(long long q) const {
  int r = 0;
  while (r + 1 < num_regions() && q >= starts[r + 1]) ++r;
  return r;
}

void QsiRegionPartition::validate() const {
  if (starts.empty() || starts[0] != 0)
    throw ConfigError("region partition must start at 0");
  for (size_t i = 1; i < starts.size(); ++i)
    if (starts[i] <= starts[i - 1])
      throw ConfigError("region boundaries must be strictly increasing");
  if (starts.back() > buffer_size)
    throw ConfigError("region boundary exceeds buffer size");
}

BscQInfo BscQInfo::init(int num_bs, int num_patterns) {
  BscQInfo info;
  info.cache.assign(num_bs, std::vector<double>(num_patterns, 0.0));
  info.last_region.assign(num_bs, {});
  info.messages.assign(num_bs, 0);
  return info;
}

bool refresh_qinfo(BscQInfo& info, int m, const QsiState& q,
                   const QsiRegionPartition& partition,
                   const std::vector<PerUserQTable>& qtables, bool force) {
  const auto& dims = q.dims();
  std::vector<int> region(dims.users_per_bs);
  for (int k = 0; k < dims.users_per_bs; ++k)
    region[k] = partition.region_of(q.at(m, k));
  if (!force && info.last_region[m] == region) return false;

  auto& row = info.cache[m];
  std::fill(row.begin(), row.end(), 0.0);
  for (int k = 0; k < dims.users_per_bs; ++k) {
    const int u = dims.flat(m, k);
    const auto& tab = qtables[u];
    const int qi = static_cast<int>(q.at(m, k));
    for (int p = 0; p < tab.num_patterns; ++p) row[p] += tab.at(qi, p);
  }
  info.last_region[m] = std::move(region);
  info.messages[m] += 1;
  return true;
}

int select_pattern(const BscQInfo& info, const PatternSet& patterns) {
  if (patterns.size() == 0) throw ConfigError("empty pattern catalog");
  int best = 0;
  double best_sum = 0;
  for (int p = 0; p < patterns.size(); ++p) {
    double sum = 0;
    for (const auto& row : info.cache) sum += row[p];
    if (p == 0 || sum < best_sum) {
      best = p;
      best_sum = sum;
    }
  }
  return best;
}

DeltaReport compute_deltas(const std::vector<PerUserValueTable>& vtables,
                           const QsiState& q,
                           const std::vector<long long>& candidate_units) {
  const int n = q.dims().num_users();
  DeltaReport r;
  r.delta.resize(n);
  r.units = candidate_units;
  for (int u = 0; u < n; ++u) {
    const long long qu = q.at_flat(u);
    const long long after = std::max<long long>(qu - candidate_units[u], 0);
    r.delta[u] = vtables[u].v[qu] - vtables[u].v[after];
  }
  return r;
}

ScheduleAction schedule_users(const IciPattern& pattern,
                              const std::vector<PerUserValueTable>& vtables,
                              const QsiState& q,
                              const std::vector<long long>& candidate_units,
                              DeltaReport* out_deltas) {
  const auto& dims = q.dims();
  DeltaReport deltas = compute_deltas(vtables, q, candidate_units);
  ScheduleAction action(dims);
  for (int m = 0; m < dims.num_bs; ++m) {
    if (!pattern.activates(m)) continue;
    int best = -1;
    for (int k = 0; k < dims.users_per_bs; ++k) {
      if (q.at(m, k) == 0) continue;
      const int u = dims.flat(m, k);
      if (best < 0 || deltas.delta[u] > deltas.delta[dims.flat(m, best)])
        best = k;
    }
    if (best >= 0) action.select(m, best);
  }
  if (out_deltas) *out_deltas = std::move(deltas);
  return action;
}

double ExplorationParams::epsilon(long long slot) const {
  if (mode == Mode::Off) return 0;
  if (!inv_sqrt_decay) return epsilon0;
  return epsilon0 / std::sqrt(static_cast<double>(std::max<long long>(slot, 1)));
}

TwoTimescaleController::TwoTimescaleController(const RunModels& models,
                                               ControllerParams params)
    : cfg_(models.cfg), patterns_(models.patterns), params_(std::move(params)) {
  const int n = cfg_.dims.num_users();
  const int nq = cfg_.buffer_size;
  vtab_.reserve(n);
  qtab_.reserve(n);
  for (int u = 0; u < n; ++u) {
    const int ref = patterns_.reference_pattern(cfg_.dims.bs_of(u));
    vtab_.push_back(
        PerUserValueTable::init(nq, ref, params_.init_value_slope));
    qtab_.push_back(PerUserQTable::init(nq, patterns_.size(), ref));
  }
  bsc_ = BscQInfo::init(cfg_.dims.num_bs, patterns_.size());
  value_visits_.assign(n, std::vector<long long>(nq + 1, 0));
  qfactor_visits_.assign(n,
                         std::vector<long long>((nq + 1) * patterns_.size(), 0));
  prev_post_.assign(n, 0);
  prev_arrived_.assign(n, 0);
}

double TwoTimescaleController::value_gamma(int flat_user, int cell) {
  if (params_.step.mode == StepSizeSchedule::Mode::PerVisit)
    return params_.step.gamma(value_visits_[flat_user][cell]++);
  return params_.step.gamma(slot_);
}

double TwoTimescaleController::qfactor_gamma(int flat_user, int cell) {
  if (params_.step.mode == StepSizeSchedule::Mode::PerVisit)
    return params_.step.gamma(qfactor_visits_[flat_user][cell]++);
  return params_.step.gamma(slot_);
}

int TwoTimescaleController::select_pattern_index(long long slot,
                                                 const QsiState& q,
                                                 RngStream& policy_rng) {
  slot_ = slot;
  for (int m = 0; m < cfg_.dims.num_bs; ++m)
    refresh_qinfo(bsc_, m, q, params_.partition, qtab_, /*force=*/slot == 0);
  int idx = select_pattern(bsc_, patterns_);
  const double eps = params_.exploration.epsilon(slot);
  if (eps > 0 && policy_rng.bernoulli(eps)) {
    if (params_.exploration.mode == ExplorationParams::Mode::UniformCatalog) {
      idx = static_cast<int>(policy_rng.below(patterns_.size()));
    } else {
      const int m = static_cast<int>(policy_rng.below(cfg_.dims.num_bs));
      idx = patterns_.reference_pattern(m);
    }
  }
  return idx;
}

ScheduleAction TwoTimescaleController::schedule(
    long long, const QsiState& q, const CsiState&, const IciPattern& pattern,
    const RateReport&, const std::vector<long long>& candidate_units,
    RngStream&) {
  return schedule_users(pattern, vtab_, q, candidate_units);
}

void TwoTimescaleController::observe_slot(const SlotObservation& obs) {
  const int n = cfg_.dims.num_users();
  const int p = obs.pattern_index;
  for (int u = 0; u < n; ++u) {
    // Q-factor: realized (queue, pattern) cell, candidate service under
    // the realized pattern, arrivals revealed at slot end.
    const long long q_pre = obs.pre.at_flat(u);
    const int qcell = static_cast<int>(q_pre) * patterns_.size() + p;
    update_qfactor(qtab_[u], cfg_.cost, u, q_pre, p, obs.outcome.arrived[u],
                   obs.candidate_units[u], qfactor_gamma(u, qcell));

    // Value table: fires when the realized pattern is this user's
    // reference pattern. The updated cell is the previous slot's
    // post-decision state; this slot's candidate service completes the
    // sampled transition out of it.
    if (have_prev_ && p == vtab_[u].ref_pattern) {
      const int cell = static_cast<int>(prev_post_[u]);
      update_value(vtab_[u], cfg_.cost, u, prev_post_[u], prev_arrived_[u],
                   obs.candidate_units[u], p, value_gamma(u, cell));
    }
  }
  prev_post_ = obs.outcome.post;
  prev_arrived_ = obs.outcome.arrived;
  have_prev_ = true;
}

long long TwoTimescaleController::bsc_messages() const {
  long long total = 0;
  for (long long m : bsc_.messages) total += m;
  return total;
}

}  // namespace mcs
