#include "mcs/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace mcs {

std::vector<int> default_reuse_colors(int num_bs, int factor) {
  std::vector<int> colors(num_bs);
  if (factor == 3 && (num_bs == 7 || num_bs == 19)) {
    // Axial hex coordinates, center first then rings; color = (q+2r) mod 3
    // gives a proper coloring of the hex lattice.
    static const int axial7[7][2] = {{0, 0},  {1, 0},  {0, 1}, {-1, 1},
                                     {-1, 0}, {0, -1}, {1, -1}};
    static const int axial19[19][2] = {
        {0, 0},  {1, 0},   {0, 1},  {-1, 1}, {-1, 0}, {0, -1}, {1, -1},
        {2, 0},  {1, 1},   {0, 2},  {-1, 2}, {-2, 2}, {-2, 1}, {-2, 0},
        {-1, -1}, {0, -2}, {1, -2}, {2, -2}, {2, -1}};
    const int(*axial)[2] = num_bs == 7 ? axial7 : axial19;
    for (int i = 0; i < num_bs; ++i) {
      const int c = (axial[i][0] + 2 * axial[i][1]) % 3;
      colors[i] = (c + 3) % 3;
    }
    return colors;
  }
  for (int i = 0; i < num_bs; ++i) colors[i] = i % factor;
  return colors;
}

void ReusePlan::validate(int num_bs) const {
  if (factor < 1) throw ConfigError("reuse factor must be >= 1");
  if (static_cast<int>(colors.size()) != num_bs)
    throw ConfigError("reuse plan needs one color per BS");
  for (int c : colors)
    if (c < 0 || c >= factor)
      throw ConfigError("reuse color outside [0, factor)");
}

ScheduleAction csit_only_schedule(const QsiState& q,
                                  const RateReport& candidates) {
  const auto& dims = q.dims();
  ScheduleAction action(dims);
  for (int m = 0; m < dims.num_bs; ++m) {
    int best = 0;
    for (int k = 1; k < dims.users_per_bs; ++k)
      if (candidates.rate_bps[dims.flat(m, k)] >
          candidates.rate_bps[dims.flat(m, best)])
        best = k;
    action.select(m, best);
  }
  return action;
}

ScheduleAction backpressure_schedule(const QsiState& q,
                                     const RateReport& candidates) {
  const auto& dims = q.dims();
  ScheduleAction action(dims);
  for (int m = 0; m < dims.num_bs; ++m) {
    int best = 0;
    double best_w = static_cast<double>(q.at(m, 0)) *
                    candidates.rate_bps[dims.flat(m, 0)];
    for (int k = 1; k < dims.users_per_bs; ++k) {
      const double w = static_cast<double>(q.at(m, k)) *
                       candidates.rate_bps[dims.flat(m, k)];
      if (w > best_w) {
        best = k;
        best_w = w;
      }
    }
    action.select(m, best);
  }
  return action;
}

TimescaleDecompositionPolicy::TimescaleDecompositionPolicy(
    const RunModels& models, TimescaleParams params)
    : cfg_(models.cfg),
      patterns_(models.patterns),
      params_(params),
      avg_throughput_(models.cfg.dims.num_users(), 0.0),
      avg_rate_(models.patterns.size(),
                std::vector<double>(models.cfg.dims.num_users(), 0.0)) {}

double TimescaleDecompositionPolicy::utility_of(int pattern) const {
  const auto& dims = cfg_.dims;
  double total = 0;
  for (int m = 0; m < dims.num_bs; ++m) {
    if (!patterns_.at(pattern).activates(m)) continue;
    double best = 0;
    for (int k = 0; k < dims.users_per_bs; ++k) {
      const int u = dims.flat(m, k);
      const double r = avg_rate_[pattern][u];
      const double metric =
          params_.utility == TimescaleParams::Utility::SumRate
              ? r
              : r / (avg_throughput_[u] + 1e-9);
      best = std::max(best, metric);
    }
    total += best;
  }
  return total;
}

int TimescaleDecompositionPolicy::select_pattern_index(long long slot,
                                                       const QsiState&,
                                                       RngStream&) {
  if (slot % params_.slow_period == 0) {
    int best = 0;
    double best_u = utility_of(0);
    for (int p = 1; p < patterns_.size(); ++p) {
      const double u = utility_of(p);
      if (u > best_u) {
        best = p;
        best_u = u;
      }
    }
    pattern_ = best;
  }
  return pattern_;
}

ScheduleAction TimescaleDecompositionPolicy::schedule(
    long long, const QsiState& q, const CsiState&, const IciPattern& pattern,
    const RateReport& candidates, const std::vector<long long>&, RngStream&) {
  const auto& dims = cfg_.dims;
  ScheduleAction action(dims);
  for (int m = 0; m < dims.num_bs; ++m) {
    if (!pattern.activates(m)) continue;
    int best = 0;
    double best_metric = -1;
    for (int k = 0; k < dims.users_per_bs; ++k) {
      const int u = dims.flat(m, k);
      const double metric =
          candidates.rate_bps[u] / (avg_throughput_[u] + 1e-9);
      if (metric > best_metric) {
        best = k;
        best_metric = metric;
      }
    }
    action.select(m, best);
  }
  return action;
}

void TimescaleDecompositionPolicy::observe_slot(const SlotObservation& obs) {
  const double alpha = 1.0 / params_.window;
  for (int u = 0; u < cfg_.dims.num_users(); ++u)
    avg_throughput_[u] = (1 - alpha) * avg_throughput_[u] +
                         alpha * static_cast<double>(obs.outcome.served[u]);
  for (int p = 0; p < patterns_.size(); ++p) {
    const RateReport r = candidate_rates(cfg_, obs.csi, patterns_.at(p));
    for (int u = 0; u < cfg_.dims.num_users(); ++u)
      avg_rate_[p][u] = (1 - alpha) * avg_rate_[p][u] + alpha * r.rate_bps[u];
  }
}

}  // namespace mcs
