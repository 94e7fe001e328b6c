#include "mcs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "json.hpp"

namespace mcs {

long long QsiIndexer::num_states() const {
  long long n = 1;
  for (int u = 0; u < num_users; ++u) n *= buffer_size + 1;
  return n;
}

long long QsiIndexer::index_of(const std::vector<long long>& q) const {
  long long idx = 0;
  for (int u = num_users - 1; u >= 0; --u) idx = idx * (buffer_size + 1) + q[u];
  return idx;
}

std::vector<long long> QsiIndexer::decode(long long index) const {
  std::vector<long long> q(num_users);
  for (int u = 0; u < num_users; ++u) {
    q[u] = index % (buffer_size + 1);
    index /= buffer_size + 1;
  }
  return q;
}

bool CentralValueTable::is_monotone() const {
  const int radix = indexer.buffer_size + 1;
  long long stride = 1;
  for (int u = 0; u < indexer.num_users; ++u) {
    for (long long idx = 0; idx < indexer.num_states(); ++idx) {
      const long long digit = (idx / stride) % radix;
      if (digit + 1 < radix && v[idx + stride] < v[idx] - 1e-9) return false;
    }
    stride *= radix;
  }
  return true;
}

std::vector<std::pair<CsiState, double>> enumerate_csi_states(
    const ChannelModel& channel, const GridDims& dims, long long cap) {
  if (!channel.discrete())
    throw UnsupportedInstance("cannot enumerate a continuous channel model");
  const int links = dims.num_bs * dims.num_users();
  long long total = 1;
  for (int l = 0; l < links; ++l) {
    const int n = l / dims.num_users();
    const int u = l % dims.num_users();
    total *= static_cast<long long>(channel.link(n, u).levels.size());
    if (total > cap)
      throw UnsupportedInstance("global fading state space exceeds cap");
  }
  std::vector<std::pair<CsiState, double>> out;
  out.reserve(total);
  std::vector<size_t> idx(links, 0);
  while (true) {
    std::vector<double> h(links);
    double prob = 1;
    for (int l = 0; l < links; ++l) {
      const int n = l / dims.num_users();
      const int u = l % dims.num_users();
      const auto& [gain, p] = channel.link(n, u).levels[idx[l]];
      h[l] = gain;
      prob *= p;
    }
    out.emplace_back(CsiState(dims, std::move(h)), prob);
    int d = 0;
    while (d < links) {
      const int n = d / dims.num_users();
      const int u = d % dims.num_users();
      if (++idx[d] < channel.link(n, u).levels.size()) break;
      idx[d] = 0;
      ++d;
    }
    if (d == links) break;
  }
  return out;
}

std::vector<double> smooth_over_arrivals(const std::vector<double>& value,
                                         const QsiIndexer& indexer,
                                         const ArrivalModel& arrivals) {
  const int radix = indexer.buffer_size + 1;
  std::vector<double> w = value;
  std::vector<double> prev;
  long long stride = 1;
  for (int u = 0; u < indexer.num_users; ++u) {
    const auto support = arrivals.support(u);
    prev = w;
    for (long long idx = 0; idx < indexer.num_states(); ++idx) {
      const long long digit = (idx / stride) % radix;
      double acc = 0;
      for (auto [a, pa] : support) {
        const long long clipped = std::min<long long>(digit + a, radix - 1);
        acc += pa * prev[idx + (clipped - digit) * stride];
      }
      w[idx] = acc;
    }
    stride *= radix;
  }
  return w;
}

namespace {

// Per-pattern precomputation: active BS list and the joint distribution
// of per-user deliverable bits (independent across users, so a product
// of per-user supports collapsed into explicit classes).
struct PatternClasses {
  std::vector<int> active_bs;
  std::vector<std::vector<long long>> units;  // [class][flat user]
  std::vector<double> prob;                   // per class
};

PatternClasses build_pattern_classes(const RunModels& models, int pattern_idx,
                                     long long class_cap) {
  const auto& cfg = models.cfg;
  const auto& pattern = models.patterns.at(pattern_idx);
  PatternClasses pc;
  for (int m = 0; m < cfg.dims.num_bs; ++m)
    if (pattern.activates(m)) pc.active_bs.push_back(m);

  std::vector<ServiceDist> per_user(cfg.dims.num_users());
  long long total = 1;
  for (int u = 0; u < cfg.dims.num_users(); ++u) {
    per_user[u] = user_service_dist(cfg, models.channel, pattern, u,
                                    /*include_bandwidth_in_bits=*/true);
    total *= static_cast<long long>(per_user[u].size());
    if (total > class_cap)
      throw UnsupportedInstance("joint service class count exceeds cap");
  }
  std::vector<size_t> idx(cfg.dims.num_users(), 0);
  while (true) {
    std::vector<long long> units(cfg.dims.num_users());
    double prob = 1;
    for (int u = 0; u < cfg.dims.num_users(); ++u) {
      units[u] = per_user[u][idx[u]].first;
      prob *= per_user[u][idx[u]].second;
    }
    pc.units.push_back(std::move(units));
    pc.prob.push_back(prob);
    size_t d = 0;
    while (d < idx.size() && ++idx[d] == per_user[d].size()) {
      idx[d] = 0;
      ++d;
    }
    if (d == idx.size()) break;
  }
  return pc;
}

// Minimum of the smoothed value over all joint schedule choices of the
// active BSs for one (queue state, service class). Options per BS are
// enumerated none-first so idle wins exact ties; users are tried in
// index order so the extracted action is deterministic.
double min_over_schedules(const std::vector<double>& w, long long base_idx,
                          const std::vector<long long>& q,
                          const std::vector<long long>& units,
                          const PatternClasses& pc, const GridDims& dims,
                          const std::vector<long long>& strides,
                          std::vector<int>* out_choice = nullptr) {
  const int nbs = static_cast<int>(pc.active_bs.size());
  double best = 0;
  std::vector<int> choice(nbs, -1), cur(nbs, -1);
  // Depth-first product over active BSs.
  struct Frame {
    int option;  // -1 none, k otherwise
  };
  std::vector<long long> deltas(nbs, 0);
  int depth = 0;
  std::vector<int> opt(nbs, -2);  // -2 marks "not yet started"
  bool first = true;
  while (depth >= 0) {
    if (depth == nbs) {
      long long idx = base_idx;
      for (int d = 0; d < nbs; ++d) idx += deltas[d];
      const double val = w[idx];
      if (first || val < best) {
        best = val;
        first = false;
        if (out_choice) choice = cur;
      }
      --depth;
      continue;
    }
    int& o = opt[depth];
    const int m = pc.active_bs[depth];
    ++o;  // advance option: -1 (none), then users 0..K-1
    if (o >= dims.users_per_bs) {
      o = -2;
      --depth;
      continue;
    }
    if (o == -1) {
      deltas[depth] = 0;
      cur[depth] = -1;
    } else {
      const int u = dims.flat(m, o);
      const long long after = std::max<long long>(q[u] - units[u], 0);
      deltas[depth] = (after - q[u]) * strides[u];
      cur[depth] = o;
    }
    ++depth;
  }
  if (out_choice) *out_choice = choice;
  return best;
}

std::vector<long long> make_strides(const QsiIndexer& indexer) {
  std::vector<long long> s(indexer.num_users);
  long long acc = 1;
  for (int u = 0; u < indexer.num_users; ++u) {
    s[u] = acc;
    acc *= indexer.buffer_size + 1;
  }
  return s;
}

}  // namespace

BellmanRhs bellman_rhs(const std::vector<long long>& q,
                       const std::vector<double>& value_table,
                       const RunModels& models) {
  const auto& cfg = models.cfg;
  if (!models.arrivals.discrete())
    throw UnsupportedInstance("Bellman evaluation needs discrete arrivals");
  QsiIndexer indexer{cfg.dims.num_users(), cfg.buffer_size};
  const auto strides = make_strides(indexer);
  const auto w = smooth_over_arrivals(value_table, indexer, models.arrivals);
  const auto csi_states = enumerate_csi_states(models.channel, cfg.dims);
  const long long base_idx = indexer.index_of(q);

  double stage = 0;
  for (int u = 0; u < cfg.dims.num_users(); ++u)
    stage += cfg.cost.user_cost(u, q[u]);

  BellmanRhs out;
  double best_val = 0;
  bool first = true;
  for (int p = 0; p < models.patterns.size(); ++p) {
    PatternClasses pc;
    for (int m = 0; m < cfg.dims.num_bs; ++m)
      if (models.patterns.at(p).activates(m)) pc.active_bs.push_back(m);
    double acc = 0;
    std::vector<ScheduleAction> schedules;
    schedules.reserve(csi_states.size());
    for (const auto& [csi, prob] : csi_states) {
      const RateReport cand = candidate_rates(cfg, csi, models.patterns.at(p));
      std::vector<long long> units(cand.bits.begin(), cand.bits.end());
      std::vector<int> choice;
      acc += prob * min_over_schedules(w, base_idx, q, units, pc, cfg.dims,
                                       strides, &choice);
      ScheduleAction action(cfg.dims);
      for (size_t d = 0; d < pc.active_bs.size(); ++d)
        if (choice[d] >= 0) action.select(pc.active_bs[d], choice[d]);
      schedules.push_back(std::move(action));
    }
    if (first || acc < best_val - 1e-15) {
      best_val = acc;
      out.best_pattern = p;
      out.best_schedules = std::move(schedules);
      first = false;
    }
  }
  out.value = stage + best_val;
  return out;
}

OracleResult relative_value_iteration(const RunModels& models,
                                      const OracleOptions& opts) {
  const auto& cfg = models.cfg;
  if (!models.arrivals.discrete())
    throw UnsupportedInstance("oracle needs finite arrival support");
  if (cfg.unit != QueueUnit::Bits)
    throw UnsupportedInstance("oracle runs on the bit queue grid");
  const auto csi_count = csi_state_count(models.channel, cfg.dims);
  if (!csi_count)
    throw UnsupportedInstance("oracle needs a discrete channel model");
  QsiIndexer indexer{cfg.dims.num_users(), cfg.buffer_size};
  const long long pairs = indexer.num_states() * *csi_count;
  if (pairs > opts.max_state_pairs)
    throw UnsupportedInstance(
        "instance has " + std::to_string(pairs) +
        " (queue, fading) pairs; the verification oracle refuses more than " +
        std::to_string(opts.max_state_pairs));

  const long long states = indexer.num_states();
  const auto strides = make_strides(indexer);
  std::vector<PatternClasses> classes;
  classes.reserve(models.patterns.size());
  for (int p = 0; p < models.patterns.size(); ++p)
    classes.push_back(build_pattern_classes(models, p, 1 << 20));

  std::vector<double> stage(states);
  for (long long idx = 0; idx < states; ++idx) {
    const auto q = indexer.decode(idx);
    double g = 0;
    for (int u = 0; u < cfg.dims.num_users(); ++u)
      g += cfg.cost.user_cost(u, q[u]);
    stage[idx] = g;
  }

  std::vector<double> v(states, 0.0), tv(states, 0.0);
  OracleStats stats;
  const long long ref = 0;  // all-empty reference state

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int nthreads = opts.threads > 0 ? opts.threads : std::max(hw, 1);
  if (states < 4096) nthreads = 1;

  auto sweep_range = [&](long long lo, long long hi,
                         const std::vector<double>& w) {
    std::vector<long long> q;
    for (long long idx = lo; idx < hi; ++idx) {
      q = indexer.decode(idx);
      double best = 0;
      bool first = true;
      for (size_t p = 0; p < classes.size(); ++p) {
        const auto& pc = classes[p];
        double acc = 0;
        for (size_t c = 0; c < pc.units.size(); ++c)
          acc += pc.prob[c] * min_over_schedules(w, idx, q, pc.units[c], pc,
                                                 cfg.dims, strides);
        if (first || acc < best) {
          best = acc;
          first = false;
        }
      }
      tv[idx] = stage[idx] + best;
    }
  };

  double theta = 0;
  for (long long it = 0; it < opts.max_iters; ++it) {
    const auto w = smooth_over_arrivals(v, indexer, models.arrivals);
    if (nthreads == 1) {
      sweep_range(0, states, w);
    } else {
      std::vector<std::future<void>> futs;
      const long long chunk = (states + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        const long long lo = t * chunk;
        const long long hi = std::min(states, lo + chunk);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, sweep_range, lo, hi,
                                  std::cref(w)));
      }
      for (auto& f : futs) f.get();
    }
    theta = tv[ref];
    double lo = 1e300, hi = -1e300;
    for (long long idx = 0; idx < states; ++idx) {
      const double next = tv[idx] - theta;
      const double d = next - v[idx];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      v[idx] = next;
    }
    const double span = hi - lo;
    stats.span_history.push_back(span);
    stats.iterations = it + 1;
    stats.final_span = span;
    if (span < opts.tol) break;
  }
  if (stats.final_span >= opts.tol)
    throw NonConvergence("relative value iteration did not reach span " +
                             std::to_string(opts.tol) + " in " +
                             std::to_string(opts.max_iters) + " iterations",
                         std::move(stats.span_history));

  OracleResult result;
  result.value.indexer = indexer;
  result.value.v = v;
  result.value.theta = theta;
  result.stats = std::move(stats);

  // Policy extraction at the converged table.
  result.policy.indexer = indexer;
  result.policy.pattern_of.assign(states, 0);
  result.policy.num_bs = cfg.dims.num_bs;
  const auto w = smooth_over_arrivals(v, indexer, models.arrivals);
  for (long long idx = 0; idx < states; ++idx) {
    const auto q = indexer.decode(idx);
    double best = 0;
    int best_p = 0;
    bool first = true;
    for (size_t p = 0; p < classes.size(); ++p) {
      const auto& pc = classes[p];
      double acc = 0;
      for (size_t c = 0; c < pc.units.size(); ++c)
        acc += pc.prob[c] * min_over_schedules(w, idx, q, pc.units[c], pc,
                                               cfg.dims, strides);
      if (first || acc < best - 1e-15) {
        best = acc;
        best_p = static_cast<int>(p);
        first = false;
      }
    }
    result.policy.pattern_of[idx] = best_p;
  }

  if (opts.materialize_schedule) {
    const auto csi_states = enumerate_csi_states(models.channel, cfg.dims);
    result.policy.has_schedule_table = true;
    result.policy.num_csi_states = static_cast<long long>(csi_states.size());
    result.policy.schedule_of.assign(
        states * result.policy.num_csi_states * cfg.dims.num_bs, -1);
    for (long long idx = 0; idx < states; ++idx) {
      const auto q = indexer.decode(idx);
      const int p = result.policy.pattern_of[idx];
      PatternClasses pc;
      for (int m = 0; m < cfg.dims.num_bs; ++m)
        if (models.patterns.at(p).activates(m)) pc.active_bs.push_back(m);
      for (long long h = 0; h < result.policy.num_csi_states; ++h) {
        const RateReport cand =
            candidate_rates(cfg, csi_states[h].first, models.patterns.at(p));
        std::vector<long long> units(cand.bits.begin(), cand.bits.end());
        std::vector<int> choice;
        min_over_schedules(w, idx, q, units, pc, cfg.dims, strides, &choice);
        for (size_t d = 0; d < pc.active_bs.size(); ++d)
          result.policy.schedule_of[(idx * result.policy.num_csi_states + h) *
                                        cfg.dims.num_bs +
                                    pc.active_bs[d]] =
              static_cast<std::int8_t>(choice[d]);
      }
    }
  }
  return result;
}

OraclePolicy::OraclePolicy(const RunModels& models, const OracleResult& result)
    : models_(models), result_(result) {
  const auto& dims = models_.cfg.dims;
  link_levels_.resize(dims.num_bs * dims.num_users());
  for (int n = 0; n < dims.num_bs; ++n)
    for (int u = 0; u < dims.num_users(); ++u) {
      auto& lv = link_levels_[n * dims.num_users() + u];
      for (const auto& [g, p] : models_.channel.link(n, u).levels)
        lv.push_back(g);
    }
  smoothed_ = smooth_over_arrivals(result_.value.v, result_.value.indexer,
                                   models_.arrivals);
}

long long OraclePolicy::csi_index_of(const CsiState& csi) const {
  const auto& dims = models_.cfg.dims;
  long long idx = 0;
  for (int l = dims.num_bs * dims.num_users() - 1; l >= 0; --l) {
    const int n = l / dims.num_users();
    const int u = l % dims.num_users();
    const auto& lv = link_levels_[l];
    const double g = csi.gain(n, u);
    long long level = -1;
    for (size_t i = 0; i < lv.size(); ++i)
      if (lv[i] == g) {
        level = static_cast<long long>(i);
        break;
      }
    if (level < 0)
      throw std::runtime_error("sampled gain does not match a catalog level");
    idx = idx * static_cast<long long>(lv.size()) + level;
  }
  return idx;
}

int OraclePolicy::select_pattern_index(long long, const QsiState& q,
                                       RngStream&) {
  return result_.policy.pattern_of[result_.value.indexer.index_of(q.raw())];
}

ScheduleAction OraclePolicy::schedule(long long, const QsiState& q,
                                      const CsiState& csi,
                                      const IciPattern& pattern,
                                      const RateReport& candidates,
                                      const std::vector<long long>&,
                                      RngStream&) {
  const auto& dims = models_.cfg.dims;
  const long long q_idx = result_.value.indexer.index_of(q.raw());
  if (result_.policy.has_schedule_table) {
    const long long h_idx = csi_index_of(csi);
    ScheduleAction action(dims);
    for (int m = 0; m < dims.num_bs; ++m) {
      const int k = result_.policy.scheduled_user(q_idx, h_idx, m);
      if (k >= 0) action.select(m, k);
    }
    return action;
  }
  // Recompute the joint argmin from the smoothed table.
  PatternClasses pc;
  for (int m = 0; m < dims.num_bs; ++m)
    if (pattern.activates(m)) pc.active_bs.push_back(m);
  std::vector<long long> units(candidates.bits.begin(), candidates.bits.end());
  const auto strides = make_strides(result_.value.indexer);
  std::vector<int> choice;
  min_over_schedules(smoothed_, q_idx, q.raw(), units, pc, dims, strides,
                     &choice);
  ScheduleAction action(dims);
  for (size_t d = 0; d < pc.active_bs.size(); ++d)
    if (choice[d] >= 0) action.select(pc.active_bs[d], choice[d]);
  return action;
}

PolicyEvaluation evaluate_policy(Policy& policy, const RunModels& models,
                                 long long horizon, long long warmup,
                                 std::uint64_t seed) {
  if (horizon <= warmup)
    throw ConfigError("evaluation horizon must exceed warmup");
  RunSpec spec;
  spec.seed = seed;
  spec.horizon = horizon;
  spec.warmup = warmup;
  spec.policy_name = "evaluation";
  PolicyEvaluation ev;
  ev.metrics = run(spec, models, policy);
  ev.avg_cost = ev.metrics.avg_cost;
  ev.ci_halfwidth = ev.metrics.avg_cost_ci;
  return ev;
}

std::string oracle_result_to_json(const OracleResult& result,
                                  bool include_schedule_table) {
  nlohmann::json j;
  j["schema"] = "mcsched-oracle-v1";
  j["theta"] = result.value.theta;
  j["num_users"] = result.value.indexer.num_users;
  j["buffer_size"] = result.value.indexer.buffer_size;
  j["iterations"] = result.stats.iterations;
  j["final_span"] = result.stats.final_span;
  j["value"] = result.value.v;
  j["pattern_of"] = result.policy.pattern_of;
  if (include_schedule_table && result.policy.has_schedule_table) {
    j["num_csi_states"] = result.policy.num_csi_states;
    j["schedule_of"] = result.policy.schedule_of;
  }
  return j.dump(2);
}

}  // namespace mcs
