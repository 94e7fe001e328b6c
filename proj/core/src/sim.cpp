#include "mcs/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <thread>

#include "json.hpp"

namespace mcs {

void RunSpec::validate() const {
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (warmup < 0 || warmup >= horizon)
    throw ConfigError("warmup must lie in [0, horizon)");
}

namespace {

// 95% batch-means half-width with 20 batches (t quantile, 19 dof).
double batch_means_ci(const std::vector<double>& series) {
  const int batches = 20;
  const long long n = static_cast<long long>(series.size());
  if (n < batches) return 0;
  const long long per = n / batches;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    double s = 0;
    for (long long i = b * per; i < (b + 1) * per; ++i) s += series[i];
    means[b] = s / per;
  }
  double grand = 0;
  for (double m : means) grand += m;
  grand /= batches;
  double var = 0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (batches - 1);
  return 2.093 * std::sqrt(var / batches);  // t_{0.975,19}
}

}  // namespace

MetricsRecord run(const RunSpec& spec, const RunModels& models, Policy& policy,
                  const CheckpointFn& on_checkpoint) {
  spec.validate();
  const SystemConfig& cfg = models.cfg;
  cfg.validate();
  models.channel.validate();
  models.arrivals.validate(cfg.dims, cfg.unit);
  const auto& dims = cfg.dims;
  const int nusers = dims.num_users();
  const bool packets = cfg.unit == QueueUnit::Packets;
  const ReusePlan* reuse = policy.reuse_plan();

  RngStream csi_rng(spec.seed, 1);
  RngStream arrival_rng(spec.seed, 2);
  RngStream policy_rng(spec.seed, 3);

  QsiState q(dims, cfg.buffer_size, 0);
  PacketBuffers buffers(dims, cfg.buffer_size);

  MetricsRecord rec;
  rec.policy = spec.policy_name;
  rec.seed = spec.seed;
  rec.horizon = spec.horizon;
  rec.warmup = spec.warmup;
  rec.num_users = nusers;
  rec.buffer_size = cfg.buffer_size;
  rec.arrived_total.assign(nusers, 0);
  rec.served_total.assign(nusers, 0);
  rec.dropped_total.assign(nusers, 0);
  rec.queue_histogram.assign(cfg.buffer_size + 1, 0);
  rec.pattern_usage.assign(models.patterns.size(), 0);
  std::vector<double> sum_f(nusers, 0.0), sum_q(nusers, 0.0);
  std::vector<double> cost_series;
  cost_series.reserve(spec.horizon - spec.warmup);

  std::vector<long long> candidate_units(nusers, 0);
  std::vector<double> packet_sizes_buf;

  auto checkpoint_it = spec.checkpoint_slots.begin();

  for (long long t = 0; t < spec.horizon; ++t) {
    // (1) Pattern decision from queue information only.
    int pattern_idx = -1;
    if (!reuse) pattern_idx = policy.select_pattern_index(t, q, policy_rng);
    const IciPattern* pattern =
        pattern_idx >= 0 ? &models.patterns.at(pattern_idx) : nullptr;

    // (2) Fading realization and per-user candidates.
    const CsiState csi = sample_csi(models.channel, dims, csi_rng);
    RateReport candidates =
        reuse ? reuse_candidate_rates(cfg, csi, reuse->colors, reuse->factor)
              : candidate_rates(cfg, csi, *pattern,
                                models.include_bandwidth_in_units);
    // Physical transmission always carries the bandwidth factor; when the
    // decision units drop it, rebuild the physical budget from the rate.
    for (int u = 0; u < nusers; ++u) {
      if (packets) {
        const long long budget = static_cast<long long>(
            std::floor(candidates.rate_bps[u] * cfg.slot_seconds));
        candidate_units[u] = buffers.packets_served(u, std::max(budget, 0LL));
      } else {
        candidate_units[u] = candidates.bits[u];
      }
    }

    // (3) Per-BS scheduling from this slot's candidates.
    IciPattern all_on;
    if (reuse) {
      all_on.active.assign(dims.num_bs, 1);
      pattern = &all_on;
    }
    const ScheduleAction action = policy.schedule(
        t, q, csi, *pattern, candidates, candidate_units, policy_rng);
    for (int m = 0; m < dims.num_bs; ++m)
      if (action.selected_user(m) >= 0 && !pattern->activates(m))
        throw std::runtime_error("policy scheduled a user at an inactive BS");

    // (4) Transmission, arrivals, queue step. Delivered payload always
    // carries the bandwidth factor, whatever the decision units use.
    std::vector<long long> served(nusers, 0);
    for (int m = 0; m < dims.num_bs; ++m) {
      const int k = action.selected_user(m);
      if (k < 0) continue;
      const int u = dims.flat(m, k);
      const long long budget = std::max<long long>(
          static_cast<long long>(
              std::floor(candidates.rate_bps[u] * cfg.slot_seconds)),
          0);
      served[u] = packets ? buffers.commit_service(u, budget) : budget;
    }
    const std::vector<long long> arrivals =
        sample_arrivals(models.arrivals, dims, arrival_rng);
    SlotOutcome outcome = step_queues(q, served, arrivals);
    if (packets) {
      for (int u = 0; u < nusers; ++u) {
        packet_sizes_buf.clear();
        for (long long i = 0; i < arrivals[u]; ++i)
          packet_sizes_buf.push_back(
              arrival_rng.exponential(models.arrivals.mean_packet_bits));
        buffers.push_arrivals(u, packet_sizes_buf);
      }
    }

    // (5) Learning / window updates from this slot's observations.
    SlotObservation obs{t,          q,       csi,    pattern_idx,
                        candidates, candidate_units, outcome};
    policy.observe_slot(obs);

    // (6) Metrics. Queue averages use the slot-start state.
    const bool measured = t >= spec.warmup;
    if (measured) {
      double g = 0;
      for (int u = 0; u < nusers; ++u) {
        sum_f[u] += cfg.cost.f(u, q.at_flat(u));
        sum_q[u] += static_cast<double>(q.at_flat(u));
        g += cfg.cost.user_cost(u, q.at_flat(u));
        rec.queue_histogram[q.at_flat(u)] += 1;
      }
      cost_series.push_back(g);
      if (pattern_idx >= 0) rec.pattern_usage[pattern_idx] += 1;
    }
    for (int u = 0; u < nusers; ++u) {
      rec.arrived_total[u] += outcome.arrived[u];
      rec.served_total[u] += outcome.served[u];
      rec.dropped_total[u] += outcome.dropped[u];
    }

    q = outcome.next;
    if (checkpoint_it != spec.checkpoint_slots.end() &&
        t + 1 == *checkpoint_it) {
      if (on_checkpoint) on_checkpoint(t + 1, policy);
      ++checkpoint_it;
    }
  }

  const double measured_slots =
      static_cast<double>(spec.horizon - spec.warmup);
  rec.mean_cost_f.resize(nusers);
  rec.mean_queue.resize(nusers);
  rec.mean_delay.resize(nusers);
  rec.drop_prob.resize(nusers);
  rec.final_queue.resize(nusers);
  double delay_sum = 0;
  long long dropped_all = 0, arrived_all = 0;
  for (int u = 0; u < nusers; ++u) {
    rec.mean_cost_f[u] = sum_f[u] / measured_slots;
    rec.mean_queue[u] = sum_q[u] / measured_slots;
    const double lam = models.arrivals.mean(u);
    rec.mean_delay[u] = lam > 0 ? rec.mean_queue[u] / lam : 0.0;
    rec.drop_prob[u] =
        rec.arrived_total[u] > 0
            ? static_cast<double>(rec.dropped_total[u]) / rec.arrived_total[u]
            : 0.0;
    rec.final_queue[u] = q.at_flat(u);
    delay_sum += rec.mean_delay[u];
    dropped_all += rec.dropped_total[u];
    arrived_all += rec.arrived_total[u];
  }
  double cost_sum = 0;
  for (double g : cost_series) cost_sum += g;
  rec.avg_cost = cost_sum / measured_slots;
  rec.avg_cost_ci = batch_means_ci(cost_series);
  rec.avg_delay_per_user = delay_sum / nusers;
  rec.overall_drop_prob =
      arrived_all > 0 ? static_cast<double>(dropped_all) / arrived_all : 0.0;
  rec.bsc_messages = policy.bsc_messages();
  rec.bsc_messages_by_bs = policy.bsc_messages_per_bs();
  return rec;
}

std::string MetricsRecord::to_json() const {
  nlohmann::json j;
  j["schema"] = "mcsched-metrics-v1";
  j["policy"] = policy;
  j["seed"] = seed;
  j["horizon"] = horizon;
  j["warmup"] = warmup;
  j["num_users"] = num_users;
  j["buffer_size"] = buffer_size;
  j["avg_cost"] = avg_cost;
  j["avg_cost_ci"] = avg_cost_ci;
  j["avg_delay_per_user"] = avg_delay_per_user;
  j["overall_drop_prob"] = overall_drop_prob;
  j["mean_cost_f"] = mean_cost_f;
  j["mean_queue"] = mean_queue;
  j["mean_delay"] = mean_delay;
  j["drop_prob"] = drop_prob;
  j["arrived_total"] = arrived_total;
  j["served_total"] = served_total;
  j["dropped_total"] = dropped_total;
  j["final_queue"] = final_queue;
  j["queue_histogram"] = queue_histogram;
  j["bsc_messages"] = bsc_messages;
  j["bsc_messages_by_bs"] = bsc_messages_by_bs;
  j["pattern_usage"] = pattern_usage;
  return j.dump(2);
}

std::string MetricsRecord::csv_header() {
  return "run,policy,seed,user,mean_queue,mean_delay,mean_cost_f,drop_prob,"
         "arrived,served,dropped";
}

std::string MetricsRecord::csv_rows(const std::string& run_label) const {
  std::string out;
  for (int u = 0; u < num_users; ++u) {
    out += run_label + "," + policy + "," + std::to_string(seed) + "," +
           std::to_string(u) + "," + std::to_string(mean_queue[u]) + "," +
           std::to_string(mean_delay[u]) + "," +
           std::to_string(mean_cost_f[u]) + "," +
           std::to_string(drop_prob[u]) + "," +
           std::to_string(arrived_total[u]) + "," +
           std::to_string(served_total[u]) + "," +
           std::to_string(dropped_total[u]) + "\n";
  }
  return out;
}

std::uint64_t derive_run_seed(std::uint64_t master, int point, int replicate) {
  return splitmix64(splitmix64(master) ^
                    (static_cast<std::uint64_t>(point) << 20 |
                     static_cast<std::uint64_t>(replicate)));
}

std::vector<SweepResult> sweep(
    const RunSpec& spec, const std::vector<SweepPoint>& grid, int replicates,
    const std::function<std::unique_ptr<Policy>(const RunModels&)>& make_policy,
    int threads) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (replicates < 1) throw ConfigError("need at least one replicate");
  const int total = static_cast<int>(grid.size()) * replicates;
  std::vector<MetricsRecord> all(total);

  auto run_one = [&](int job) {
    const int point = job / replicates;
    const int rep = job % replicates;
    RunSpec rspec = spec;
    rspec.seed = derive_run_seed(spec.seed, point, rep);
    const RunModels models = grid[point].make_models(rspec.seed);
    auto policy = make_policy(models);
    all[job] = run(rspec, models, *policy);
  };

  int nthreads = threads > 0
                     ? threads
                     : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min(nthreads, total);
  if (nthreads <= 1) {
    for (int job = 0; job < total; ++job) run_one(job);
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    for (int t = 0; t < nthreads; ++t)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (int job = next.fetch_add(1); job < total;
             job = next.fetch_add(1))
          run_one(job);
      }));
    for (auto& f : futs) f.get();
  }

  std::vector<SweepResult> results;
  results.reserve(grid.size());
  for (size_t p = 0; p < grid.size(); ++p) {
    SweepResult res;
    res.label = grid[p].label;
    res.x = grid[p].x;
    double dsum = 0, csum = 0, dropsum = 0;
    for (int r = 0; r < replicates; ++r) {
      const auto& m = all[p * replicates + r];
      res.replicates.push_back(m);
      dsum += m.avg_delay_per_user;
      csum += m.avg_cost;
      dropsum += m.overall_drop_prob;
    }
    res.mean_delay = dsum / replicates;
    res.mean_cost = csum / replicates;
    res.mean_drop = dropsum / replicates;
    if (replicates > 1) {
      double var = 0;
      for (int r = 0; r < replicates; ++r) {
        const double d = res.replicates[r].avg_delay_per_user - res.mean_delay;
        var += d * d;
      }
      var /= (replicates - 1);
      // two-sided 95% t quantiles for small replicate counts
      static const double tq[] = {0,     12.71, 4.303, 3.182, 2.776,
                                  2.571, 2.447, 2.365, 2.306, 2.262};
      const int dof = replicates - 1;
      const double t =
          dof < 10 ? tq[dof] : 2.0;
      res.delay_ci = t * std::sqrt(var / replicates);
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace mcs
