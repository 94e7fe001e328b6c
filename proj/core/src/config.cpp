#include "mcs/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mcs {

using nlohmann::json;

namespace {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

std::vector<double> per_entry(const json& node, int n, const char* what) {
  std::vector<double> out;
  if (node.is_number()) {
    out.assign(n, node.get<double>());
  } else if (node.is_array()) {
    if (static_cast<int>(node.size()) != n)
      throw ConfigError(std::string(what) + ": expected " + std::to_string(n) +
                        " entries, got " + std::to_string(node.size()));
    for (const auto& v : node) out.push_back(v.get<double>());
  } else {
    throw ConfigError(std::string(what) + ": expected number or array");
  }
  return out;
}

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing config key: ") + key);
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

// Axial hex coordinates, center first, then rings outward.
std::vector<std::pair<int, int>> hex_axial(int tiers) {
  std::vector<std::pair<int, int>> cells = {{0, 0}};
  static const int dirs[6][2] = {{1, 0},  {0, 1},  {-1, 1},
                                 {-1, 0}, {0, -1}, {1, -1}};
  for (int ring = 1; ring <= tiers; ++ring) {
    int q = ring, r = 0;  // start east, walk the ring
    for (int side = 0; side < 6; ++side) {
      for (int step = 0; step < ring; ++step) {
        cells.emplace_back(q, r);
        q += dirs[(side + 2) % 6][0];
        r += dirs[(side + 2) % 6][1];
      }
    }
  }
  return cells;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string apply_override_to_text(const std::string& text,
                                   const std::string& dotted_assignment) {
  const auto eq = dotted_assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value");
  const std::string path = dotted_assignment.substr(0, eq);
  const std::string value = dotted_assignment.substr(eq + 1);

  json root = json::parse(text);
  json* node = &root;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty override path");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]))
      throw ConfigError("override path not in config: " + path);
    node = &(*node)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!node->contains(leaf))
    throw ConfigError("override path not in config: " + path);
  json& target = (*node)[leaf];
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings allowed
  }
  // Type check against the existing entry.
  const bool ok =
      (target.is_number() && parsed.is_number()) ||
      (target.is_boolean() && parsed.is_boolean()) ||
      (target.is_string() && parsed.is_string()) ||
      (target.is_array() && parsed.is_array());
  if (!ok)
    throw ConfigError("override type mismatch at " + path + ": config has " +
                      std::string(target.type_name()) + ", got " +
                      std::string(parsed.type_name()));
  target = parsed;
  return root.dump(2);
}

Experiment parse_experiment_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Experiment exp;

  const json& sys = require(j, "system");
  exp.dims.num_bs = require(sys, "num_bs").get<int>();
  exp.dims.users_per_bs = require(sys, "users_per_bs").get<int>();
  if (exp.dims.num_bs < 1 || exp.dims.users_per_bs < 1)
    throw ConfigError("need at least one BS and one user per BS");
  const int nusers = exp.dims.num_users();
  exp.slot_seconds = require(sys, "slot_seconds").get<double>();
  exp.bandwidth_hz = require(sys, "bandwidth_hz").get<double>();
  exp.noise_psd = require(sys, "noise_psd_w_per_hz").get<double>();
  exp.coding_gap = get_or(sys, "coding_gap", 1.0);
  if (sys.contains("max_power_dbm")) {
    exp.max_power_w = per_entry(sys["max_power_dbm"], exp.dims.num_bs,
                                "system.max_power_dbm");
    for (double& p : exp.max_power_w) p = dbm_to_watts(p);
  } else {
    exp.max_power_w =
        per_entry(require(sys, "max_power_w"), exp.dims.num_bs,
                  "system.max_power_w");
  }
  exp.buffer_size = require(sys, "buffer_size").get<int>();
  const std::string unit = get_or<std::string>(sys, "queue_unit", "bits");
  if (unit == "bits")
    exp.unit = QueueUnit::Bits;
  else if (unit == "packets")
    exp.unit = QueueUnit::Packets;
  else
    throw ConfigError("system.queue_unit must be bits or packets");
  const json& cost = require(sys, "cost");
  const std::string ckind = require(cost, "kind").get<std::string>();
  if (ckind == "normalized_queue")
    exp.cost_kind = CostKind::NormalizedQueue;
  else if (ckind == "overflow_indicator")
    exp.cost_kind = CostKind::OverflowIndicator;
  else
    throw ConfigError("cost.kind must be normalized_queue or overflow_indicator");
  exp.cost_weights = per_entry(require(cost, "weights"), nusers, "cost.weights");

  const json& topo = require(j, "topology");
  const std::string tkind = require(topo, "kind").get<std::string>();
  if (tkind == "unit") {
    exp.topology.kind = TopologySpec::Kind::Unit;
  } else if (tkind == "explicit") {
    exp.topology.kind = TopologySpec::Kind::Explicit;
    const json& pl = require(topo, "path_loss");
    if (static_cast<int>(pl.size()) != exp.dims.num_bs)
      throw ConfigError("topology.path_loss needs one row per BS");
    for (const auto& row : pl) {
      if (static_cast<int>(row.size()) != nusers)
        throw ConfigError("topology.path_loss rows need one entry per user");
      for (const auto& v : row)
        exp.topology.explicit_loss.push_back(v.get<double>());
    }
  } else if (tkind == "hex") {
    exp.topology.kind = TopologySpec::Kind::Hex;
    exp.topology.cell_radius_m = get_or(topo, "cell_radius_m", 500.0);
    exp.topology.pl_const_db = get_or(topo, "pl_const_db", 34.5);
    exp.topology.pl_slope_db = get_or(topo, "pl_slope_db", 35.0);
    exp.topology.min_distance_m = get_or(topo, "min_distance_m", 35.0);
    exp.topology.tiers = get_or(topo, "tiers", 1);
    const int expect = exp.topology.tiers == 1 ? 7 : 19;
    if (exp.topology.tiers < 1 || exp.topology.tiers > 2)
      throw ConfigError("topology.tiers must be 1 (7 BSs) or 2 (19 BSs)");
    if (exp.dims.num_bs != expect)
      throw ConfigError("hex topology with tiers=" +
                        std::to_string(exp.topology.tiers) + " needs " +
                        std::to_string(expect) + " BSs");
  } else {
    throw ConfigError("topology.kind must be unit, explicit or hex");
  }

  const json& pat = require(j, "patterns");
  const std::string pkind = require(pat, "kind").get<std::string>();
  if (pkind == "all_nonempty") {
    if (exp.dims.num_bs > 6)
      throw ConfigError(
          "all_nonempty pattern catalog is limited to 6 BSs; list patterns "
          "explicitly");
    exp.patterns = PatternSet::all_nonempty(exp.dims.num_bs);
  } else if (pkind == "explicit") {
    std::vector<IciPattern> list;
    for (const auto& row : require(pat, "list")) {
      IciPattern p;
      for (const auto& v : row)
        p.active.push_back(v.get<int>() ? 1 : 0);
      if (static_cast<int>(p.active.size()) != exp.dims.num_bs)
        throw ConfigError("pattern length must equal num_bs");
      list.push_back(std::move(p));
    }
    exp.patterns = PatternSet(std::move(list));
  } else {
    throw ConfigError("patterns.kind must be all_nonempty or explicit");
  }

  const json& chan = require(j, "channel");
  const std::string chkind = require(chan, "kind").get<std::string>();
  if (chkind == "discrete") {
    exp.channel.base.kind = LinkFading::Kind::DiscreteLevels;
    for (const auto& lv : require(chan, "levels"))
      exp.channel.base.levels.emplace_back(require(lv, "gain").get<double>(),
                                           require(lv, "prob").get<double>());
  } else if (chkind == "rayleigh") {
    exp.channel.base.kind = LinkFading::Kind::Rayleigh;
    exp.channel.base.mean_gain = get_or(chan, "mean_gain", 1.0);
  } else {
    throw ConfigError("channel.kind must be discrete or rayleigh");
  }
  exp.channel.validate();

  const json& arr = require(j, "arrivals");
  const std::string akind = require(arr, "kind").get<std::string>();
  if (akind == "bernoulli") {
    exp.arrivals.kind = ArrivalModel::Kind::Bernoulli;
    exp.arrivals.rate = per_entry(require(arr, "rate"), nusers, "arrivals.rate");
  } else if (akind == "deterministic") {
    exp.arrivals.kind = ArrivalModel::Kind::Deterministic;
    exp.arrivals.size = require(arr, "size").get<long long>();
    exp.arrivals.rate.assign(nusers, static_cast<double>(exp.arrivals.size));
  } else if (akind == "poisson_packets") {
    exp.arrivals.kind = ArrivalModel::Kind::PoissonPackets;
    exp.arrivals.rate = per_entry(require(arr, "rate"), nusers, "arrivals.rate");
    exp.arrivals.mean_packet_bits = require(arr, "mean_packet_bits").get<double>();
  } else {
    throw ConfigError(
        "arrivals.kind must be bernoulli, deterministic or poisson_packets");
  }
  exp.arrivals.validate(exp.dims, exp.unit);

  const json& ctl = j.contains("control") ? j["control"] : json::object();
  if (ctl.contains("partition_starts")) {
    std::vector<int> starts;
    for (const auto& v : ctl["partition_starts"]) starts.push_back(v.get<int>());
    exp.control.partition =
        QsiRegionPartition::from_starts(exp.buffer_size, std::move(starts));
  } else {
    exp.control.partition = QsiRegionPartition::uniform(
        exp.buffer_size, get_or(ctl, "regions_per_user", 4));
  }
  exp.include_bandwidth_in_units =
      get_or(ctl, "include_bandwidth_in_units", true);
  if (ctl.contains("exploration")) {
    const json& ex = ctl["exploration"];
    const std::string mode = get_or<std::string>(ex, "mode", "reference");
    if (mode == "off")
      exp.control.exploration.mode = ExplorationParams::Mode::Off;
    else if (mode == "reference")
      exp.control.exploration.mode = ExplorationParams::Mode::Reference;
    else if (mode == "uniform")
      exp.control.exploration.mode = ExplorationParams::Mode::UniformCatalog;
    else
      throw ConfigError("exploration.mode must be off, reference or uniform");
    exp.control.exploration.epsilon0 = get_or(ex, "epsilon0", 0.05);
    exp.control.exploration.inv_sqrt_decay =
        get_or(ex, "inv_sqrt_decay", true);
  }

  const json& lrn = j.contains("learner") ? j["learner"] : json::object();
  exp.control.step.a = get_or(lrn, "step_a", 1.0);
  exp.control.step.b = get_or(lrn, "step_b", 2.0);
  const std::string smode = get_or<std::string>(lrn, "step_mode", "global");
  if (smode == "global")
    exp.control.step.mode = StepSizeSchedule::Mode::GlobalSlot;
  else if (smode == "per_visit")
    exp.control.step.mode = StepSizeSchedule::Mode::PerVisit;
  else
    throw ConfigError("learner.step_mode must be global or per_visit");
  exp.control.init_value_slope = get_or(lrn, "init_value_slope", 0.01);

  const json& base = j.contains("baseline") ? j["baseline"] : json::object();
  exp.reuse_factor = get_or(base, "reuse_factor", 3);
  if (base.contains("reuse_colors"))
    for (const auto& v : base["reuse_colors"])
      exp.reuse_colors.push_back(v.get<int>());
  exp.timescale.slow_period = get_or<long long>(base, "t_slow", 100);
  exp.timescale.window = get_or(base, "pf_window", 1000.0);
  const std::string util = get_or<std::string>(base, "b3_utility", "pf");
  if (util == "pf")
    exp.timescale.utility = TimescaleParams::Utility::ProportionalFair;
  else if (util == "sum_rate")
    exp.timescale.utility = TimescaleParams::Utility::SumRate;
  else
    throw ConfigError("baseline.b3_utility must be pf or sum_rate");

  const json& runj = require(j, "run");
  exp.run.seed = get_or<std::uint64_t>(runj, "seed", 1);
  exp.run.horizon = require(runj, "horizon").get<long long>();
  if (runj.contains("warmup"))
    exp.run.warmup = runj["warmup"].get<long long>();
  else
    exp.run.warmup = static_cast<long long>(
        get_or(runj, "warmup_fraction", 0.1) * exp.run.horizon);
  if (runj.contains("checkpoint_slots"))
    for (const auto& v : runj["checkpoint_slots"])
      exp.run.checkpoint_slots.push_back(v.get<long long>());
  exp.policy_name = get_or<std::string>(runj, "policy", "proposed");
  exp.run.policy_name = exp.policy_name;
  exp.run.validate();

  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    const std::string axis = require(sw, "axis").get<std::string>();
    if (axis == "power_dbm")
      exp.sweep.axis = SweepSpec::Axis::PowerDbm;
    else if (axis == "loading")
      exp.sweep.axis = SweepSpec::Axis::Loading;
    else if (axis == "none")
      exp.sweep.axis = SweepSpec::Axis::None;
    else
      throw ConfigError("sweep.axis must be power_dbm, loading or none");
    for (const auto& v : require(sw, "values"))
      exp.sweep.values.push_back(v.get<double>());
    exp.sweep.replicates = get_or(sw, "replicates", 1);
  }

  if (j.contains("oracle")) {
    const json& o = j["oracle"];
    exp.oracle.tol = get_or(o, "tol", 1e-9);
    exp.oracle.max_iters = get_or<long long>(o, "max_iters", 100000);
    exp.oracle.max_state_pairs =
        get_or<long long>(o, "max_state_pairs", 2000000);
  }

  return exp;
}

Experiment load_experiment(const std::string& path,
                           const std::vector<std::string>& overrides) {
  std::string text = read_file(path);
  for (const auto& ov : overrides) text = apply_override_to_text(text, ov);
  return parse_experiment_json(text);
}

RunModels materialize(const Experiment& exp, std::uint64_t seed) {
  RunModels models;
  SystemConfig& cfg = models.cfg;
  cfg.dims = exp.dims;
  cfg.slot_seconds = exp.slot_seconds;
  cfg.bandwidth_hz = exp.bandwidth_hz;
  cfg.noise_psd = exp.noise_psd;
  cfg.coding_gap = exp.coding_gap;
  cfg.max_power_w = exp.max_power_w;
  cfg.buffer_size = exp.buffer_size;
  cfg.unit = exp.unit;
  cfg.cost.kind = exp.cost_kind;
  cfg.cost.beta = exp.cost_weights;
  cfg.cost.buffer_size = exp.buffer_size;
  cfg.cost.lambda.resize(exp.dims.num_users());
  for (int u = 0; u < exp.dims.num_users(); ++u)
    cfg.cost.lambda[u] = exp.arrivals.mean(u);

  const int nusers = exp.dims.num_users();
  switch (exp.topology.kind) {
    case TopologySpec::Kind::Unit:
      cfg.path_loss.assign(exp.dims.num_bs * nusers, 1.0);
      break;
    case TopologySpec::Kind::Explicit:
      cfg.path_loss = exp.topology.explicit_loss;
      break;
    case TopologySpec::Kind::Hex: {
      const auto& t = exp.topology;
      const auto axial = hex_axial(t.tiers);
      const double isd = 2.0 * t.cell_radius_m;
      std::vector<std::pair<double, double>> bs_xy;
      for (auto [aq, ar] : axial)
        bs_xy.emplace_back(isd * (aq + ar / 2.0),
                           isd * (std::sqrt(3.0) / 2.0) * ar);
      RngStream placement(seed, 0);
      std::vector<std::pair<double, double>> user_xy(nusers);
      for (int m = 0; m < exp.dims.num_bs; ++m) {
        for (int k = 0; k < exp.dims.users_per_bs; ++k) {
          const double radius = t.cell_radius_m * std::sqrt(placement.uniform());
          const double angle = 2.0 * M_PI * placement.uniform();
          user_xy[exp.dims.flat(m, k)] = {
              bs_xy[m].first + radius * std::cos(angle),
              bs_xy[m].second + radius * std::sin(angle)};
        }
      }
      cfg.path_loss.resize(exp.dims.num_bs * nusers);
      for (int n = 0; n < exp.dims.num_bs; ++n) {
        for (int u = 0; u < nusers; ++u) {
          const double dx = user_xy[u].first - bs_xy[n].first;
          const double dy = user_xy[u].second - bs_xy[n].second;
          const double dist =
              std::max(std::sqrt(dx * dx + dy * dy), t.min_distance_m);
          cfg.path_loss[n * nusers + u] =
              path_loss_gain_db(t.pl_const_db, t.pl_slope_db, dist);
        }
      }
      break;
    }
  }
  cfg.validate();
  models.channel = exp.channel;
  models.arrivals = exp.arrivals;
  models.patterns = exp.patterns;
  models.include_bandwidth_in_units = exp.include_bandwidth_in_units;
  return models;
}

ReusePlan make_reuse_plan(const Experiment& exp) {
  ReusePlan plan;
  plan.factor = exp.reuse_factor;
  plan.colors = exp.reuse_colors.empty()
                    ? default_reuse_colors(exp.dims.num_bs, exp.reuse_factor)
                    : exp.reuse_colors;
  plan.validate(exp.dims.num_bs);
  return plan;
}

std::unique_ptr<Policy> make_policy(const std::string& name,
                                    const Experiment& exp,
                                    const RunModels& models) {
  if (name == "proposed")
    return std::make_unique<TwoTimescaleController>(models, exp.control);
  if (name == "csit_only")
    return std::make_unique<CsitOnlyPolicy>(models, make_reuse_plan(exp));
  if (name == "backpressure")
    return std::make_unique<BackpressurePolicy>(models, make_reuse_plan(exp));
  if (name == "timescale")
    return std::make_unique<TimescaleDecompositionPolicy>(models,
                                                          exp.timescale);
  throw ConfigError("unknown policy: " + name +
                    " (expected proposed, csit_only, backpressure, timescale "
                    "or oracle)");
}

Experiment apply_sweep_value(const Experiment& exp, SweepSpec::Axis axis,
                             double value) {
  Experiment out = exp;
  switch (axis) {
    case SweepSpec::Axis::PowerDbm:
      for (double& p : out.max_power_w) p = dbm_to_watts(value);
      break;
    case SweepSpec::Axis::Loading:
      for (double& r : out.arrivals.rate) r = value;
      break;
    case SweepSpec::Axis::None:
      break;
  }
  return out;
}

}  // namespace mcs
