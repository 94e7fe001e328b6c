// Command-line front end: config validation, single runs, sweeps, the
// centralized oracle, fixed-point verification and plot-data emission.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcs/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitVerification = 4;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string policy;
  long long horizon = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

mcs::Experiment load(const CliOptions& opts) {
  auto exp = mcs::load_experiment(opts.config_path, opts.overrides);
  if (!opts.policy.empty()) {
    exp.policy_name = opts.policy;
    exp.run.policy_name = opts.policy;
  }
  if (opts.horizon > 0) {
    const double frac = exp.run.horizon > 0
                            ? static_cast<double>(exp.run.warmup) /
                                  static_cast<double>(exp.run.horizon)
                            : 0.1;
    exp.run.horizon = opts.horizon;
    exp.run.warmup = static_cast<long long>(frac * opts.horizon);
  }
  if (opts.seed_set) exp.run.seed = opts.seed;
  exp.run.validate();
  return exp;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_checkpoint(const fs::path& path, long long slot,
                      const mcs::GridDims& dims,
                      const mcs::TwoTimescaleController& ctl) {
  std::ostringstream os;
  os.precision(17);
  const auto& vt = ctl.value_tables();
  const auto& qt = ctl.qfactor_tables();
  const int nq = static_cast<int>(vt[0].v.size()) - 1;
  os << "# mcsched-checkpoint v1\n";
  os << "# slot " << slot << "\n";
  os << "# num_bs " << dims.num_bs << " users_per_bs " << dims.users_per_bs
     << " buffer " << nq << " patterns " << qt[0].num_patterns << "\n";
  for (int m = 0; m < dims.num_bs; ++m) {
    for (int k = 0; k < dims.users_per_bs; ++k) {
      const int u = dims.flat(m, k);
      os << "V " << m << " " << k;
      for (double v : vt[u].v) os << " " << v;
      os << "\n";
      for (int p = 0; p < qt[u].num_patterns; ++p) {
        os << "Q " << m << " " << k << " " << p;
        for (int qi = 0; qi <= nq; ++qi) os << " " << qt[u].at(qi, p);
        os << "\n";
      }
    }
  }
  write_text(path, os.str());
}

std::unique_ptr<mcs::Policy> build_policy(
    const mcs::Experiment& exp, const mcs::RunModels& models,
    std::unique_ptr<mcs::OracleResult>& oracle_holder) {
  if (exp.policy_name == "oracle") {
    oracle_holder = std::make_unique<mcs::OracleResult>(
        mcs::relative_value_iteration(models, exp.oracle));
    return std::make_unique<mcs::OraclePolicy>(models, *oracle_holder);
  }
  return mcs::make_policy(exp.policy_name, exp, models);
}

int cmd_validate(const CliOptions& opts) {
  const auto exp = load(opts);
  const auto models = mcs::materialize(exp, exp.run.seed);
  models.cfg.validate();
  std::cout << "config ok: " << exp.dims.num_bs << " BSs x "
            << exp.dims.users_per_bs << " users, buffer "
            << exp.buffer_size
            << (exp.unit == mcs::QueueUnit::Bits ? " bits" : " packets")
            << ", " << exp.patterns.size() << " patterns, policy "
            << exp.policy_name << ", horizon " << exp.run.horizon << "\n";
  return kExitOk;
}

int cmd_run(const CliOptions& opts) {
  const auto exp = load(opts);
  const auto models = mcs::materialize(exp, exp.run.seed);
  std::unique_ptr<mcs::OracleResult> oracle_holder;
  auto policy = build_policy(exp, models, oracle_holder);

  const fs::path out(opts.out_dir);
  mcs::CheckpointFn on_checkpoint;
  if (!exp.run.checkpoint_slots.empty()) {
    on_checkpoint = [&](long long slot, const mcs::Policy& p) {
      const auto* ctl = dynamic_cast<const mcs::TwoTimescaleController*>(&p);
      if (!ctl) return;
      write_checkpoint(out / ("checkpoint_" + std::to_string(slot) + ".txt"),
                       slot, exp.dims, *ctl);
    };
  }
  const auto metrics = mcs::run(exp.run, models, *policy, on_checkpoint);
  write_text(out / ("metrics_" + exp.policy_name + ".json"),
             metrics.to_json());
  write_text(out / ("metrics_" + exp.policy_name + ".csv"),
             mcs::MetricsRecord::csv_header() + "\n" +
                 metrics.csv_rows("single"));
  std::cout << "policy " << exp.policy_name << ": avg delay/user "
            << metrics.avg_delay_per_user << " slots, avg cost "
            << metrics.avg_cost << " +- " << metrics.avg_cost_ci
            << ", drop prob " << metrics.overall_drop_prob << "\n";
  return kExitOk;
}

int cmd_sweep(const CliOptions& opts) {
  const auto exp = load(opts);
  if (exp.sweep.axis == mcs::SweepSpec::Axis::None || exp.sweep.values.empty())
    throw mcs::ConfigError("config has no sweep section");
  const std::string axis_name =
      exp.sweep.axis == mcs::SweepSpec::Axis::PowerDbm ? "power_dbm"
                                                       : "loading";
  std::vector<mcs::SweepPoint> grid;
  for (double v : exp.sweep.values) {
    const auto exp_point = mcs::apply_sweep_value(exp, exp.sweep.axis, v);
    mcs::SweepPoint point;
    point.label = axis_name + "=" + std::to_string(v);
    point.x = v;
    point.make_models = [exp_point](std::uint64_t run_seed) {
      return mcs::materialize(exp_point, run_seed);
    };
    grid.push_back(std::move(point));
  }
  // Policies needing per-run construction; the oracle re-solves per point
  // and is exercised through `run`, not sweeps, to keep sweeps fast.
  if (exp.policy_name == "oracle")
    throw mcs::ConfigError("sweep does not support the oracle policy");

  auto results = mcs::sweep(exp.run, grid, exp.sweep.replicates,
                            [&](const mcs::RunModels& models) {
                              return mcs::make_policy(exp.policy_name, exp,
                                                      models);
                            });
  std::ostringstream os;
  os << "axis,value,policy,replicates,mean_delay,delay_ci,mean_cost,mean_drop\n";
  os.precision(12);
  for (const auto& r : results) {
    os << axis_name << "," << r.x << "," << exp.policy_name << ","
       << exp.sweep.replicates << "," << r.mean_delay << "," << r.delay_ci
       << "," << r.mean_cost << "," << r.mean_drop << "\n";
    std::cout << r.label << ": delay " << r.mean_delay << " +- " << r.delay_ci
              << "\n";
  }
  write_text(fs::path(opts.out_dir) /
                 ("sweep_" + axis_name + "_" + exp.policy_name + ".csv"),
             os.str());
  return kExitOk;
}

int cmd_oracle(const CliOptions& opts) {
  const auto exp = load(opts);
  const auto models = mcs::materialize(exp, exp.run.seed);
  const auto result = mcs::relative_value_iteration(models, exp.oracle);
  write_text(fs::path(opts.out_dir) / "oracle.json",
             mcs::oracle_result_to_json(result));
  std::cout << "oracle: theta " << result.value.theta << ", iterations "
            << result.stats.iterations << ", final span "
            << result.stats.final_span << ", monotone "
            << (result.value.is_monotone() ? "yes" : "no") << "\n";
  return kExitOk;
}

int cmd_verify_fixed_points(const CliOptions& opts) {
  auto exp = load(opts);
  exp.policy_name = "proposed";
  exp.run.policy_name = "proposed";
  if (exp.run.checkpoint_slots.empty())
    exp.run.checkpoint_slots = {10000, 100000, 1000000};
  std::sort(exp.run.checkpoint_slots.begin(), exp.run.checkpoint_slots.end());
  if (exp.run.horizon < exp.run.checkpoint_slots.back())
    exp.run.horizon = exp.run.checkpoint_slots.back();
  const auto models = mcs::materialize(exp, exp.run.seed);

  // Direct fixed points; refused for non-discrete instances.
  const int nusers = exp.dims.num_users();
  std::vector<mcs::PerUserValueTable> v_fp;
  std::vector<mcs::PerUserQTable> q_fp;
  for (int u = 0; u < nusers; ++u) {
    v_fp.push_back(mcs::solve_value_fixed_point(
        models.cfg, models.channel, models.arrivals, models.patterns, u,
        models.include_bandwidth_in_units));
    q_fp.push_back(mcs::solve_qfactor_fixed_point(
        models.cfg, models.channel, models.arrivals, models.patterns, u,
        models.include_bandwidth_in_units));
  }

  struct Row {
    long long slot;
    double vdist, qdist;
  };
  std::vector<Row> rows;
  auto policy = std::make_unique<mcs::TwoTimescaleController>(models,
                                                              exp.control);
  mcs::CheckpointFn cb = [&](long long slot, const mcs::Policy& p) {
    const auto& ctl = dynamic_cast<const mcs::TwoTimescaleController&>(p);
    double vdist = 0, qdist = 0;
    for (int u = 0; u < nusers; ++u) {
      double dv = 0;
      for (size_t i = 0; i < v_fp[u].v.size(); ++i)
        dv = std::max(dv,
                      std::abs(ctl.value_tables()[u].v[i] - v_fp[u].v[i]));
      vdist = std::max(vdist, dv / (1.0 + v_fp[u].max_abs()));
      double dq = 0;
      for (size_t i = 0; i < q_fp[u].q.size(); ++i)
        dq = std::max(dq,
                      std::abs(ctl.qfactor_tables()[u].q[i] - q_fp[u].q[i]));
      qdist = std::max(qdist, dq / (1.0 + q_fp[u].max_abs()));
    }
    rows.push_back({slot, vdist, qdist});
  };
  mcs::run(exp.run, models, *policy, cb);

  std::ostringstream os;
  os << "slot,value_distance,qfactor_distance\n";
  os.precision(12);
  for (const auto& r : rows)
    os << r.slot << "," << r.vdist << "," << r.qdist << "\n";
  write_text(fs::path(opts.out_dir) / "fixed_point_distance.csv", os.str());

  bool pass = true;
  const double threshold = 0.05;
  const auto& last = rows.back();
  if (last.vdist > threshold || last.qdist > threshold) pass = false;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].vdist > 1.1 * rows[i - 1].vdist) pass = false;
    if (rows[i].qdist > 1.1 * rows[i - 1].qdist) pass = false;
  }
  for (const auto& r : rows)
    std::cout << "slot " << r.slot << ": value distance " << r.vdist
              << ", qfactor distance " << r.qdist << "\n";
  std::cout << (pass ? "PASS" : "FAIL")
            << ": final distances vs threshold " << threshold
            << " and nonincreasing checkpoints (10% slack)\n";
  return pass ? kExitOk : kExitVerification;
}

// Plot-data emission from previously written run/sweep outputs.
int cmd_report(const CliOptions& opts) {
  const fs::path out(opts.out_dir);
  fs::create_directories(out);

  // Delay-vs-power and delay-vs-loading: merge sweep CSVs per axis.
  for (const std::string axis : {"power_dbm", "loading"}) {
    std::ostringstream os;
    os << "axis,value,policy,replicates,mean_delay,delay_ci,mean_cost,mean_drop\n";
    if (fs::exists(out))
      for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("sweep_" + axis + "_", 0) != 0) continue;
        std::ifstream in(entry.path());
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line))
          if (!line.empty()) os << line << "\n";
      }
    write_text(out / ("fig_delay_vs_" +
                      std::string(axis == "power_dbm" ? "power" : "loading") +
                      ".csv"),
               os.str());
  }

  // Queue-length CDF per policy from metrics files.
  {
    std::ostringstream os;
    os << "policy,queue_len,cdf\n";
    os.precision(12);
    if (fs::exists(out))
      for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("metrics_", 0) != 0 ||
            entry.path().extension() != ".json")
          continue;
        json j = json::parse(std::ifstream(entry.path()));
        const auto hist = j["queue_histogram"].get<std::vector<long long>>();
        long long total = 0;
        for (long long h : hist) total += h;
        if (total == 0) continue;
        double acc = 0;
        for (size_t q = 0; q < hist.size(); ++q) {
          acc += static_cast<double>(hist[q]) / total;
          os << j["policy"].get<std::string>() << "," << q << "," << acc
             << "\n";
        }
      }
    write_text(out / "fig_queue_cdf.csv", os.str());
  }

  // Convergence trace of user (0,0) from checkpoints: the value vector
  // and the Q-factor column of its reference pattern.
  {
    std::ostringstream os;
    os << "slot,table,index,value\n";
    std::vector<fs::path> cps;
    if (fs::exists(out))
      for (const auto& entry : fs::directory_iterator(out))
        if (entry.path().filename().string().rfind("checkpoint_", 0) == 0)
          cps.push_back(entry.path());
    std::sort(cps.begin(), cps.end());
    for (const auto& cp : cps) {
      std::ifstream in(cp);
      std::string line;
      long long slot = 0;
      int ref_pattern = 0;
      std::vector<double> v00;
      std::map<int, std::vector<double>> q00;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "#") {
          std::string key;
          ls >> key;
          if (key == "slot") ls >> slot;
          continue;
        }
        int m, k;
        if (tag == "V") {
          ls >> m >> k;
          if (m == 0 && k == 0) {
            double x;
            while (ls >> x) v00.push_back(x);
          }
        } else if (tag == "Q") {
          int p;
          ls >> m >> k >> p;
          if (m == 0 && k == 0) {
            double x;
            auto& col = q00[p];
            while (ls >> x) col.push_back(x);
          }
        }
      }
      for (size_t i = 0; i < v00.size(); ++i)
        os << slot << ",value," << i << "," << v00[i] << "\n";
      if (!q00.empty()) {
        const auto& col = q00.begin()->second;  // lowest pattern index
        ref_pattern = q00.begin()->first;
        for (size_t i = 0; i < col.size(); ++i)
          os << slot << ",qfactor_p" << ref_pattern << "," << i << ","
             << col[i] << "\n";
      }
    }
    write_text(out / "fig_convergence.csv", os.str());
  }
  std::cout << "report written to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-aware multi-cell downlink scheduling simulator"};
  app.require_subcommand(1);

  CliOptions opts;
  const char* env_out = std::getenv("MCSCHED_OUT");
  opts.out_dir = env_out ? env_out : "out";

  app.add_option("--config", opts.config_path, "Experiment config (JSON)");
  app.add_option("--out", opts.out_dir, "Output directory");
  app.add_option("--set", opts.overrides,
                 "Override config entries, e.g. --set run.horizon=1000");
  app.add_option("--policy", opts.policy,
                 "proposed | oracle | csit_only | backpressure | timescale");
  app.add_option("--horizon", opts.horizon, "Override run horizon");
  auto* seed_opt = app.add_option("--seed", opts.seed, "Override run seed");

  auto* validate = app.add_subcommand("validate", "Check a config file");
  auto* runc = app.add_subcommand("run", "Run one experiment");
  auto* sweepc = app.add_subcommand("sweep", "Run the configured sweep");
  auto* oraclec =
      app.add_subcommand("oracle", "Solve the centralized instance");
  auto* verifyc = app.add_subcommand(
      "verify-fixed-points",
      "Compare online learning against the direct fixed points");
  auto* reportc =
      app.add_subcommand("report", "Emit plot-ready CSVs from outputs");

  CLI11_PARSE(app, argc, argv);
  opts.seed_set = seed_opt->count() > 0;

  try {
    if (app.got_subcommand(reportc)) return cmd_report(opts);
    if (opts.config_path.empty())
      throw mcs::ConfigError("--config is required");
    if (app.got_subcommand(validate)) return cmd_validate(opts);
    if (app.got_subcommand(runc)) return cmd_run(opts);
    if (app.got_subcommand(sweepc)) return cmd_sweep(opts);
    if (app.got_subcommand(oraclec)) return cmd_oracle(opts);
    if (app.got_subcommand(verifyc)) return cmd_verify_fixed_points(opts);
  } catch (const mcs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mcs::UnsupportedInstance& e) {
    std::cerr << "unsupported instance: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
