#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mcs/baselines.hpp"
#include "mcs/control.hpp"
#include "mcs/oracle.hpp"
#include "mcs/sim.hpp"

namespace mcs {

// Topology: how the path-loss matrix is produced.
//   unit:     every link gain 1 (abstract desk-scale instances).
//   explicit: gains straight from the config file.
//   hex:      BSs on a hex grid (1 tier = 7, 2 tiers = 19), users placed
//             uniformly in each cell disc per run seed, dB path loss
//             const + slope*log10(distance).
struct TopologySpec {
  enum class Kind { Unit, Explicit, Hex };
  Kind kind = Kind::Unit;
  std::vector<double> explicit_loss;  // [num_bs * num_users]
  double cell_radius_m = 500.0;
  double pl_const_db = 34.5;
  double pl_slope_db = 35.0;
  double min_distance_m = 35.0;
  int tiers = 1;
};

struct SweepSpec {
  enum class Axis { None, PowerDbm, Loading };
  Axis axis = Axis::None;
  std::vector<double> values;
  int replicates = 1;
};

// Fully parsed experiment description; materialize() turns it into the
// per-run models.
struct Experiment {
  // system
  GridDims dims;
  double slot_seconds = 1.0;
  double bandwidth_hz = 1.0;
  double noise_psd = 1.0;
  double coding_gap = 1.0;
  std::vector<double> max_power_w;
  int buffer_size = 1;
  QueueUnit unit = QueueUnit::Bits;
  CostKind cost_kind = CostKind::NormalizedQueue;
  std::vector<double> cost_weights;

  TopologySpec topology;
  PatternSet patterns;
  ChannelModel channel;
  ArrivalModel arrivals;

  ControllerParams control;
  bool include_bandwidth_in_units = true;

  TimescaleParams timescale;
  int reuse_factor = 3;
  std::vector<int> reuse_colors;  // empty = derive by layout

  RunSpec run;
  std::string policy_name = "proposed";
  SweepSpec sweep;
  OracleOptions oracle;
};

// Raw JSON access with dotted-path overrides; an override must address
// an existing key and parse as its current type.
std::string read_file(const std::string& path);
Experiment parse_experiment_json(const std::string& text);
Experiment load_experiment(const std::string& path,
                           const std::vector<std::string>& overrides = {});
std::string apply_override_to_text(const std::string& text,
                                   const std::string& dotted_assignment);

// Builds the concrete models for one run. Hex topologies draw user
// positions from RngStream(seed, 0); other topologies ignore the seed.
RunModels materialize(const Experiment& exp, std::uint64_t seed);

ReusePlan make_reuse_plan(const Experiment& exp);

// Policy factory for "proposed", "csit_only", "backpressure",
// "timescale". The oracle policy needs a solved instance and is
// constructed separately.
std::unique_ptr<Policy> make_policy(const std::string& name,
                                    const Experiment& exp,
                                    const RunModels& models);

// Applies one sweep-axis value, returning a modified experiment.
Experiment apply_sweep_value(const Experiment& exp, SweepSpec::Axis axis,
                             double value);

}  // namespace mcs
