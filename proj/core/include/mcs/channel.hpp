#pragma once

#include <optional>
#include <vector>

#include "mcs/rng.hpp"
#include "mcs/types.hpp"

namespace mcs {

// Distribution of one link's small-scale power gain.
struct LinkFading {
  enum class Kind { DiscreteLevels, Rayleigh };
  Kind kind = Kind::Rayleigh;
  // DiscreteLevels: (gain, probability) pairs, probabilities sum to 1.
  std::vector<std::pair<double, double>> levels;
  double mean_gain = 1.0;  // Rayleigh: exponential power gain with this mean

  bool discrete() const { return kind == Kind::DiscreteLevels; }
  void validate() const;
};

// Block-fading model: every link i.i.d. across slots, independent across
// links. Links default to `base`; per-link overrides are keyed by
// (from_bs, flat_user).
struct ChannelModel {
  LinkFading base;
  std::vector<std::pair<std::pair<int, int>, LinkFading>> overrides;

  const LinkFading& link(int from_bs, int flat_user) const;
  bool discrete() const;
  void validate() const;
};

// Rates and deliverable payload for one slot under a fixed pattern.
// Entries are per flat user; rate is 0 for users whose BS is inactive.
struct RateReport {
  std::vector<double> rate_bps;
  std::vector<double> signal_w;            // phi: received signal power
  std::vector<double> interference_noise_w;  // varphi: interference + N0*W
  std::vector<long long> bits;             // floor(rate * slot)

  int num_users() const { return static_cast<int>(rate_bps.size()); }
};

// One gain per link, each drawn independently from its configured
// distribution. Deterministic given the stream state.
CsiState sample_csi(const ChannelModel& model, const GridDims& dims,
                    RngStream& rng);

// Shannon-style rate kernel shared by every scheme:
//   rate = bw * log2(1 + xi * signal / interference_noise).
double rate_from_sinr(double bandwidth_hz, double coding_gap, double signal_w,
                      double interference_noise_w);

// Per-user achievable rate and deliverable bits under pattern p assuming
// the user is the one its BS schedules. Interference comes from every
// other active BS regardless of scheduling, so these candidates are what
// each user would report back to its BS.
//
// When include_bandwidth_in_bits is false the deliverable-bits figure
// drops the bandwidth factor (bits = floor(log2(1+SINR) * slot)) while
// the rate itself is unchanged.
RateReport candidate_rates(const SystemConfig& cfg, const CsiState& csi,
                           const IciPattern& p,
                           bool include_bandwidth_in_bits = true);

// Rates actually realized under a schedule: candidates masked down to the
// scheduled users. Throws std::invalid_argument when the schedule selects
// a user at an inactive BS.
RateReport compute_rates(const SystemConfig& cfg, const CsiState& csi,
                         const IciPattern& p, const ScheduleAction& s);

// Static frequency-reuse channelization used by the reuse baselines: each
// BS transmits every slot on bandwidth W/reuse_factor and only same-color
// BSs interfere.
RateReport reuse_candidate_rates(const SystemConfig& cfg, const CsiState& csi,
                                 const std::vector<int>& colors,
                                 int reuse_factor);

// Number of distinct global CSI states of a discrete model, or nullopt
// when any link is continuous. Saturates at `cap`.
std::optional<long long> csi_state_count(const ChannelModel& model,
                                         const GridDims& dims,
                                         long long cap = 1LL << 62);

// dB path-loss helper: PL(dB) = const + slope * log10(distance_m),
// returned as a linear power gain.
double path_loss_gain_db(double pl_const_db, double pl_slope_db,
                         double distance_m);

}  // namespace mcs
