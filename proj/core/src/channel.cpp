#include "mcs/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace mcs {

void LinkFading::validate() const {
  if (kind == Kind::DiscreteLevels) {
    if (levels.empty()) throw ConfigError("discrete fading needs levels");
    double total = 0;
    for (auto [g, p] : levels) {
      if (!(g >= 0)) throw ConfigError("fading gains must be >= 0");
      if (!(p >= 0)) throw ConfigError("level probabilities must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError("level probabilities must sum to 1");
  } else {
    if (!(mean_gain > 0)) throw ConfigError("Rayleigh mean gain must be > 0");
  }
}

const LinkFading& ChannelModel::link(int from_bs, int flat_user) const {
  for (const auto& [key, fading] : overrides)
    if (key.first == from_bs && key.second == flat_user) return fading;
  return base;
}

bool ChannelModel::discrete() const {
  if (!base.discrete()) return false;
  for (const auto& ov : overrides)
    if (!ov.second.discrete()) return false;
  return true;
}

void ChannelModel::validate() const {
  base.validate();
  for (const auto& ov : overrides) ov.second.validate();
}

static double sample_link(const LinkFading& f, RngStream& rng) {
  if (f.kind == LinkFading::Kind::Rayleigh) return rng.exponential(f.mean_gain);
  double u = rng.uniform();
  double acc = 0;
  for (auto [g, p] : f.levels) {
    acc += p;
    if (u < acc) return g;
  }
  return f.levels.back().first;
}

CsiState sample_csi(const ChannelModel& model, const GridDims& dims,
                    RngStream& rng) {
  std::vector<double> h(dims.num_bs * dims.num_users());
  for (int n = 0; n < dims.num_bs; ++n)
    for (int u = 0; u < dims.num_users(); ++u)
      h[n * dims.num_users() + u] = sample_link(model.link(n, u), rng);
  return CsiState(dims, std::move(h));
}

double rate_from_sinr(double bandwidth_hz, double coding_gap, double signal_w,
                      double interference_noise_w) {
  return bandwidth_hz * std::log2(1.0 + coding_gap * signal_w /
                                            interference_noise_w);
}

RateReport candidate_rates(const SystemConfig& cfg, const CsiState& csi,
                           const IciPattern& p, bool include_bandwidth_in_bits) {
  const auto& dims = cfg.dims;
  RateReport r;
  r.rate_bps.assign(dims.num_users(), 0.0);
  r.signal_w.assign(dims.num_users(), 0.0);
  r.interference_noise_w.assign(dims.num_users(), 0.0);
  r.bits.assign(dims.num_users(), 0);
  const double noise_w = cfg.noise_psd * cfg.bandwidth_hz;
  for (int m = 0; m < dims.num_bs; ++m) {
    for (int k = 0; k < dims.users_per_bs; ++k) {
      const int u = dims.flat(m, k);
      double interference = 0;
      for (int n = 0; n < dims.num_bs; ++n) {
        if (n == m || !p.activates(n)) continue;
        interference += cfg.max_power_w[n] * csi.gain(n, u) * cfg.loss(n, u);
      }
      const double signal = cfg.max_power_w[m] * csi.gain(m, u) * cfg.loss(m, u);
      r.signal_w[u] = signal;
      r.interference_noise_w[u] = interference + noise_w;
      if (!p.activates(m)) continue;
      r.rate_bps[u] = rate_from_sinr(cfg.bandwidth_hz, cfg.coding_gap, signal,
                                     r.interference_noise_w[u]);
      const double bits_rate =
          include_bandwidth_in_bits
              ? r.rate_bps[u]
              : r.rate_bps[u] / cfg.bandwidth_hz;
      r.bits[u] =
          static_cast<long long>(std::floor(bits_rate * cfg.slot_seconds));
      if (r.bits[u] < 0) r.bits[u] = 0;
    }
  }
  return r;
}

RateReport compute_rates(const SystemConfig& cfg, const CsiState& csi,
                         const IciPattern& p, const ScheduleAction& s) {
  for (int m = 0; m < cfg.dims.num_bs; ++m)
    if (s.selected_user(m) >= 0 && !p.activates(m))
      throw std::invalid_argument("schedule selects a user at inactive BS " +
                                  std::to_string(m));
  RateReport r = candidate_rates(cfg, csi, p);
  for (int m = 0; m < cfg.dims.num_bs; ++m) {
    for (int k = 0; k < cfg.dims.users_per_bs; ++k) {
      if (s.scheduled(m, k)) continue;
      const int u = cfg.dims.flat(m, k);
      r.rate_bps[u] = 0.0;
      r.bits[u] = 0;
    }
  }
  return r;
}

RateReport reuse_candidate_rates(const SystemConfig& cfg, const CsiState& csi,
                                 const std::vector<int>& colors,
                                 int reuse_factor) {
  const auto& dims = cfg.dims;
  if (static_cast<int>(colors.size()) != dims.num_bs)
    throw ConfigError("reuse coloring needs one color per BS");
  RateReport r;
  r.rate_bps.assign(dims.num_users(), 0.0);
  r.signal_w.assign(dims.num_users(), 0.0);
  r.interference_noise_w.assign(dims.num_users(), 0.0);
  r.bits.assign(dims.num_users(), 0);
  const double bw = cfg.bandwidth_hz / reuse_factor;
  const double noise_w = cfg.noise_psd * bw;
  for (int m = 0; m < dims.num_bs; ++m) {
    for (int k = 0; k < dims.users_per_bs; ++k) {
      const int u = dims.flat(m, k);
      double interference = 0;
      for (int n = 0; n < dims.num_bs; ++n) {
        if (n == m || colors[n] != colors[m]) continue;
        interference += cfg.max_power_w[n] * csi.gain(n, u) * cfg.loss(n, u);
      }
      const double signal = cfg.max_power_w[m] * csi.gain(m, u) * cfg.loss(m, u);
      r.signal_w[u] = signal;
      r.interference_noise_w[u] = interference + noise_w;
      r.rate_bps[u] =
          rate_from_sinr(bw, cfg.coding_gap, signal, r.interference_noise_w[u]);
      r.bits[u] = static_cast<long long>(
          std::floor(r.rate_bps[u] * cfg.slot_seconds));
      if (r.bits[u] < 0) r.bits[u] = 0;
    }
  }
  return r;
}

std::optional<long long> csi_state_count(const ChannelModel& model,
                                         const GridDims& dims, long long cap) {
  if (!model.discrete()) return std::nullopt;
  long long count = 1;
  for (int n = 0; n < dims.num_bs; ++n) {
    for (int u = 0; u < dims.num_users(); ++u) {
      const auto levels =
          static_cast<long long>(model.link(n, u).levels.size());
      if (count > cap / levels) return cap;
      count *= levels;
    }
  }
  return count;
}

double path_loss_gain_db(double pl_const_db, double pl_slope_db,
                         double distance_m) {
  const double pl_db = pl_const_db + pl_slope_db * std::log10(distance_m);
  return std::pow(10.0, -pl_db / 10.0);
}

}  // namespace mcs
