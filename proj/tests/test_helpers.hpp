#pragma once

#include <vector>

#include "mcs/config.hpp"
#include "mcs/sim.hpp"

namespace mcs_test {

// Two BSs, two users each, buffer 3 bits, unit path loss, two-level
// fading with equal probability, catalog {01, 10, 11}. With unit
// bandwidth/slot/noise and gains {3, 1}: solo service delivers 2 or 1
// bits; under the both-active pattern 1 or 0 bits.
inline mcs::RunModels two_cell_models(double bernoulli_rate = 0.4,
                                      double good_gain = 3.0,
                                      double bad_gain = 1.0) {
  mcs::RunModels m;
  m.cfg.dims = {2, 2};
  m.cfg.slot_seconds = 1.0;
  m.cfg.bandwidth_hz = 1.0;
  m.cfg.noise_psd = 1.0;
  m.cfg.coding_gap = 1.0;
  m.cfg.max_power_w = {1.0, 1.0};
  m.cfg.path_loss.assign(2 * 4, 1.0);
  m.cfg.buffer_size = 3;
  m.cfg.unit = mcs::QueueUnit::Bits;
  m.cfg.cost.kind = mcs::CostKind::NormalizedQueue;
  m.cfg.cost.beta.assign(4, 1.0);
  m.cfg.cost.lambda.assign(4, bernoulli_rate);
  m.cfg.cost.buffer_size = 3;

  m.channel.base.kind = mcs::LinkFading::Kind::DiscreteLevels;
  m.channel.base.levels = {{good_gain, 0.5}, {bad_gain, 0.5}};

  m.arrivals.kind = mcs::ArrivalModel::Kind::Bernoulli;
  m.arrivals.rate.assign(4, bernoulli_rate);

  m.patterns = mcs::PatternSet::all_nonempty(2);
  return m;
}

// One BS, one user: the smallest instance with a nontrivial queue.
inline mcs::RunModels single_cell_models(int buffer, double rate,
                                         double gain) {
  mcs::RunModels m;
  m.cfg.dims = {1, 1};
  m.cfg.slot_seconds = 1.0;
  m.cfg.bandwidth_hz = 1.0;
  m.cfg.noise_psd = 1.0;
  m.cfg.coding_gap = 1.0;
  m.cfg.max_power_w = {1.0};
  m.cfg.path_loss = {1.0};
  m.cfg.buffer_size = buffer;
  m.cfg.unit = mcs::QueueUnit::Bits;
  m.cfg.cost.kind = mcs::CostKind::NormalizedQueue;
  m.cfg.cost.beta = {1.0};
  m.cfg.cost.lambda = {rate};
  m.cfg.cost.buffer_size = buffer;

  m.channel.base.kind = mcs::LinkFading::Kind::DiscreteLevels;
  m.channel.base.levels = {{gain, 1.0}};

  m.arrivals.kind = mcs::ArrivalModel::Kind::Bernoulli;
  m.arrivals.rate = {rate};

  m.patterns = mcs::PatternSet::all_nonempty(1);
  return m;
}

inline mcs::QsiState make_q(const mcs::RunModels& m,
                            std::vector<long long> q) {
  return mcs::QsiState(m.cfg.dims, m.cfg.buffer_size, std::move(q));
}

}  // namespace mcs_test
