#include "mcs/queueing.hpp"

#include <algorithm>

namespace mcs {

double ArrivalModel::mean(int flat_user) const {
  switch (kind) {
    case Kind::Bernoulli:
      return rate[flat_user];
    case Kind::Deterministic:
      return static_cast<double>(size);
    case Kind::PoissonPackets:
      return rate[flat_user];
  }
  return 0;
}

std::vector<std::pair<long long, double>> ArrivalModel::support(
    int flat_user) const {
  switch (kind) {
    case Kind::Bernoulli: {
      const double p = rate[flat_user];
      if (p >= 1.0) return {{1, 1.0}};
      if (p <= 0.0) return {{0, 1.0}};
      return {{0, 1.0 - p}, {1, p}};
    }
    case Kind::Deterministic:
      return {{size, 1.0}};
    case Kind::PoissonPackets:
      throw UnsupportedInstance(
          "Poisson packet arrivals have no finite support");
  }
  return {};
}

void ArrivalModel::validate(const GridDims& dims, QueueUnit unit) const {
  if (static_cast<int>(rate.size()) != dims.num_users() &&
      kind != Kind::Deterministic)
    throw ConfigError("arrival rates must have one entry per user");
  for (double r : rate)
    if (!(r >= 0)) throw ConfigError("arrival rates must be >= 0");
  switch (kind) {
    case Kind::Bernoulli:
      for (double r : rate)
        if (r > 1.0)
          throw ConfigError("Bernoulli arrival rate must be <= 1");
      if (unit == QueueUnit::Packets)
        throw ConfigError("Bernoulli arrivals run in bits mode");
      break;
    case Kind::Deterministic:
      if (size < 0) throw ConfigError("deterministic arrival size < 0");
      if (unit == QueueUnit::Packets)
        throw ConfigError("deterministic arrivals run in bits mode");
      break;
    case Kind::PoissonPackets:
      if (!(mean_packet_bits > 0))
        throw ConfigError("Poisson packets need a positive mean size");
      if (unit != QueueUnit::Packets)
        throw ConfigError("Poisson packet arrivals require packets mode");
      break;
  }
}

std::vector<long long> sample_arrivals(const ArrivalModel& model,
                                       const GridDims& dims, RngStream& rng) {
  std::vector<long long> a(dims.num_users(), 0);
  for (int u = 0; u < dims.num_users(); ++u) {
    switch (model.kind) {
      case ArrivalModel::Kind::Bernoulli:
        a[u] = rng.bernoulli(model.rate[u]) ? 1 : 0;
        break;
      case ArrivalModel::Kind::Deterministic:
        a[u] = model.size;
        break;
      case ArrivalModel::Kind::PoissonPackets:
        a[u] = rng.poisson(model.rate[u]);
        break;
    }
  }
  return a;
}

SlotOutcome step_queues(const QsiState& q,
                        const std::vector<long long>& served_units,
                        const std::vector<long long>& arrivals) {
  const int n = q.dims().num_users();
  const long long cap = q.buffer_size();
  SlotOutcome out;
  out.post.resize(n);
  out.served.resize(n);
  out.arrived = arrivals;
  out.dropped.resize(n);
  std::vector<long long> next(n);
  for (int i = 0; i < n; ++i) {
    const long long post = std::max<long long>(q.at_flat(i) - served_units[i], 0);
    out.post[i] = post;
    out.served[i] = q.at_flat(i) - post;
    const long long offered = post + arrivals[i];
    out.dropped[i] = std::max<long long>(offered - cap, 0);
    next[i] = std::min(offered, cap);
  }
  out.next = QsiState(q.dims(), static_cast<int>(cap), std::move(next));
  return out;
}

long long PacketBuffers::packets_served(int flat_user,
                                        long long bit_budget) const {
  const auto& q = fifo_[flat_user];
  long long done = 0;
  double budget = static_cast<double>(bit_budget);
  for (double remaining : q) {
    if (budget + 1e-9 < remaining) break;
    budget -= remaining;
    ++done;
  }
  return done;
}

long long PacketBuffers::commit_service(int flat_user, long long bit_budget) {
  auto& q = fifo_[flat_user];
  long long done = 0;
  double budget = static_cast<double>(bit_budget);
  while (!q.empty() && budget + 1e-9 >= q.front()) {
    budget -= q.front();
    q.pop_front();
    ++done;
  }
  if (!q.empty() && budget > 0) q.front() -= budget;
  return done;
}

long long PacketBuffers::push_arrivals(int flat_user,
                                       const std::vector<double>& sizes) {
  auto& q = fifo_[flat_user];
  long long dropped = 0;
  for (double s : sizes) {
    if (static_cast<int>(q.size()) >= buffer_size_)
      ++dropped;
    else
      q.push_back(s);
  }
  return dropped;
}

}  // namespace mcs
