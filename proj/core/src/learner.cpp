#include "mcs/learner.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

namespace mcs {

ServiceDist user_service_dist(const SystemConfig& cfg,
                              const ChannelModel& channel,
                              const IciPattern& pattern, int flat_user,
                              bool include_bandwidth_in_bits,
                              long long combo_cap) {
  if (!channel.discrete())
    throw UnsupportedInstance(
        "service distribution requires a discrete channel model");
  const int m = cfg.dims.bs_of(flat_user);
  if (!pattern.activates(m)) return {{0, 1.0}};

  // Links that matter: the user's own BS plus every other active BS.
  struct Link {
    double power_loss;  // P_n * L_n
    const LinkFading* fading;
    bool own;
  };
  std::vector<Link> links;
  links.push_back({cfg.max_power_w[m] * cfg.loss(m, flat_user),
                   &channel.link(m, flat_user), true});
  for (int n = 0; n < cfg.dims.num_bs; ++n) {
    if (n == m || !pattern.activates(n)) continue;
    links.push_back({cfg.max_power_w[n] * cfg.loss(n, flat_user),
                     &channel.link(n, flat_user), false});
  }

  long long combos = 1;
  for (const auto& l : links) {
    combos *= static_cast<long long>(l.fading->levels.size());
    if (combos > combo_cap)
      throw UnsupportedInstance("fading combination count exceeds cap");
  }

  const double noise_w = cfg.noise_psd * cfg.bandwidth_hz;
  std::map<long long, double> dist;
  std::vector<size_t> idx(links.size(), 0);
  while (true) {
    double prob = 1;
    double signal = 0;
    double interference = 0;
    for (size_t i = 0; i < links.size(); ++i) {
      const auto& [gain, p] = links[i].fading->levels[idx[i]];
      prob *= p;
      if (links[i].own)
        signal = links[i].power_loss * gain;
      else
        interference += links[i].power_loss * gain;
    }
    const double rate = rate_from_sinr(cfg.bandwidth_hz, cfg.coding_gap,
                                       signal, interference + noise_w);
    const double unit_rate =
        include_bandwidth_in_bits ? rate : rate / cfg.bandwidth_hz;
    long long units =
        static_cast<long long>(std::floor(unit_rate * cfg.slot_seconds));
    if (units < 0) units = 0;
    dist[units] += prob;

    size_t d = 0;
    while (d < links.size() && ++idx[d] == links[d].fading->levels.size()) {
      idx[d] = 0;
      ++d;
    }
    if (d == links.size()) break;
  }
  return {dist.begin(), dist.end()};
}

PerUserValueTable PerUserValueTable::init(int buffer_size, int ref_pattern,
                                          double slope) {
  PerUserValueTable t;
  t.v.resize(buffer_size + 1);
  for (int i = 0; i <= buffer_size; ++i) t.v[i] = slope * i;
  t.ref_state = 0;
  t.ref_pattern = ref_pattern;
  return t;
}

double PerUserValueTable::max_abs() const {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

PerUserQTable PerUserQTable::init(int buffer_size, int num_patterns,
                                  int ref_pattern) {
  PerUserQTable t;
  t.buffer_size = buffer_size;
  t.num_patterns = num_patterns;
  t.q.assign((buffer_size + 1) * num_patterns, 0.0);
  t.ref_state = 0;
  t.ref_pattern = ref_pattern;
  return t;
}

double PerUserQTable::row_min(int qi) const {
  double best = at(qi, 0);
  for (int p = 1; p < num_patterns; ++p) best = std::min(best, at(qi, p));
  return best;
}

double PerUserQTable::max_abs() const {
  double m = 0;
  for (double x : q) m = std::max(m, std::abs(x));
  return m;
}

bool update_value(PerUserValueTable& table, const CostModel& cost,
                  int flat_user, long long post_queue, long long arrived,
                  long long served_units, int realized_pattern, double gamma) {
  if (realized_pattern != table.ref_pattern) return false;
  const long long nq = static_cast<long long>(table.v.size()) - 1;
  if (post_queue < 0 || post_queue > nq)
    throw std::out_of_range("post-decision queue outside table range");
  if (arrived < 0 || served_units < 0)
    throw std::out_of_range("negative arrival or service observation");
  const long long pre = std::min(post_queue + arrived, nq);
  const long long next = std::max<long long>(pre - served_units, 0);
  const double target = cost.user_cost(flat_user, pre) + table.v[next] -
                        table.v[table.ref_state] - table.v[post_queue];
  table.v[post_queue] += gamma * target;
  return true;
}

void update_qfactor(PerUserQTable& table, const CostModel& cost, int flat_user,
                    long long pre_queue, int realized_pattern,
                    long long arrived, long long served_units, double gamma) {
  const long long nq = table.buffer_size;
  if (pre_queue < 0 || pre_queue > nq)
    throw std::out_of_range("queue observation outside table range");
  if (realized_pattern < 0 || realized_pattern >= table.num_patterns)
    throw std::out_of_range("pattern index outside catalog");
  if (arrived < 0 || served_units < 0)
    throw std::out_of_range("negative arrival or service observation");
  const long long post = std::max<long long>(pre_queue - served_units, 0);
  const long long next = std::min(post + arrived, nq);
  const double target =
      cost.user_cost(flat_user, pre_queue) -
      table.at(table.ref_state, table.ref_pattern) -
      table.at(static_cast<int>(pre_queue), realized_pattern) +
      table.row_min(static_cast<int>(next));
  table.at(static_cast<int>(pre_queue), realized_pattern) += gamma * target;
}

namespace {

void require_discrete(const ChannelModel& channel, const ArrivalModel& arrivals,
                      const SystemConfig& cfg) {
  if (!channel.discrete())
    throw UnsupportedInstance("fixed-point solver needs a discrete channel");
  if (!arrivals.discrete())
    throw UnsupportedInstance(
        "fixed-point solver needs finite arrival support");
  if (cfg.unit != QueueUnit::Bits)
    throw UnsupportedInstance("fixed-point solver runs on the bit queue grid");
}

// Post-decision kernel row: from q~, arrivals then service under s=1.
void post_decision_row(int nq, long long q_post, const ServiceDist& service,
                       const std::vector<std::pair<long long, double>>& arr,
                       std::vector<double>& row) {
  row.assign(nq + 1, 0.0);
  for (auto [a, pa] : arr) {
    const long long pre = std::min<long long>(q_post + a, nq);
    for (auto [u, pu] : service) {
      const long long next = std::max<long long>(pre - u, 0);
      row[next] += pa * pu;
    }
  }
}

// Pre-decision kernel row under pattern p: service then arrivals.
void pre_decision_row(int nq, long long q_pre, const ServiceDist& service,
                      const std::vector<std::pair<long long, double>>& arr,
                      std::vector<double>& row) {
  row.assign(nq + 1, 0.0);
  for (auto [u, pu] : service) {
    const long long post = std::max<long long>(q_pre - u, 0);
    for (auto [a, pa] : arr) {
      const long long next = std::min<long long>(post + a, nq);
      row[next] += pu * pa;
    }
  }
}

}  // namespace

PerUserValueTable solve_value_fixed_point(const SystemConfig& cfg,
                                          const ChannelModel& channel,
                                          const ArrivalModel& arrivals,
                                          const PatternSet& patterns,
                                          int flat_user,
                                          bool include_bandwidth_in_bits) {
  require_discrete(channel, arrivals, cfg);
  const int nq = cfg.buffer_size;
  const int m = cfg.dims.bs_of(flat_user);
  const int ref_pattern = patterns.reference_pattern(m);
  const ServiceDist service = user_service_dist(
      cfg, channel, patterns.at(ref_pattern), flat_user,
      include_bandwidth_in_bits);
  const auto arr = arrivals.support(flat_user);

  // v + v(ref) e = g~ + P v  ==>  (I - P + e e_ref^T) v = g~.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(nq + 1, nq + 1);
  Eigen::VectorXd g(nq + 1);
  std::vector<double> row;
  for (int qp = 0; qp <= nq; ++qp) {
    post_decision_row(nq, qp, service, arr, row);
    for (int next = 0; next <= nq; ++next) A(qp, next) -= row[next];
    double cost_q = 0;
    for (auto [a, pa] : arr)
      cost_q += pa * cfg.cost.user_cost(flat_user,
                                        std::min<long long>(qp + a, nq));
    g(qp) = cost_q;
  }
  const int ref_state = 0;
  for (int qp = 0; qp <= nq; ++qp) A(qp, ref_state) += 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "per-user value fixed point is singular (rank " +
        std::to_string(lu.rank()) + " of " + std::to_string(nq + 1) +
        "); the service/arrival chain is not unichain");
  Eigen::VectorXd x = lu.solve(g);

  PerUserValueTable t;
  t.v.assign(x.data(), x.data() + nq + 1);
  t.ref_state = ref_state;
  t.ref_pattern = ref_pattern;
  return t;
}

double value_fixed_point_residual(const PerUserValueTable& table,
                                  const SystemConfig& cfg,
                                  const ChannelModel& channel,
                                  const ArrivalModel& arrivals,
                                  const PatternSet& patterns, int flat_user,
                                  bool include_bandwidth_in_bits) {
  require_discrete(channel, arrivals, cfg);
  const int nq = cfg.buffer_size;
  const ServiceDist service = user_service_dist(
      cfg, channel, patterns.at(table.ref_pattern), flat_user,
      include_bandwidth_in_bits);
  const auto arr = arrivals.support(flat_user);
  double worst = 0;
  std::vector<double> row;
  for (int qp = 0; qp <= nq; ++qp) {
    post_decision_row(nq, qp, service, arr, row);
    double rhs = 0;
    for (auto [a, pa] : arr)
      rhs += pa * cfg.cost.user_cost(flat_user, std::min<long long>(qp + a, nq));
    for (int next = 0; next <= nq; ++next) rhs += row[next] * table.v[next];
    const double lhs = table.v[qp] + table.v[table.ref_state];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

PerUserQTable solve_qfactor_fixed_point(const SystemConfig& cfg,
                                        const ChannelModel& channel,
                                        const ArrivalModel& arrivals,
                                        const PatternSet& patterns,
                                        int flat_user,
                                        bool include_bandwidth_in_bits,
                                        double tol, long long max_iters) {
  require_discrete(channel, arrivals, cfg);
  const int nq = cfg.buffer_size;
  const int np = patterns.size();
  const int m = cfg.dims.bs_of(flat_user);
  const int ref_pattern = patterns.reference_pattern(m);
  const auto arr = arrivals.support(flat_user);

  // Pre-decision kernels, one per pattern.
  std::vector<std::vector<double>> kernel(np);  // [p][q * (nq+1) + q']
  std::vector<double> row;
  for (int p = 0; p < np; ++p) {
    const ServiceDist service = user_service_dist(
        cfg, channel, patterns.at(p), flat_user, include_bandwidth_in_bits);
    kernel[p].resize((nq + 1) * (nq + 1));
    for (int q = 0; q <= nq; ++q) {
      pre_decision_row(nq, q, service, arr, row);
      std::copy(row.begin(), row.end(), kernel[p].begin() + q * (nq + 1));
    }
  }

  PerUserQTable t = PerUserQTable::init(nq, np, ref_pattern);
  t.ref_state = 0;
  std::vector<double> next_q(t.q.size());
  std::vector<double> w(nq + 1);
  std::vector<double> spans;
  for (long long it = 0; it < max_iters; ++it) {
    for (int q = 0; q <= nq; ++q) w[q] = t.row_min(q);
    // T(q,p) = beta f(q) + sum_q' P_p(q,q') w(q'), then subtract the
    // reference entry so the relative fixed point is approached.
    for (int q = 0; q <= nq; ++q) {
      const double stage = cfg.cost.user_cost(flat_user, q);
      for (int p = 0; p < np; ++p) {
        double ev = 0;
        const double* krow = kernel[p].data() + q * (nq + 1);
        for (int n = 0; n <= nq; ++n) ev += krow[n] * w[n];
        next_q[q * np + p] = stage + ev;
      }
    }
    const double ref = t.at(t.ref_state, t.ref_pattern);
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < next_q.size(); ++i) {
      next_q[i] -= ref;
      const double d = next_q[i] - t.q[i];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    t.q = next_q;
    const double span = hi - lo;
    spans.push_back(span);
    if (span < tol) return t;
  }
  throw NonConvergence("Q-factor fixed point did not reach tolerance " +
                           std::to_string(tol) + " in " +
                           std::to_string(max_iters) + " iterations",
                       std::move(spans));
}

double qfactor_fixed_point_residual(const PerUserQTable& table,
                                    const SystemConfig& cfg,
                                    const ChannelModel& channel,
                                    const ArrivalModel& arrivals,
                                    const PatternSet& patterns, int flat_user,
                                    bool include_bandwidth_in_bits) {
  require_discrete(channel, arrivals, cfg);
  const int nq = cfg.buffer_size;
  const int np = patterns.size();
  const auto arr = arrivals.support(flat_user);
  double worst = 0;
  std::vector<double> row;
  std::vector<double> w(nq + 1);
  for (int q = 0; q <= nq; ++q) w[q] = table.row_min(q);
  for (int p = 0; p < np; ++p) {
    const ServiceDist service = user_service_dist(
        cfg, channel, patterns.at(p), flat_user, include_bandwidth_in_bits);
    for (int q = 0; q <= nq; ++q) {
      pre_decision_row(nq, q, service, arr, row);
      double rhs = cfg.cost.user_cost(flat_user, q) -
                   table.at(table.ref_state, table.ref_pattern);
      for (int n = 0; n <= nq; ++n) rhs += row[n] * w[n];
      worst = std::max(worst, std::abs(rhs - table.at(q, p)));
    }
  }
  return worst;
}

void record_noise(NoiseDiagnostics& diag, double observed_target,
                  double expected_target) {
  const double z = observed_target - expected_target;
  diag.count += 1;
  diag.sum += z;
  diag.sum_sq += z * z;
}

double expected_value_target(
    const PerUserValueTable& table, const CostModel& cost, int flat_user,
    const ServiceDist& service,
    const std::vector<std::pair<long long, double>>& arrival_support,
    long long post_queue) {
  const long long nq = static_cast<long long>(table.v.size()) - 1;
  double e = 0;
  for (auto [a, pa] : arrival_support) {
    const long long pre = std::min(post_queue + a, nq);
    e += pa * cost.user_cost(flat_user, pre);
    for (auto [u, pu] : service)
      e += pa * pu * table.v[std::max<long long>(pre - u, 0)];
  }
  return e;
}

double expected_qfactor_target(
    const PerUserQTable& table, const CostModel& cost, int flat_user,
    const ServiceDist& service,
    const std::vector<std::pair<long long, double>>& arrival_support,
    long long pre_queue) {
  const long long nq = table.buffer_size;
  double e = cost.user_cost(flat_user, pre_queue);
  for (auto [u, pu] : service) {
    const long long post = std::max(pre_queue - u, 0LL);
    for (auto [a, pa] : arrival_support)
      e += pu * pa * table.row_min(static_cast<int>(std::min(post + a, nq)));
  }
  return e;
}

double observed_value_target(const PerUserValueTable& table,
                             const CostModel& cost, int flat_user,
                             long long post_queue, long long arrived,
                             long long served_units) {
  const long long nq = static_cast<long long>(table.v.size()) - 1;
  const long long pre = std::min(post_queue + arrived, nq);
  const long long next = std::max<long long>(pre - served_units, 0);
  return cost.user_cost(flat_user, pre) + table.v[next];
}

double observed_qfactor_target(const PerUserQTable& table,
                               const CostModel& cost, int flat_user,
                               long long pre_queue, long long arrived,
                               long long served_units) {
  const long long nq = table.buffer_size;
  const long long post = std::max(pre_queue - served_units, 0LL);
  const long long next = std::min(post + arrived, nq);
  return cost.user_cost(flat_user, pre_queue) +
         table.row_min(static_cast<int>(next));
}

}  // namespace mcs
