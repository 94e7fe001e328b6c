#pragma once

#include <deque>
#include <vector>

#include "mcs/rng.hpp"
#include "mcs/types.hpp"

namespace mcs {

// Per-user i.i.d. arrival process, in queue units per slot.
//   Bernoulli:      one unit arrives with probability rate (rate <= 1).
//   Deterministic:  `size` units arrive every slot.
//   PoissonPackets: Poisson(rate) packets, sizes i.i.d. exponential with
//                   mean mean_packet_bits (packets mode only).
struct ArrivalModel {
  enum class Kind { Bernoulli, Deterministic, PoissonPackets };
  Kind kind = Kind::Bernoulli;
  std::vector<double> rate;   // per flat user
  long long size = 1;         // Deterministic: units per slot
  double mean_packet_bits = 0;

  // Mean arrivals per slot in queue units.
  double mean(int flat_user) const;
  // Finite support {(amount, prob)} for the discrete kinds; throws
  // UnsupportedInstance for PoissonPackets.
  std::vector<std::pair<long long, double>> support(int flat_user) const;
  bool discrete() const { return kind != Kind::PoissonPackets; }
  void validate(const GridDims& dims, QueueUnit unit) const;
};

// Result of one slot's service + arrival step for all users.
struct SlotOutcome {
  QsiState next;                 // min((q - u)^+ + a, buffer)
  std::vector<long long> post;   // q~ = (q - u)^+
  std::vector<long long> served;  // q - q~ (units actually delivered)
  std::vector<long long> arrived;  // offered arrivals a
  std::vector<long long> dropped;  // ((q~ + a) - buffer)^+
};

// Independent per-user draws; deterministic given the stream state.
// Returns arrivals in queue units (packet counts for PoissonPackets).
std::vector<long long> sample_arrivals(const ArrivalModel& model,
                                       const GridDims& dims, RngStream& rng);

// Applies the queue recursion exactly: q~ = (q - u)^+,
// next = min(q~ + a, buffer), dropped = (q~ + a - buffer)^+.
SlotOutcome step_queues(const QsiState& q, const std::vector<long long>& served_units,
                        const std::vector<long long>& arrivals);

// Packet-mode side state: the FIFO of per-packet remaining bits for each
// user. Queue lengths count packets; a bit budget delivered in one slot
// completes whole head-of-line packets, with progress into a partially
// sent head packet carried across slots.
class PacketBuffers {
 public:
  PacketBuffers() = default;
  PacketBuffers(GridDims dims, int buffer_size)
      : buffer_size_(buffer_size), fifo_(dims.num_users()) {}

  // Packets a bit budget would complete, without mutating.
  long long packets_served(int flat_user, long long bit_budget) const;
  // Consume the budget: pops completed packets, advances the head packet.
  long long commit_service(int flat_user, long long bit_budget);
  // Append arriving packets with the given sizes; returns packets dropped
  // because the buffer was full.
  long long push_arrivals(int flat_user, const std::vector<double>& sizes);

  long long queue_len(int flat_user) const {
    return static_cast<long long>(fifo_[flat_user].size());
  }

 private:
  int buffer_size_ = 0;
  std::vector<std::deque<double>> fifo_;  // remaining bits per packet
};

}  // namespace mcs
