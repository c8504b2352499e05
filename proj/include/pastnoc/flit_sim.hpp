/*
 * Copyright 2026 The pastnoc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Epoch-level deflection-network simulator.  One packet is one single-flit
// token; every element arbitrates once per epoch with the same behavioral
// contract the gate-level netlist is validated against (route_epoch), so a
// scenario replayed here lands on the same endpoints at the same epochs as
// the pulse-level compositions.  Node traversal is combinational within an
// epoch; inter-node links are retimed and cost a whole number of epochs.

#ifndef PASTNOC_FLIT_SIM_HPP
#define PASTNOC_FLIT_SIM_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pastnoc/router.hpp"
#include "pastnoc/topology.hpp"

namespace pastnoc {

// A traffic pattern whose expected load would exceed an output port's
// capacity, or that is undefined for the requested network.
class InadmissiblePattern : public ConfigError {
 public:
  InadmissiblePattern(const std::string& field, const std::string& msg)
      : ConfigError(field, msg) {}
};

enum class PatternKind {
  UniformRandom,  // destination uniform over all endpoints (self included)
  Tornado,        // dst = (src + ceil(N/2) - 1) mod N
  BitComplement,  // dst = bitwise complement of src within log2(N) bits
  Shuffle,        // dst = rotate-left of the address bits by one
  Transpose,      // dst = swap of the address halves
  WorstCase,      // dst uniform over the source's own sibling pair
  BestCase,       // catalogued conflict-free permutation
  FixedMap,       // explicit per-source destination table
};

const char* pattern_kind_name(PatternKind k);

// Accepts the names above (case-insensitive, with the usual short forms:
// "ur", "bitcomp", "worst", "best", ...).  Throws ConfigError("pattern.kind").
PatternKind parse_pattern_kind(const std::string& name);

// Destination of `src` (1-based) under one of the deterministic address
// permutations (Tornado, BitComplement, Shuffle, Transpose).  `endpoints`
// must be a power of two for the bit-algebraic kinds.
int synthetic_dest(PatternKind kind, int endpoints, int src);

// A per-epoch, per-endpoint injection process.  Destinations are drawn from
// a deterministic per-seed stream; admissibility (no destination offered
// more than one packet per epoch in expectation) is checked at construction.
class TrafficPattern {
 public:
  // Deterministic and sibling-pair kinds need only the endpoint count;
  // BestCase resolves its catalogued permutation from the topology.
  static TrafficPattern make(PatternKind kind, const Topology& t, double rate,
                             std::uint64_t seed);
  static TrafficPattern fixed_map(std::vector<int> dest_by_source, double rate,
                                  std::uint64_t seed);

  PatternKind kind() const { return kind_; }
  double rate() const { return rate_; }
  std::uint64_t seed() const { return seed_; }
  int endpoints() const { return n_; }

  // One destination draw for `src` (1-based).  Deterministic kinds ignore
  // the generator.
  int draw_dest(int src, std::mt19937_64& rng) const;

 private:
  TrafficPattern(PatternKind kind, int n, double rate, std::uint64_t seed,
                 std::vector<int> map);
  void check_admissible() const;

  PatternKind kind_;
  int n_;
  double rate_;
  std::uint64_t seed_;
  std::vector<int> map_;  // deterministic kinds: dest per source (1-based)
};

struct FlitRecord {
  long long id = 0;
  int src = 0, dst = 0;          // endpoint ids, 1-based
  long long inject_epoch = 0;    // epoch the packet entered its source queue
  long long deliver_epoch = -1;  // epoch it reached its destination (-1: not yet)
  int hops = 0;                  // routers traversed (mesh: nodes; flat: elements)
  int deflections = 0;           // grants away from the requested output
  int reinjections = 0;          // retransmissions after a misdelivery
};

// Every packet that reached an endpoint, correct or not.  Scenario replays
// compare this log against the pulse-level deliveries.
struct FlitArrival {
  long long epoch = 0;
  int endpoint = 0;  // 1-based
  long long flit = 0;
  int dest = 0;
  bool correct = false;
  std::vector<int> data;  // scenario payload (empty in traffic mode)
};

struct FlitOptions {
  // Re-transmit a misdelivered packet from the endpoint that received it.
  // On for traffic studies; off when replaying pulse-level scenarios, whose
  // receivers cannot re-inject.
  bool reinject_misdelivered = true;
  // Randomized arbitration: per element, per epoch, a rand pulse fires with
  // probability rand_q.  At q = 0.5 the draw is bit-compatible with the
  // pulse compositions (one mt19937 word per element, low bit).
  std::uint64_t arb_seed = 1;
  double rand_q = 0.5;
  // Draw rand pulses only for epochs below this limit (-1: no limit); the
  // pulse compositions stop their generator at the scenario horizon.
  long long rand_epoch_limit = -1;
};

class FlitSim {
 public:
  explicit FlitSim(const Topology& t, FlitOptions opt = {});

  // Traffic mode: one Bernoulli(rate) draw per endpoint per epoch.
  void attach(const TrafficPattern& p);
  // Scenario mode: enqueue one packet at `epoch` (>= current epoch).
  void inject_at(long long epoch, int endpoint, int dest,
                 std::vector<int> data = {});

  void step();
  void run(long long epochs);
  long long epoch() const { return epoch_; }

  const std::vector<FlitRecord>& records() const { return records_; }
  const std::vector<FlitArrival>& arrivals() const { return arrivals_; }

  long long injected() const { return static_cast<long long>(records_.size()); }
  long long delivered() const { return delivered_; }
  long long absorbed_misdeliveries() const { return absorbed_; }
  long long in_flight() const { return in_flight_; }
  long long queued() const { return queued_; }
  int max_queue_depth() const { return max_queue_depth_; }
  // injected == delivered + absorbed + in-flight + queued, every epoch.
  bool conservation_ok() const { return conservation_ok_; }

  const std::vector<long long>& delivered_by_endpoint() const {
    return delivered_by_endpoint_;
  }
  // Arbitration participations and deflections, tallied by the packet's
  // 1-based hop index at the element ([0] = first hop).
  const std::vector<long long>& hop_attempts() const { return hop_attempts_; }
  const std::vector<long long>& hop_deflections() const {
    return hop_deflections_;
  }
  long long total_attempts() const { return total_attempts_; }
  long long total_deflections() const { return total_deflections_; }

 private:
  struct Token {
    int rec = 0;
    int dest = 0;
    int last_node = -2;  // -2: fresh from an endpoint
    std::vector<int> data;
  };
  struct Placement {
    int element = 0;
    int port = 0;
    Token tok;
  };

  void place(int element, int port, Token&& tok);
  void sink(const SinkRef& s, int from_element, Token&& tok);
  void handle_output(int element, Token&& tok, Port granted);
  bool draw_rand_bit();
  int new_record(int src, int dest, long long epoch);

  const Topology* topo_;
  FlitOptions opt_;
  std::optional<TrafficPattern> pattern_;
  std::mt19937 arb_rng_;
  std::mt19937_64 traffic_rng_;

  long long epoch_ = 0;
  std::vector<ArbiterState> arb_;
  std::vector<std::array<std::optional<Token>, 2>> occ_;
  std::vector<std::vector<Placement>> ring_;  // future link arrivals
  std::map<long long, std::vector<std::pair<int, Token>>> scheduled_;
  std::vector<std::deque<Token>> queue_;  // per endpoint
  std::vector<int> stage_order_;          // element ids, ascending (stage, id)

  std::vector<FlitRecord> records_;
  std::vector<FlitArrival> arrivals_;
  long long delivered_ = 0, absorbed_ = 0, in_flight_ = 0, queued_ = 0;
  int max_queue_depth_ = 0;
  bool conservation_ok_ = true;
  std::vector<long long> delivered_by_endpoint_;
  std::vector<long long> hop_attempts_, hop_deflections_;
  long long total_attempts_ = 0, total_deflections_ = 0;
};

// Steady-state measurement: run `warmup` epochs, then account over the next
// `sample` epochs.
struct FlitMetrics {
  long long warmup = 0, sample = 0;
  long long injected = 0, delivered = 0;
  double throughput_per_port = 0.0;  // correct deliveries / endpoint / epoch
  double deflection_prob = 0.0;      // deflections per arbitration
  std::vector<double> hop_deflection_prob;  // by hop index
  double avg_latency = 0.0;          // epochs, delivered in the window
  double p50_latency = 0.0, p99_latency = 0.0;
  double worst_endpoint_fraction = 0.0;  // min per-endpoint delivery rate
  int max_queue_depth = 0;
};

FlitMetrics measure(const Topology& t, const TrafficPattern& p,
                    long long warmup = 1000, long long sample = 10000,
                    FlitOptions opt = {});

// Adversarial livelock probe on the 8-endpoint mesh: a victim packet whose
// shortest path re-tries a contested output every fourth epoch while a
// local stream holds the other input and helper packets keep the arbiter's
// conflict parity against it.  Pure round robin deflects the victim for as
// long as the probe runs; randomized round robin breaks the parity loop.
struct LivelockReport {
  bool victim_delivered = false;
  long long victim_age = 0;  // deliver - inject, or max_epochs if undelivered
  int victim_hops = 0;
  long long max_epochs = 0;
};

LivelockReport livelock_probe(ArbiterPolicy policy, long long max_epochs,
                              std::uint64_t arb_seed = 1, double rand_q = 0.25,
                              bool adversary = true);

}  // namespace pastnoc

#endif  // PASTNOC_FLIT_SIM_HPP
