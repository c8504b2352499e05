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

#include "pastnoc/flit_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pastnoc {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2i(int n) {
  int b = 0;
  while ((1 << b) < n) ++b;
  return b;
}

// Unbiased draw from [0, n) by rejection.
std::uint64_t rand_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Uniform in [0, 1) with 53-bit resolution.
double rand01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Conflict-free permutation for the 8-endpoint mesh: one local delivery and
// one ring transfer per node, arranged so every element sees at most one
// packet per output and every link carries at most one packet per epoch.
const int kMesh8BestCase[8] = {4, 1, 8, 3, 6, 2, 5, 7};

}  // namespace

const char* pattern_kind_name(PatternKind k) {
  switch (k) {
    case PatternKind::UniformRandom: return "uniform";
    case PatternKind::Tornado: return "tornado";
    case PatternKind::BitComplement: return "bitcomp";
    case PatternKind::Shuffle: return "shuffle";
    case PatternKind::Transpose: return "transpose";
    case PatternKind::WorstCase: return "worst";
    case PatternKind::BestCase: return "best";
    case PatternKind::FixedMap: return "fixed";
  }
  return "?";
}

PatternKind parse_pattern_kind(const std::string& name) {
  const std::string s = lower(name);
  if (s == "uniform" || s == "ur" || s == "uniform_random" || s == "random")
    return PatternKind::UniformRandom;
  if (s == "tornado") return PatternKind::Tornado;
  if (s == "bitcomp" || s == "bit_complement" || s == "bitcomplement")
    return PatternKind::BitComplement;
  if (s == "shuffle") return PatternKind::Shuffle;
  if (s == "transpose") return PatternKind::Transpose;
  if (s == "worst" || s == "worstcase" || s == "worst_case")
    return PatternKind::WorstCase;
  if (s == "best" || s == "bestcase" || s == "best_case")
    return PatternKind::BestCase;
  if (s == "fixed" || s == "fixedmap" || s == "fixed_map")
    return PatternKind::FixedMap;
  throw ConfigError("pattern.kind", "unknown traffic pattern '" + name + "'");
}

int synthetic_dest(PatternKind kind, int endpoints, int src) {
  if (src < 1 || src > endpoints)
    throw std::out_of_range("synthetic_dest: source out of range");
  const int n = endpoints;
  const int a = src - 1;  // 0-based address
  if (kind == PatternKind::Tornado) return (a + (n + 1) / 2 - 1) % n + 1;
  if (!is_pow2(n))
    throw InadmissiblePattern("pattern.kind",
                              std::string(pattern_kind_name(kind)) +
                                  " needs a power-of-two endpoint count");
  const int b = log2i(n);
  switch (kind) {
    case PatternKind::BitComplement:
      return (~a & (n - 1)) + 1;
    case PatternKind::Shuffle:
      if (b == 0) return 1;
      return (((a << 1) | (a >> (b - 1))) & (n - 1)) + 1;
    case PatternKind::Transpose: {
      // Swap the outer address halves; an odd middle bit stays in place.
      const int h = b / 2;
      const int low = a & ((1 << h) - 1);
      const int high = a >> (b - h);
      const int mid = (a >> h) & ((1 << (b - 2 * h)) - 1);
      return ((low << (b - h)) | (mid << h) | high) + 1;
    }
    default:
      throw std::invalid_argument("synthetic_dest: kind is not deterministic");
  }
}

TrafficPattern::TrafficPattern(PatternKind kind, int n, double rate,
                               std::uint64_t seed, std::vector<int> map)
    : kind_(kind), n_(n), rate_(rate), seed_(seed), map_(std::move(map)) {
  if (rate_ < 0.0 || rate_ > 1.0)
    throw InadmissiblePattern("pattern.rate",
                              "injection rate must be within [0, 1]");
  check_admissible();
}

void TrafficPattern::check_admissible() const {
  // Expected packets per destination per epoch must not exceed the one
  // delivery per endpoint per epoch the network can retire.
  std::vector<double> load(static_cast<size_t>(n_), 0.0);
  switch (kind_) {
    case PatternKind::UniformRandom:
      for (double& l : load) l = rate_;  // n sources, 1/n each
      break;
    case PatternKind::WorstCase:
      for (int s = 1; s <= n_; ++s) {
        const int base = ((s - 1) & ~1) + 1;
        load[base - 1] += rate_ / 2.0;
        load[base] += rate_ / 2.0;
      }
      break;
    default:
      for (int s = 1; s <= n_; ++s) load[map_[s - 1] - 1] += rate_;
      break;
  }
  for (int d = 1; d <= n_; ++d) {
    if (load[d - 1] > 1.0 + 1e-9)
      throw InadmissiblePattern(
          "pattern.rate", "destination " + std::to_string(d) + " is offered " +
                              std::to_string(load[d - 1]) +
                              " packets per epoch");
  }
}

TrafficPattern TrafficPattern::make(PatternKind kind, const Topology& t,
                                    double rate, std::uint64_t seed) {
  const int n = t.endpoint_count;
  std::vector<int> map;
  switch (kind) {
    case PatternKind::UniformRandom:
    case PatternKind::WorstCase:
      if (kind == PatternKind::WorstCase && n % 2 != 0)
        throw InadmissiblePattern("pattern.kind",
                                  "sibling-pair pattern needs an even endpoint count");
      break;
    case PatternKind::Tornado:
    case PatternKind::BitComplement:
    case PatternKind::Shuffle:
    case PatternKind::Transpose:
      map.resize(static_cast<size_t>(n));
      for (int s = 1; s <= n; ++s) map[s - 1] = synthetic_dest(kind, n, s);
      break;
    case PatternKind::BestCase:
      map.resize(static_cast<size_t>(n));
      if (t.kind == TopologyKind::ConcentratedMesh) {
        if (n != 8)
          throw InadmissiblePattern(
              "pattern.kind",
              "no conflict-free permutation catalogued for " + t.name);
        for (int s = 1; s <= n; ++s) map[s - 1] = kMesh8BestCase[s - 1];
      } else {
        // Bit reversal splits every stage of a banyan evenly; by the
        // recursive construction no two packets ever share an output.
        const int b = log2i(n);
        for (int s = 1; s <= n; ++s) {
          int a = s - 1, r = 0;
          for (int i = 0; i < b; ++i) r |= ((a >> i) & 1) << (b - 1 - i);
          map[s - 1] = r + 1;
        }
      }
      break;
    case PatternKind::FixedMap:
      throw std::invalid_argument("use TrafficPattern::fixed_map");
  }
  return TrafficPattern(kind, n, rate, seed, std::move(map));
}

TrafficPattern TrafficPattern::fixed_map(std::vector<int> dest_by_source,
                                         double rate, std::uint64_t seed) {
  const int n = static_cast<int>(dest_by_source.size());
  for (int d : dest_by_source) {
    if (d < 1 || d > n)
      throw InadmissiblePattern("pattern.map", "destination out of range");
  }
  return TrafficPattern(PatternKind::FixedMap, n, rate, seed,
                        std::move(dest_by_source));
}

int TrafficPattern::draw_dest(int src, std::mt19937_64& rng) const {
  switch (kind_) {
    case PatternKind::UniformRandom:
      return static_cast<int>(rand_below(rng, static_cast<std::uint64_t>(n_))) + 1;
    case PatternKind::WorstCase: {
      const int base = ((src - 1) & ~1) + 1;
      return base + static_cast<int>(rng() & 1u);
    }
    default:
      return map_[static_cast<size_t>(src - 1)];
  }
}

// ---------------------------------------------------------------------------
// FlitSim
// ---------------------------------------------------------------------------

FlitSim::FlitSim(const Topology& t, FlitOptions opt)
    : topo_(&t),
      opt_(opt),
      arb_rng_(static_cast<std::uint32_t>(opt.arb_seed)),
      traffic_rng_(1),
      arb_(t.elements.size()),
      occ_(t.elements.size()),
      queue_(static_cast<size_t>(t.endpoint_count)),
      delivered_by_endpoint_(static_cast<size_t>(t.endpoint_count), 0) {
  const int span = std::max(1, t.link_epochs) + 1;
  ring_.resize(static_cast<size_t>(span));
  stage_order_.resize(t.elements.size());
  std::iota(stage_order_.begin(), stage_order_.end(), 0);
  std::stable_sort(stage_order_.begin(), stage_order_.end(), [&](int x, int y) {
    return t.elements[static_cast<size_t>(x)].stage <
           t.elements[static_cast<size_t>(y)].stage;
  });
}

void FlitSim::attach(const TrafficPattern& p) {
  if (p.endpoints() != topo_->endpoint_count)
    throw InadmissiblePattern("pattern.endpoints",
                              "pattern endpoint count does not match topology");
  pattern_ = p;
  traffic_rng_.seed(p.seed());
}

void FlitSim::inject_at(long long epoch, int endpoint, int dest,
                        std::vector<int> data) {
  if (epoch < epoch_)
    throw std::invalid_argument("inject_at: epoch already simulated");
  if (endpoint < 1 || endpoint > topo_->endpoint_count)
    throw std::out_of_range("inject_at: endpoint out of range");
  if (dest < 1 || dest > topo_->endpoint_count)
    throw std::out_of_range("inject_at: destination out of range");
  Token tok;
  tok.dest = dest;
  tok.data = std::move(data);
  scheduled_[epoch].emplace_back(endpoint, std::move(tok));
}

int FlitSim::new_record(int src, int dest, long long epoch) {
  FlitRecord r;
  r.id = static_cast<long long>(records_.size());
  r.src = src;
  r.dst = dest;
  r.inject_epoch = epoch;
  records_.push_back(r);
  return static_cast<int>(r.id);
}

bool FlitSim::draw_rand_bit() {
  const std::uint32_t v = arb_rng_();
  if (opt_.rand_q == 0.5) return (v & 1u) != 0;  // pulse-composition convention
  return static_cast<double>(v) < opt_.rand_q * 4294967296.0;
}

void FlitSim::place(int element, int port, Token&& tok) {
  auto& slot = occ_[static_cast<size_t>(element)][static_cast<size_t>(port)];
  if (slot.has_value()) {
    // Two packets on one input is a wiring violation, not a traffic state.
    conservation_ok_ = false;
    return;
  }
  const int node = topo_->elements[static_cast<size_t>(element)].node;
  if (node < 0 || node != tok.last_node) {
    records_[static_cast<size_t>(tok.rec)].hops++;
    tok.last_node = node;
  }
  slot = std::move(tok);
}

void FlitSim::sink(const SinkRef& s, int from_element, Token&& tok) {
  if (s.kind == SinkRef::ToEndpoint) {
    const long long cur = epoch_;
    FlitRecord& rec = records_[static_cast<size_t>(tok.rec)];
    const bool correct = (tok.dest == s.index);
    arrivals_.push_back({cur, s.index, rec.id, tok.dest, correct, tok.data});
    if (correct) {
      rec.deliver_epoch = cur;
      ++delivered_;
      ++delivered_by_endpoint_[static_cast<size_t>(s.index - 1)];
    } else if (opt_.reinject_misdelivered) {
      ++rec.reinjections;
      tok.last_node = -2;
      queue_[static_cast<size_t>(s.index - 1)].push_back(std::move(tok));
    } else {
      ++absorbed_;
    }
    return;
  }
  const auto& from = topo_->elements[static_cast<size_t>(from_element)];
  const auto& to = topo_->elements[static_cast<size_t>(s.index)];
  if (from.node >= 0 && to.node != from.node) {
    // Inter-node link: retimed, arrives a whole number of epochs later.
    const size_t at =
        static_cast<size_t>((epoch_ + topo_->link_epochs) %
                            static_cast<long long>(ring_.size()));
    ring_[at].push_back({s.index, s.port, std::move(tok)});
    ++in_flight_;
  } else {
    place(s.index, s.port, std::move(tok));
  }
}

void FlitSim::handle_output(int element, Token&& tok, Port granted) {
  const auto& el = topo_->elements[static_cast<size_t>(element)];
  const Port requested = tok.dest <= el.thr_slot ? Port::Top : Port::Bottom;
  FlitRecord& rec = records_[static_cast<size_t>(tok.rec)];
  const size_t hop = static_cast<size_t>(std::max(rec.hops, 1));
  if (hop_attempts_.size() < hop) {
    hop_attempts_.resize(hop, 0);
    hop_deflections_.resize(hop, 0);
  }
  ++hop_attempts_[hop - 1];
  ++total_attempts_;
  if (granted != requested) {
    ++rec.deflections;
    ++hop_deflections_[hop - 1];
    ++total_deflections_;
  }
  sink(granted == Port::Top ? el.out_top : el.out_bottom, element,
       std::move(tok));
}

void FlitSim::step() {
  const long long cur = epoch_;
  const int n = topo_->endpoint_count;

  // Link arrivals scheduled for this epoch.
  auto& due = ring_[static_cast<size_t>(cur % static_cast<long long>(ring_.size()))];
  for (auto& p : due) {
    --in_flight_;
    place(p.element, p.port, std::move(p.tok));
  }
  due.clear();

  // New packets enter their source queues: scheduled scenario packets
  // first, then one pattern draw per endpoint.
  if (auto it = scheduled_.find(cur); it != scheduled_.end()) {
    for (auto& [ep, tok] : it->second) {
      tok.rec = new_record(ep, tok.dest, cur);
      queue_[static_cast<size_t>(ep - 1)].push_back(std::move(tok));
    }
    scheduled_.erase(it);
  }
  if (pattern_ && pattern_->rate() > 0.0) {
    for (int ep = 1; ep <= n; ++ep) {
      if (rand01(traffic_rng_) >= pattern_->rate()) continue;
      Token tok;
      tok.dest = pattern_->draw_dest(ep, traffic_rng_);
      tok.rec = new_record(ep, tok.dest, cur);
      queue_[static_cast<size_t>(ep - 1)].push_back(std::move(tok));
    }
  }

  // One packet per endpoint enters the network each epoch.
  for (int ep = 1; ep <= n; ++ep) {
    auto& q = queue_[static_cast<size_t>(ep - 1)];
    max_queue_depth_ = std::max(max_queue_depth_, static_cast<int>(q.size()));
    if (q.empty()) continue;
    const auto [el, port] = topo_->inject[static_cast<size_t>(ep - 1)];
    Token tok = std::move(q.front());
    q.pop_front();
    place(el, port, std::move(tok));
  }

  // Randomized arbitration pulses, one word per element in id order.
  std::vector<char> bits;
  if (topo_->policy == ArbiterPolicy::RandomizedRR &&
      (opt_.rand_epoch_limit < 0 || cur < opt_.rand_epoch_limit)) {
    bits.resize(topo_->elements.size(), 0);
    for (size_t e = 0; e < bits.size(); ++e) bits[e] = draw_rand_bit() ? 1 : 0;
  }

  // Arbitrate in stage order; same-node forwards land later in the same
  // epoch, link crossings in a future one.
  for (int el : stage_order_) {
    auto& slots = occ_[static_cast<size_t>(el)];
    const bool rb = !bits.empty() && bits[static_cast<size_t>(el)] != 0;
    if (!slots[0] && !slots[1]) {
      // The rand pulse reaches the conflict counter even with no packets.
      if (rb) ++arb_[static_cast<size_t>(el)].tff_count;
      continue;
    }
    const auto& e = topo_->elements[static_cast<size_t>(el)];
    std::optional<Packet> pa, pb;
    if (slots[0]) pa = Packet{slots[0]->dest, {}};
    if (slots[1]) pb = Packet{slots[1]->dest, {}};
    const RouteResult rr =
        route_epoch(arb_[static_cast<size_t>(el)], topo_->policy, e.thr_slot,
                    pa, pb, rb);
    std::optional<Token> a = std::move(slots[0]), b = std::move(slots[1]);
    slots[0].reset();
    slots[1].reset();
    if (a) handle_output(el, std::move(*a), *rr.decision.out_a);
    if (b) handle_output(el, std::move(*b), *rr.decision.out_b);
  }

  // Conservation: everything injected is accounted for somewhere.
  queued_ = 0;
  for (const auto& q : queue_) queued_ += static_cast<long long>(q.size());
  long long waiting = 0;
  for (const auto& r : ring_) waiting += static_cast<long long>(r.size());
  if (waiting != in_flight_ ||
      injected() != delivered_ + absorbed_ + in_flight_ + queued_)
    conservation_ok_ = false;

  epoch_ = cur + 1;
}

void FlitSim::run(long long epochs) {
  for (long long i = 0; i < epochs; ++i) step();
}

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

namespace {

double percentile(std::vector<long long>& v, double q) {
  if (v.empty()) return 0.0;
  const size_t idx = static_cast<size_t>(
      std::min<double>(static_cast<double>(v.size()) - 1.0,
                       std::ceil(q * static_cast<double>(v.size())) - 1.0));
  std::nth_element(v.begin(), v.begin() + static_cast<long>(idx), v.end());
  return static_cast<double>(v[idx]);
}

}  // namespace

FlitMetrics measure(const Topology& t, const TrafficPattern& p,
                    long long warmup, long long sample, FlitOptions opt) {
  FlitSim sim(t, opt);
  sim.attach(p);
  sim.run(warmup);

  const long long injected0 = sim.injected();
  const long long delivered0 = sim.delivered();
  const std::vector<long long> by_ep0 = sim.delivered_by_endpoint();
  const std::vector<long long> at0 = sim.hop_attempts();
  const std::vector<long long> def0 = sim.hop_deflections();
  const long long ta0 = sim.total_attempts(), td0 = sim.total_deflections();

  sim.run(sample);

  FlitMetrics m;
  m.warmup = warmup;
  m.sample = sample;
  m.injected = sim.injected() - injected0;
  m.delivered = sim.delivered() - delivered0;
  m.throughput_per_port =
      static_cast<double>(m.delivered) /
      (static_cast<double>(t.endpoint_count) * static_cast<double>(sample));
  const long long attempts = sim.total_attempts() - ta0;
  const long long defl = sim.total_deflections() - td0;
  m.deflection_prob =
      attempts > 0 ? static_cast<double>(defl) / static_cast<double>(attempts)
                   : 0.0;
  m.hop_deflection_prob.resize(sim.hop_attempts().size(), 0.0);
  for (size_t h = 0; h < sim.hop_attempts().size(); ++h) {
    const long long a =
        sim.hop_attempts()[h] - (h < at0.size() ? at0[h] : 0);
    const long long d =
        sim.hop_deflections()[h] - (h < def0.size() ? def0[h] : 0);
    m.hop_deflection_prob[h] =
        a > 0 ? static_cast<double>(d) / static_cast<double>(a) : 0.0;
  }

  double worst = 1.0;
  for (size_t e = 0; e < by_ep0.size(); ++e) {
    const double rate = static_cast<double>(sim.delivered_by_endpoint()[e] -
                                            by_ep0[e]) /
                        static_cast<double>(sample);
    worst = std::min(worst, rate);
  }
  m.worst_endpoint_fraction = worst;

  std::vector<long long> lat;
  const long long lo = warmup, hi = warmup + sample;
  double lat_sum = 0.0;
  for (const auto& r : sim.records()) {
    if (r.deliver_epoch >= lo && r.deliver_epoch < hi) {
      lat.push_back(r.deliver_epoch - r.inject_epoch);
      lat_sum += static_cast<double>(lat.back());
    }
  }
  m.avg_latency = lat.empty() ? 0.0 : lat_sum / static_cast<double>(lat.size());
  m.p50_latency = percentile(lat, 0.50);
  m.p99_latency = percentile(lat, 0.99);
  m.max_queue_depth = sim.max_queue_depth();
  return m;
}

// ---------------------------------------------------------------------------
// Livelock probe
// ---------------------------------------------------------------------------

LivelockReport livelock_probe(ArbiterPolicy policy, long long max_epochs,
                              std::uint64_t arb_seed, double rand_q,
                              bool adversary) {
  Topology t = build_named("mesh8", 20, policy);
  FlitOptions opt;
  opt.reinject_misdelivered = false;  // wrong receivers absorb, like the probe rigs
  opt.arb_seed = arb_seed;
  opt.rand_q = rand_q;
  FlitSim sim(t, opt);

  // Victim: a through packet from the south-west node whose shortest path
  // re-tries the first node's east output every fourth epoch.
  sim.inject_at(0, 6, 4);
  if (adversary) {
    // A local stream holds the east output's other input every epoch, and a
    // helper packet every fourth epoch lands the arbiter's even conflicts
    // so the victim always arrives on an odd one.
    for (long long k = 0; k < max_epochs; ++k) sim.inject_at(k, 1, 4);
    for (long long k = 3; k < max_epochs; k += 4) sim.inject_at(k, 5, 3);
  }

  LivelockReport rep;
  rep.max_epochs = max_epochs;
  const long long victim = 0;  // first record
  for (long long e = 0; e < max_epochs; ++e) {
    sim.step();
    if (sim.records()[victim].deliver_epoch >= 0) break;
  }
  const FlitRecord& v = sim.records()[static_cast<size_t>(victim)];
  rep.victim_delivered = v.deliver_epoch >= 0;
  rep.victim_age =
      rep.victim_delivered ? v.deliver_epoch - v.inject_epoch : max_epochs;
  rep.victim_hops = v.hops;
  return rep;
}

}  // namespace pastnoc
