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

#include "pastnoc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pastnoc {

namespace {

// Published reference figures for the area model.  The reference 2x2
// router (D = 2, 10-stage input registers) costs 481 JJ; a randomized
// arbiter adds a 24 JJ randomizer plus a 3 JJ PRNG fan-out.  The two
// input registers account for 44 JJ of the reference total, which is the
// only geometry-dependent part of the census.
constexpr long kReferenceRouterJj = 481;
constexpr long kReferenceSrPairJj = 44;
constexpr long kRandomizerJj = 24;
constexpr long kPrngFanoutJj = 3;
// Published per-router in-to-out latency; sizes retimers on the
// reference basis.
constexpr double kReferenceHopLatencyPs = 213.41;
// Per link channel: clock splitter (3) + interface jtl (2).
constexpr long kRetimerInterfaceJj = 5;

// Minimum retimer delay: half a control slot of tolerated skew plus one
// slot of capture-to-launch turnaround.
SimTime retime_margin(const RaceLogicConfig& rl) {
  return rl.control_slot + rl.control_slot / 2;
}

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int ilog2(int v) {
  int s = 0;
  while ((1 << s) < v) ++s;
  return s;
}

// One output of a node's internal routing tree: a contiguous destination
// range ending in either a local endpoint or a link channel.
struct Leaf {
  int lo = 0, hi = 0;
  SinkRef sink;
};

// Recursively builds the binary routing tree over leaves
// [first, first+count).  Each element splits the remaining destination
// range at the upper edge of its top half.  Returns the element input
// ports in order: two per first-column element, top subtree first.
std::vector<std::pair<int, int>> build_tree(Topology& t, int node, int stage,
                                            const std::vector<Leaf>& lv,
                                            int first, int count) {
  if (count == 2) {
    Element2x2 e;
    e.id = int(t.elements.size());
    e.node = node;
    e.stage = stage;
    e.thr_slot = lv[first].hi;
    e.out_top = lv[first].sink;
    e.out_bottom = lv[first + 1].sink;
    t.elements.push_back(e);
    return {{e.id, 0}, {e.id, 1}};
  }
  auto top = build_tree(t, node, stage + 1, lv, first, count / 2);
  auto bot = build_tree(t, node, stage + 1, lv, first + count / 2, count / 2);
  const int thr = lv[first + count / 2 - 1].hi;
  std::vector<std::pair<int, int>> in;
  in.reserve(size_t(count));
  for (int j = 0; j < count / 2; ++j) {
    Element2x2 e;
    e.id = int(t.elements.size());
    e.node = node;
    e.stage = stage;
    e.thr_slot = thr;
    e.out_top = SinkRef{SinkRef::ToElement, top[size_t(j)].first,
                        top[size_t(j)].second};
    e.out_bottom = SinkRef{SinkRef::ToElement, bot[size_t(j)].first,
                           bot[size_t(j)].second};
    t.elements.push_back(e);
    in.push_back({e.id, 0});
    in.push_back({e.id, 1});
  }
  return in;
}

// Derives the feeder table (inverse wiring) from element outputs and the
// injection map.
void fill_feeders(Topology& t) {
  t.feeders.assign(t.elements.size(), {});
  for (const Element2x2& e : t.elements) {
    const SinkRef* outs[2] = {&e.out_top, &e.out_bottom};
    for (int p = 0; p < 2; ++p) {
      if (outs[p]->kind != SinkRef::ToElement) continue;
      SourceRef& f = t.feeders[size_t(outs[p]->index)][size_t(outs[p]->port)];
      f = SourceRef{SourceRef::FromElement, e.id, p};
    }
  }
  for (int ep = 1; ep <= t.endpoint_count; ++ep) {
    auto [el, port] = t.inject[size_t(ep - 1)];
    t.feeders[size_t(el)][size_t(port)] = SourceRef{SourceRef::FromEndpoint, ep, 0};
  }
}

void check_data_slots(int data_slots) {
  if (data_slots < 1 || data_slots > 4096)
    throw ConfigError("topology.data_slots",
                      "data period must cover 1..4096 slots");
}

// Configured per-element data latency for this epoch geometry, measured
// on a throwaway gate-level router.
SimTime probe_router_latency(const RaceLogicConfig& rl, ArbiterPolicy policy) {
  Netlist scratch;
  RouterConfig rc;
  rc.rl = rl;
  rc.thr_slot = 1;
  rc.policy = policy;
  return RouterNetlist::build(scratch, "probe", rc).data_latency();
}

}  // namespace

Topology build_router2(int data_slots, ArbiterPolicy policy) {
  check_data_slots(data_slots);
  Topology t;
  t.name = "router2";
  t.kind = TopologyKind::Router2;
  t.endpoint_count = 2;
  t.policy = policy;
  t.rl.dest_count = 2;
  t.rl.data_slot_count = data_slots;
  std::vector<Leaf> lv = {{1, 1, SinkRef{SinkRef::ToEndpoint, 1, 0}},
                          {2, 2, SinkRef{SinkRef::ToEndpoint, 2, 0}}};
  auto in = build_tree(t, -1, 0, lv, 0, 2);
  t.inject.assign(in.begin(), in.end());
  fill_feeders(t);
  t.stages_per_node = 1;
  t.router_latency_ps = probe_router_latency(t.rl, policy);
  return t;
}

Topology build_butterfly(int k, int data_slots, ArbiterPolicy policy) {
  if (k < 2 || k > 1024 || !power_of_two(k))
    throw InvalidSize("butterfly.size",
                      "endpoint count must be a power of two in 2..1024");
  check_data_slots(data_slots);
  Topology t;
  t.name = "butterfly" + std::to_string(k);
  t.kind = TopologyKind::Butterfly;
  t.endpoint_count = k;
  t.policy = policy;
  t.rl.dest_count = k;
  t.rl.data_slot_count = data_slots;
  std::vector<Leaf> lv;
  lv.reserve(size_t(k));
  for (int i = 1; i <= k; ++i)
    lv.push_back({i, i, SinkRef{SinkRef::ToEndpoint, i, 0}});
  auto in = build_tree(t, -1, 0, lv, 0, k);
  t.inject.assign(in.begin(), in.end());
  fill_feeders(t);
  t.stages_per_node = ilog2(k);
  t.router_latency_ps = probe_router_latency(t.rl, policy);
  return t;
}

Topology build_mesh(int rows, int cols, int concentration, int data_slots,
                    ArbiterPolicy policy) {
  if (rows < 1 || rows > 32)
    throw InvalidGeometry("mesh.rows", "rows must be in 1..32");
  if (cols < 1 || cols > 32)
    throw InvalidGeometry("mesh.cols", "cols must be in 1..32");
  if (rows * cols < 2)
    throw InvalidGeometry("mesh.rows", "a mesh needs at least two nodes");
  if (!power_of_two(concentration) || concentration > 64)
    throw InvalidGeometry("mesh.concentration",
                          "concentration must be a power of two in 1..64");
  check_data_slots(data_slots);

  const int nn = rows * cols;
  const int conc = concentration;
  const int total = nn * conc;

  Topology t;
  t.name = "cmesh" + std::to_string(total);
  t.kind = TopologyKind::ConcentratedMesh;
  t.endpoint_count = total;
  t.rows = rows;
  t.cols = cols;
  t.concentration = conc;
  t.policy = policy;
  t.rl.dest_count = total;
  t.rl.data_slot_count = data_slots;

  // Directions in ascending order of the destination ranges they serve
  // under row-major numbering: north, west, (locals), east, south.
  enum Dir { kN = 0, kW = 1, kE = 2, kS = 3 };
  auto nbr = [&](int n, int dir) -> int {
    int r = n / cols, c = n % cols;
    switch (dir) {
      case kN: return r > 0 ? n - cols : -1;
      case kW: return c > 0 ? n - 1 : -1;
      case kE: return c < cols - 1 ? n + 1 : -1;
      default: return r < rows - 1 ? n + cols : -1;
    }
  };
  auto opposite = [](int dir) { return dir == kN ? kS : dir == kS ? kN
                                       : dir == kW ? kE : kW; };

  // Channel allocation: one channel per adjacent direction, then grow
  // greedily until every node sends and receives exactly `conc` channels.
  std::vector<std::array<int, 4>> ch(size_t(nn), {0, 0, 0, 0});
  std::vector<int> rem_out(size_t(nn), conc), rem_in(size_t(nn), conc);
  for (int n = 0; n < nn; ++n)
    for (int d = 0; d < 4; ++d)
      if (int v = nbr(n, d); v >= 0) {
        ch[size_t(n)][size_t(d)] = 1;
        --rem_out[size_t(n)];
        --rem_in[size_t(v)];
      }
  for (int n = 0; n < nn; ++n)
    if (rem_out[size_t(n)] < 0)
      throw InvalidGeometry("mesh.concentration",
                            "concentration below the node degree");
  for (bool more = true; more;) {
    more = false;
    bool open = false;
    for (int n = 0; n < nn && !more; ++n) {
      if (rem_out[size_t(n)] <= 0) continue;
      open = true;
      for (int d = 0; d < 4 && !more; ++d) {
        int v = nbr(n, d);
        if (v < 0 || rem_in[size_t(v)] <= 0) continue;
        ++ch[size_t(n)][size_t(d)];
        --rem_out[size_t(n)];
        --rem_in[size_t(v)];
        more = true;
      }
    }
    if (open && !more)
      throw InvalidGeometry("mesh.concentration",
                            "cannot balance link channels on this grid");
  }

  // In-channel slots at each node, ordered by arrival side then channel.
  // in_slot[v] lists (from_node, from_dir, channel) per link input.
  struct InSlot { int from, dir, chan; };
  std::vector<std::vector<InSlot>> in_slot(static_cast<size_t>(nn));
  for (int v = 0; v < nn; ++v)
    for (int side = 0; side < 4; ++side) {
      int u = nbr(v, side);
      if (u < 0) continue;
      int d = opposite(side);
      for (int i = 0; i < ch[size_t(u)][size_t(d)]; ++i)
        in_slot[size_t(v)].push_back({u, d, i});
    }

  // Leaves per node: split each direction's forward range over its
  // channels, locals in the middle; everything stays ascending.
  struct PendingLink { int node, dir, chan; size_t leaf; };
  std::vector<std::vector<Leaf>> leaves(static_cast<size_t>(nn));
  std::vector<PendingLink> pend;
  for (int n = 0; n < nn; ++n) {
    const int r = n / cols;
    const int base = n * conc;
    auto range = [&](int dir) -> std::pair<int, int> {
      switch (dir) {
        case kN: return {1, r * cols * conc};
        case kW: return {r * cols * conc + 1, base};
        case kE: return {base + conc + 1, (r + 1) * cols * conc};
        default: return {(r + 1) * cols * conc + 1, total};
      }
    };
    auto add_dir = [&](int dir) {
      const int nch = ch[size_t(n)][size_t(dir)];
      if (nch == 0) return;
      auto [lo, hi] = range(dir);
      const int len = hi - lo + 1;
      if (len < nch)
        throw InvalidGeometry("mesh.concentration",
                              "more link channels than forward destinations");
      int at = lo;
      for (int i = 0; i < nch; ++i) {
        const int sz = len / nch + (i < len % nch ? 1 : 0);
        pend.push_back({n, dir, i, leaves[size_t(n)].size()});
        leaves[size_t(n)].push_back({at, at + sz - 1, SinkRef{}});
        at += sz;
      }
    };
    add_dir(kN);
    add_dir(kW);
    for (int i = 1; i <= conc; ++i)
      leaves[size_t(n)].push_back(
          {base + i, base + i, SinkRef{SinkRef::ToEndpoint, base + i, 0}});
    add_dir(kE);
    add_dir(kS);
  }

  // Node trees plus the per-node input port lists.
  std::vector<std::vector<std::pair<int, int>>> node_in(static_cast<size_t>(nn));
  t.nodes.resize(size_t(nn));
  for (int n = 0; n < nn; ++n) {
    const size_t first = t.elements.size();
    node_in[size_t(n)] = build_tree(t, n, 0, leaves[size_t(n)], 0,
                                    int(leaves[size_t(n)].size()));
    MeshNodeInfo& info = t.nodes[size_t(n)];
    info.row = n / cols;
    info.col = n % cols;
    for (size_t e = first; e < t.elements.size(); ++e)
      info.elements.push_back(int(e));
    std::sort(info.elements.begin(), info.elements.end(), [&](int a, int b) {
      return std::make_pair(t.elements[size_t(a)].stage, a) <
             std::make_pair(t.elements[size_t(b)].stage, b);
    });
  }

  // Link leaves were created before their target elements existed; patch
  // them now.  Channel i of link u->v lands on v's link input slot that
  // matches (u, dir, i); node inputs are `conc` locals then the link slots.
  for (const PendingLink& p : pend) {
    const int v = nbr(p.node, p.dir);
    const auto& slots = in_slot[size_t(v)];
    int pos = -1;
    for (size_t s = 0; s < slots.size(); ++s)
      if (slots[s].from == p.node && slots[s].dir == p.dir &&
          slots[s].chan == p.chan) {
        pos = int(s);
        break;
      }
    if (pos < 0 || conc + pos >= int(node_in[size_t(v)].size()))
      throw InvalidGeometry("mesh.concentration", "link channel mismatch");
    const auto [el, port] = node_in[size_t(v)][size_t(conc + pos)];
    // Leaf j of a node belongs to deepest-column element j/2 (top output
    // for even j): elements are created left to right in leaf order.
    const auto& els = t.nodes[size_t(p.node)].elements;
    const size_t deepest = leaves[size_t(p.node)].size() / 2;
    Element2x2& owner =
        t.elements[size_t(els[els.size() - deepest + p.leaf / 2])];
    SinkRef& sink = (p.leaf % 2 == 0) ? owner.out_top : owner.out_bottom;
    sink = SinkRef{SinkRef::ToElement, el, port};
  }

  // Directed link summary, in (node, direction) order.
  for (int n = 0; n < nn; ++n)
    for (int d = 0; d < 4; ++d)
      if (int v = nbr(n, d); v >= 0 && ch[size_t(n)][size_t(d)] > 0)
        t.links.push_back({n, v, ch[size_t(n)][size_t(d)]});

  // Injection map: endpoint base+i is local input i-1 of its node.
  t.inject.resize(size_t(total));
  for (int n = 0; n < nn; ++n)
    for (int i = 0; i < conc; ++i)
      t.inject[size_t(n * conc + i)] = node_in[size_t(n)][size_t(i)];
  fill_feeders(t);

  t.stages_per_node = ilog2(2 * conc);
  t.router_latency_ps = probe_router_latency(t.rl, policy);
  // The retimer must absorb the node traversal plus a setup margin: half
  // a control slot of accumulated skew (pulses can run that late and the
  // register recentres them) and one slot for the capture-to-launch
  // turnaround.  Without it the shortest pulses would need negative delay.
  const SimTime traversal = SimTime(t.stages_per_node) * t.router_latency_ps +
                            retime_margin(t.rl);
  t.link_epochs = int((traversal + t.epoch() - 1) / t.epoch());
  return t;
}

Topology build_named(const std::string& name, int data_slots,
                     ArbiterPolicy policy) {
  Topology t;
  if (name == "router2") {
    t = build_router2(data_slots, policy);
  } else if (name == "butterfly4") {
    t = build_butterfly(4, data_slots, policy);
  } else if (name == "bfly32") {
    t = build_butterfly(32, data_slots, policy);
  } else if (name == "mesh8") {
    t = build_mesh(2, 2, 2, data_slots, policy);
  } else if (name == "cmesh32") {
    t = build_mesh(2, 4, 4, data_slots, policy);
  } else {
    throw ConfigError("topology.name", "unknown topology '" + name +
                                           "' (router2, butterfly4, mesh8, "
                                           "cmesh32, bfly32)");
  }
  t.name = name;
  return t;
}

// ---------------------------------------------------------------------------
// Area accounting.
// ---------------------------------------------------------------------------

namespace {

void add_part(AreaAccounting& a, const std::string& name, int count,
              long each, long* bucket) {
  if (count == 0) return;
  a.parts.push_back({name, count, each, each * count});
  *bucket += each * count;
}

void finish(AreaAccounting& a) {
  a.jj_total = a.jj_routers + a.jj_links + a.jj_retimers;
  a.retimer_share =
      a.jj_total > 0 ? double(a.jj_retimers) / double(a.jj_total) : 0.0;
}

}  // namespace

AreaManifest jj_count(const Topology& t) {
  AreaManifest m;
  m.topology = t.name;
  m.data_period_ps = t.rl.data_period();
  m.epoch_ps = t.rl.epoch();

  const bool rnd = t.policy == ArbiterPolicy::RandomizedRR;
  const int routers = int(t.elements.size());
  long channels = 0;
  for (const MeshLinkInfo& l : t.links) channels += l.channels;

  // Intra-node element-to-element hops land on the B input through a
  // two-jtl skew segment; inter-node hops go through retimers instead.
  int blinks = 0;
  for (size_t e = 0; e < t.feeders.size(); ++e) {
    const SourceRef& f = t.feeders[e][1];
    if (f.kind == SourceRef::FromElement &&
        t.elements[size_t(f.index)].node == t.elements[e].node)
      ++blinks;
  }

  const long router_ref = kReferenceRouterJj + (rnd ? kRandomizerJj : 0);
  const int sr_stages = int(t.rl.control_period() / t.rl.data_spacing);
  const long router_cfg = kReferenceRouterJj - kReferenceSrPairJj +
                          2 * jj_count_of(CellKind::ShiftRegister, sr_stages) +
                          (rnd ? kRandomizerJj : 0);

  // Reference basis: published router figure, retimers sized from the
  // published hop latency, no wiring entries.
  AreaAccounting& ref = m.reference;
  add_part(ref, "router", routers, router_ref, &ref.jj_routers);
  if (rnd) add_part(ref, "prng fan-out", routers, kPrngFanoutJj, &ref.jj_routers);
  if (channels > 0) {
    const double hop = double(t.stages_per_node) * kReferenceHopLatencyPs;
    const double epoch = double(t.epoch());
    const int k = std::max(
        1, int(std::ceil((hop + double(retime_margin(t.rl))) / epoch)));
    const double wait = double(k) * epoch - hop;
    ref.retimer_stages = int(std::ceil(wait / double(t.rl.data_spacing)));
    const long sr =
        jj_count_of(CellKind::ShiftRegister, ref.retimer_stages);
    add_part(ref, "link retimer", int(channels), sr, &ref.jj_retimers);
    add_part(ref, "link interface", int(channels), kRetimerInterfaceJj,
             &ref.jj_retimers);
  }
  finish(ref);

  // Configured basis: registers resized to the configured control
  // period; retimers sized from the calibrated hop latency.  The router
  // and link buckets match the gate-level netlist census.
  AreaAccounting& cfg = m.configured;
  add_part(cfg, "router", routers, router_cfg, &cfg.jj_routers);
  if (rnd) add_part(cfg, "prng fan-out", routers, kPrngFanoutJj, &cfg.jj_routers);
  add_part(cfg, "inter-stage jtl", 2 * blinks, 2, &cfg.jj_links);
  if (channels > 0) {
    const SimTime hop = SimTime(t.stages_per_node) * t.router_latency_ps;
    const SimTime wait = SimTime(t.link_epochs) * t.epoch() - hop;
    cfg.retimer_stages =
        int((wait + t.rl.data_spacing - 1) / t.rl.data_spacing);
    const long sr = jj_count_of(CellKind::ShiftRegister, cfg.retimer_stages);
    add_part(cfg, "link retimer", int(channels), sr, &cfg.jj_retimers);
    add_part(cfg, "link interface", int(channels), kRetimerInterfaceJj,
             &cfg.jj_retimers);
  }
  finish(cfg);

  std::ostringstream notes;
  if (t.name == "router2") {
    m.paper_parity_jj = 481;
    notes << "published 2x2 router total, reference basis";
  } else if (t.name == "butterfly4") {
    m.paper_parity_jj = 1924;
    notes << "published 4x4 composite: four reference routers";
  } else if (t.name == "mesh8") {
    m.paper_parity_jj = 7912;
    notes << "published 8x8 mesh total; the reference basis reproduces it "
             "exactly at a two-slot data period (10-stage retimers)";
  } else {
    notes << "no published composite total for this topology";
  }
  if (rnd) notes << "; randomized arbitration adds 24 JJ per router "
                    "(+3 JJ PRNG fan-out)";
  m.notes = notes.str();
  return m;
}

// ---------------------------------------------------------------------------
// DOT export.
// ---------------------------------------------------------------------------

std::string to_dot(const Topology& t) {
  std::ostringstream os;
  os << "digraph \"" << t.name << "\" {\n";
  os << "  rankdir=LR;\n";
  os << "  node [shape=circle, fontsize=10];\n";
  for (int ep = 1; ep <= t.endpoint_count; ++ep)
    os << "  ep" << ep << " [shape=box, label=\"ep" << ep << "\"];\n";
  auto emit_element = [&](const Element2x2& e) {
    os << "    e" << e.id << " [label=\"e" << e.id << "\\ns" << e.stage
       << " thr " << e.thr_slot << "\"];\n";
  };
  if (t.is_mesh()) {
    for (size_t n = 0; n < t.nodes.size(); ++n) {
      os << "  subgraph cluster_n" << n << " {\n";
      os << "    label=\"node (" << t.nodes[n].row << "," << t.nodes[n].col
         << ")\";\n";
      for (int e : t.nodes[n].elements) emit_element(t.elements[size_t(e)]);
      os << "  }\n";
    }
  } else {
    for (const Element2x2& e : t.elements) emit_element(e);
  }
  for (int ep = 1; ep <= t.endpoint_count; ++ep) {
    auto [el, port] = t.inject[size_t(ep - 1)];
    os << "  ep" << ep << " -> e" << el << " [label=\""
       << (port == 0 ? "a" : "b") << "\"];\n";
  }
  for (const Element2x2& e : t.elements) {
    const SinkRef* outs[2] = {&e.out_top, &e.out_bottom};
    for (int p = 0; p < 2; ++p) {
      os << "  e" << e.id << " -> ";
      if (outs[p]->kind == SinkRef::ToEndpoint)
        os << "ep" << outs[p]->index;
      else
        os << "e" << outs[p]->index;
      os << " [label=\"" << (p == 0 ? "t" : "b");
      if (outs[p]->kind == SinkRef::ToElement)
        os << (outs[p]->port == 0 ? ">a" : ">b");
      os << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Gate-level butterfly.
// ---------------------------------------------------------------------------

namespace {

// Inter-column B-side links carry two skew jtls, so a simultaneous pair of
// upstream exits reaches the register race with a deterministic gap.
WireId blink(Netlist& net, const std::string& name, WireId in) {
  WireId j1 = net.jtl(name + "0", "link", in, 1);
  return net.jtl(name + "1", "link", j1, 1);
}

}  // namespace

PulseButterfly4::PulseButterfly4(ArbiterPolicy policy, int data_slots)
    : policy_(policy) {
  rl_.dest_count = 4;
  rl_.data_slot_count = data_slots;
  auto rc = [&](int thr) {
    RouterConfig c;
    c.rl = rl_;
    c.thr_slot = thr;
    c.policy = policy_;
    return c;
  };
  // First column halves the destination range; second column picks the
  // endpoint.  Canonical element ids: C=0, D=1, A=2, B=3.
  r_.push_back(RouterNetlist::build(net_, "A", rc(2)));
  r_.push_back(RouterNetlist::build(net_, "B", rc(2)));
  r_.push_back(RouterNetlist::build(net_, "C", rc(1), r_[0].out_a,
                                    blink(net_, "L.CB", r_[1].out_a)));
  r_.push_back(RouterNetlist::build(net_, "D", rc(3), r_[0].out_b,
                                    blink(net_, "L.DB", r_[1].out_b)));
  eng_ = std::make_unique<Engine>(net_);
}

SimTime PulseButterfly4::pd() const { return r_[0].data_latency(); }
SimTime PulseButterfly4::epoch_len() const { return rl_.epoch(); }

std::vector<PulseDelivery> PulseButterfly4::run(
    const std::vector<PulseInjection>& inj, int epochs,
    std::vector<PulseAnomaly>* anomalies, uint32_t rand_seed) {
  // Each call replays from t = 0 on a power-on netlist.
  net_.reset_state();
  eng_ = std::make_unique<Engine>(net_);
  const SimTime e = rl_.epoch();
  const SimTime dl = pd();
  // Arbiter bits in element-id order: C, D, A, B.
  static const int kByElement[4] = {2, 3, 0, 1};
  std::mt19937 rng(rand_seed);
  // The clock free-runs past the last injection epoch: packets from the
  // final windows are still in flight for up to two router delays.
  const int tap_epochs = epochs + int(2 * dl / e) + 2;
  for (int k = 0; k < tap_epochs; ++k) {
    r_[0].schedule_taps(*eng_, SimTime(k) * e);
    r_[1].schedule_taps(*eng_, SimTime(k) * e);
    r_[2].schedule_taps(*eng_, SimTime(k) * e + dl);
    r_[3].schedule_taps(*eng_, SimTime(k) * e + dl);
    if (k < epochs && policy_ == ArbiterPolicy::RandomizedRR)
      for (int el = 0; el < 4; ++el) {
        const int ri = kByElement[el];
        const bool bit = (rng() & 1u) != 0;
        if (bit)
          r_[size_t(ri)].inject_rand(*eng_,
                                     SimTime(k) * e + (ri >= 2 ? dl : 0));
      }
  }
  for (const PulseInjection& i : inj) {
    if (i.epoch < 0 || i.epoch >= epochs)
      throw ConfigError("scenario.epoch", "injection outside the run window");
    if (i.input < 1 || i.input > 4)
      throw ConfigError("scenario.input", "butterfly inputs are 1..4");
    const int ri = (i.input - 1) / 2;
    r_[size_t(ri)].inject(*eng_, SimTime(i.epoch) * e, (i.input - 1) % 2,
                          i.pkt);
  }
  eng_->run_all();

  std::vector<PulseDelivery> out;
  for (int k = 0; k < epochs; ++k)
    for (int ep = 1; ep <= 4; ++ep) {
      const RouterNetlist& r = r_[size_t(2 + (ep - 1) / 2)];
      const Port port = (ep - 1) % 2 == 0 ? Port::Top : Port::Bottom;
      DecodeResult d = r.read_output(*eng_, SimTime(k) * e + dl, port);
      if (d.ok())
        out.push_back({k, ep, d.packet});
      else if (d.status != CodecStatus::NoControlPulse && anomalies)
        anomalies->push_back({k, ep, d.status});
    }
  return out;
}

std::vector<SimTime> PulseButterfly4::raw_endpoint(int endpoint,
                                                   int epoch) const {
  const RouterNetlist& r = r_[size_t(2 + (endpoint - 1) / 2)];
  const Port port = (endpoint - 1) % 2 == 0 ? Port::Top : Port::Bottom;
  return r.raw_output(*eng_, SimTime(epoch) * rl_.epoch() + pd(), port);
}

// ---------------------------------------------------------------------------
// Gate-level mesh.
// ---------------------------------------------------------------------------

PulseMesh8::PulseMesh8(ArbiterPolicy policy, int data_slots)
    : topo_(build_mesh(2, 2, 2, data_slots, policy)), policy_(policy) {
  topo_.name = "mesh8";
  el2r_.assign(topo_.elements.size(), -1);

  // Build stage-ascending so upstream output wires exist before the
  // downstream routers that consume them.
  std::vector<int> order;
  for (const MeshNodeInfo& n : topo_.nodes)
    for (int e : n.elements) order.push_back(e);

  for (int el : order) {
    const Element2x2& e = topo_.elements[size_t(el)];
    std::ostringstream nm;
    nm << "n" << e.node << ".e" << el;
    WireId ext[2] = {kNoWire, kNoWire};
    for (int p = 0; p < 2; ++p) {
      const SourceRef& f = topo_.feeders[size_t(el)][size_t(p)];
      if (f.kind != SourceRef::FromElement) continue;
      if (topo_.elements[size_t(f.index)].node != e.node) continue;  // link
      const RouterNetlist& src = r_[size_t(el2r_[size_t(f.index)])];
      WireId w = f.port == 0 ? src.out_a : src.out_b;
      ext[p] = p == 1 ? blink(net_, nm.str() + ".LB", w) : w;
    }
    RouterConfig rc;
    rc.rl = topo_.rl;
    rc.thr_slot = e.thr_slot;
    rc.policy = policy_;
    el2r_[size_t(el)] = int(r_.size());
    r_.push_back(RouterNetlist::build(net_, nm.str(), rc, ext[0], ext[1]));
  }

  // Inter-node feeders become retimed channels onto primary input wires.
  for (size_t el = 0; el < topo_.elements.size(); ++el)
    for (int p = 0; p < 2; ++p) {
      const SourceRef& f = topo_.feeders[el][size_t(p)];
      if (f.kind != SourceRef::FromElement) continue;
      if (topo_.elements[size_t(f.index)].node ==
          topo_.elements[el].node)
        continue;
      const RouterNetlist& src = r_[size_t(el2r_[size_t(f.index)])];
      const RouterNetlist& dst = r_[size_t(el2r_[el])];
      channels_.push_back({f.port == 0 ? src.out_a : src.out_b,
                           p == 0 ? dst.in_a : dst.in_b, 0});
    }

  eng_ = std::make_unique<Engine>(net_);
}

SimTime PulseMesh8::pd() const { return r_[0].data_latency(); }
SimTime PulseMesh8::epoch_len() const { return topo_.rl.epoch(); }

// Retransmits every pulse recorded on an egress wire at its nominal slot
// position `link_epochs` epochs later.  Slot decisions tolerate the
// bounded intra-node skew (control < 30 ps, data < 7 ps), so packets
// enter the next node exactly on its schedule.
void PulseMesh8::forward_links(SimTime upto, int max_epoch) {
  const SimTime e = epoch_len();
  const SimTime dl = pd();
  const SimTime cp = topo_.rl.control_period();
  const SimTime cs = topo_.rl.control_slot;
  const SimTime sp = topo_.rl.data_spacing;
  for (LinkChannel& c : channels_) {
    for (SimTime t : eng_->pulses_on(c.egress, c.scanned_to, upto)) {
      const SimTime base = t - 2 * dl;  // egress windows start at k*e+2*pd
      if (base < 0) continue;
      const SimTime k = base / e;
      const SimTime off = base - k * e;
      SimTime nominal;
      if (off < cp) {
        nominal = (off / cs) * cs + cs / 2;  // control: recentre in its slot
      } else {
        const SimTime slot = (off - cp + sp / 2) / sp;  // data: snap to grid
        nominal = cp + slot * sp;
      }
      const SimTime target = k + topo_.link_epochs;
      if (target >= max_epoch) continue;  // still in flight at the end
      eng_->schedule(c.ingress, target * e + nominal);
    }
    c.scanned_to = upto;
  }
}

std::vector<PulseDelivery> PulseMesh8::run(
    const std::vector<PulseInjection>& inj, int epochs,
    std::vector<PulseAnomaly>* anomalies, uint32_t rand_seed) {
  // Each call replays from t = 0 on a power-on netlist.
  net_.reset_state();
  eng_ = std::make_unique<Engine>(net_);
  const SimTime e = epoch_len();
  const SimTime dl = pd();
  std::mt19937 rng(rand_seed);
  // The clock free-runs past the last decoded window (see PulseButterfly4).
  const int tap_epochs = epochs + int(2 * dl / e) + 2;
  for (int k = 0; k < tap_epochs; ++k) {
    for (size_t el = 0; el < topo_.elements.size(); ++el) {
      const int stage = topo_.elements[el].stage;
      const SimTime frame = SimTime(k) * e + SimTime(stage) * dl;
      r_[size_t(el2r_[el])].schedule_taps(*eng_, frame);
      if (k < epochs && policy_ == ArbiterPolicy::RandomizedRR &&
          (rng() & 1u) != 0)
        r_[size_t(el2r_[el])].inject_rand(*eng_, frame);
    }
  }
  for (const PulseInjection& i : inj) {
    if (i.epoch < 0 || i.epoch >= epochs)
      throw ConfigError("scenario.epoch", "injection outside the run window");
    if (i.input < 1 || i.input > topo_.endpoint_count)
      throw ConfigError("scenario.input", "mesh inputs are 1..8");
    auto [el, port] = topo_.inject[size_t(i.input - 1)];
    r_[size_t(el2r_[size_t(el)])].inject(*eng_, SimTime(i.epoch) * e, port,
                                         i.pkt);
  }

  // Drive time forward in small steps so link channels can retransmit
  // pulses observed so far; retimed copies always land in the future.
  const SimTime horizon = SimTime(epochs) * e + 2 * dl + e;
  for (SimTime t = 0; t < horizon;) {
    const SimTime t2 = std::min<SimTime>(t + 60, horizon);
    eng_->run_until(t2);
    forward_links(t2 + 1, epochs);
    t = t2;
  }
  eng_->run_all();

  // Endpoint decode table from the element graph.
  std::vector<PulseDelivery> out;
  std::vector<std::pair<int, Port>> at(size_t(topo_.endpoint_count + 1),
                                       {-1, Port::Top});
  for (const Element2x2& el : topo_.elements) {
    if (el.out_top.kind == SinkRef::ToEndpoint)
      at[size_t(el.out_top.index)] = {el.id, Port::Top};
    if (el.out_bottom.kind == SinkRef::ToEndpoint)
      at[size_t(el.out_bottom.index)] = {el.id, Port::Bottom};
  }
  for (int k = 0; k < epochs; ++k)
    for (int ep = 1; ep <= topo_.endpoint_count; ++ep) {
      const auto [el, port] = at[size_t(ep)];
      const RouterNetlist& r = r_[size_t(el2r_[size_t(el)])];
      DecodeResult d = r.read_output(*eng_, SimTime(k) * e + dl, port);
      if (d.ok())
        out.push_back({k, ep, d.packet});
      else if (d.status != CodecStatus::NoControlPulse && anomalies)
        anomalies->push_back({k, ep, d.status});
    }
  return out;
}

std::vector<SimTime> PulseMesh8::raw_endpoint(int endpoint, int epoch) const {
  for (const Element2x2& el : topo_.elements) {
    if (el.out_top.kind == SinkRef::ToEndpoint && el.out_top.index == endpoint)
      return r_[size_t(el2r_[size_t(el.id)])].raw_output(
          *eng_, SimTime(epoch) * epoch_len() + pd(), Port::Top);
    if (el.out_bottom.kind == SinkRef::ToEndpoint &&
        el.out_bottom.index == endpoint)
      return r_[size_t(el2r_[size_t(el.id)])].raw_output(
          *eng_, SimTime(epoch) * epoch_len() + pd(), Port::Bottom);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Canonical scenarios.
// ---------------------------------------------------------------------------

ScenarioSpec scenario_fig9() {
  ScenarioSpec s;
  s.name = "fig9";
  s.topology = "router2";
  s.epochs = 4;
  for (int k = 0; k < 4; ++k) {
    s.injections.push_back({k, 1, Packet{1, {1}}});
    s.injections.push_back({k, 2, Packet{1, {2}}});
  }
  return s;
}

ScenarioSpec scenario_fig11() {
  ScenarioSpec s;
  s.name = "fig11";
  s.topology = "butterfly4";
  s.epochs = 2;
  // Two sources contend for endpoint 2 while a third crosses to 4; the
  // repeat in the second epoch shows the arbiter flipping the grant.
  s.injections.push_back({0, 1, Packet{2, {1}}});
  s.injections.push_back({0, 2, Packet{4, {2}}});
  s.injections.push_back({0, 3, Packet{2, {3}}});
  s.injections.push_back({1, 1, Packet{2, {1}}});
  s.injections.push_back({1, 3, Packet{2, {3}}});
  return s;
}

ScenarioSpec scenario_fig14() {
  ScenarioSpec s;
  s.name = "fig14";
  s.topology = "mesh8";
  s.epochs = 4;
  // One local delivery plus two packets for endpoint 3: the one from the
  // neighbouring node spends two epochs on the link, so endpoint 3 sees
  // its packets in windows 0 and 2 with an empty window in between.
  s.injections.push_back({0, 1, Packet{2, {1}}});
  s.injections.push_back({0, 2, Packet{3, {2}}});
  s.injections.push_back({0, 3, Packet{3, {3}}});
  return s;
}

}  // namespace pastnoc
