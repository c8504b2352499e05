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

// Networks assembled from 2x2 deflection routers.
//
// Two representations share one structural description (Topology):
//
//  * An element graph of 2x2 routing elements, each holding a destination
//    threshold, consumed by the epoch-level simulator and by the area
//    model.  Butterflies are built recursively (each stage splits the
//    destination range in half); concentrated meshes place one small
//    butterfly per grid node and join nodes with retimed links.  Endpoint
//    numbering is row-major and routing is dimension-ordered (row first),
//    which keeps every output port's reachable destination set a
//    contiguous range - the property that makes single-threshold routing
//    work at every element.
//
//  * Gate-level compositions (PulseButterfly4, PulseMesh8) that instantiate
//    one RouterNetlist per element.  Within a column-aligned group the
//    periodic taps of column c are delayed by c times the router
//    propagation delay, and endpoint decode windows by the full traversal.
//    Mesh links are clocked retiming registers: each pulse is retransmitted
//    on its slot grid at the next whole-epoch boundary, so packets enter
//    every node at its nominal schedule and sub-slot skew does not
//    accumulate across hops.

#ifndef PASTNOC_TOPOLOGY_HPP
#define PASTNOC_TOPOLOGY_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pastnoc/common.hpp"
#include "pastnoc/pulse_engine.hpp"
#include "pastnoc/rl_packet.hpp"
#include "pastnoc/router.hpp"
#include "pastnoc/router_netlist.hpp"

namespace pastnoc {

// Build errors.  Both are configuration failures (CLI exit code 2).
class InvalidSize : public ConfigError {
 public:
  InvalidSize(const std::string& field, const std::string& msg)
      : ConfigError(field, msg) {}
};

class InvalidGeometry : public ConfigError {
 public:
  InvalidGeometry(const std::string& field, const std::string& msg)
      : ConfigError(field, msg) {}
};

enum class TopologyKind { Router2, Butterfly, ConcentratedMesh };

// Where one element output delivers its packet.
struct SinkRef {
  enum Kind { ToElement, ToEndpoint } kind = ToEndpoint;
  int index = 0;  // element id, or endpoint id (1-based)
  int port = 0;   // element input port (0 = A, 1 = B); unused for endpoints
};

// What feeds one element input.
struct SourceRef {
  enum Kind { None, FromEndpoint, FromElement } kind = None;
  int index = 0;  // endpoint id (1-based) or element id
  int port = 0;   // upstream output port (0 = top, 1 = bottom)
};

struct Element2x2 {
  int id = 0;
  int node = -1;     // mesh node index; -1 in flat topologies
  int stage = 0;     // column within the node (flat: within the network)
  int thr_slot = 1;  // route Top when dest <= thr_slot (global endpoint ids)
  SinkRef out_top, out_bottom;
};

struct MeshNodeInfo {
  int row = 0, col = 0;
  std::vector<int> elements;  // ordered by (stage, position)
};

struct MeshLinkInfo {
  int from_node = 0, to_node = 0;
  int channels = 0;  // parallel leaf-to-input channels on this directed link
};

struct Topology {
  std::string name;
  TopologyKind kind = TopologyKind::Router2;
  int endpoint_count = 0;
  int rows = 0, cols = 0, concentration = 0;  // mesh geometry (else 0)
  ArbiterPolicy policy = ArbiterPolicy::RoundRobin;
  RaceLogicConfig rl;  // dest_count == endpoint_count

  std::vector<Element2x2> elements;
  std::vector<std::pair<int, int>> inject;        // endpoint-1 -> (element, port)
  std::vector<std::array<SourceRef, 2>> feeders;  // per element input
  std::vector<MeshNodeInfo> nodes;                // mesh only
  std::vector<MeshLinkInfo> links;                // mesh only

  int stages_per_node = 0;  // element columns per node traversal
  int link_epochs = 0;      // whole epochs per inter-node link (pulse timing)
  SimTime router_latency_ps = 0;  // configured per-element data latency

  bool is_mesh() const { return kind == TopologyKind::ConcentratedMesh; }
  SimTime epoch() const { return rl.epoch(); }
};

// Builders.  `data_slots` sets the data period (slots x 15 ps); the
// destination space always spans all endpoints.
Topology build_router2(int data_slots = 20,
                       ArbiterPolicy policy = ArbiterPolicy::RoundRobin);
Topology build_butterfly(int k, int data_slots = 20,
                         ArbiterPolicy policy = ArbiterPolicy::RoundRobin);
Topology build_mesh(int rows, int cols, int concentration, int data_slots = 20,
                    ArbiterPolicy policy = ArbiterPolicy::RoundRobin);
// Named instances: router2, butterfly4, mesh8, cmesh32, bfly32.
Topology build_named(const std::string& name, int data_slots = 20,
                     ArbiterPolicy policy = ArbiterPolicy::RoundRobin);

// Graphviz description of elements, endpoints and wiring.
std::string to_dot(const Topology& t);

// ---------------------------------------------------------------------------
// Area accounting.
// ---------------------------------------------------------------------------

struct AreaPart {
  std::string part;
  int count = 0;
  long jj_each = 0;
  long jj_total = 0;
};

struct AreaAccounting {
  std::vector<AreaPart> parts;
  long jj_routers = 0;
  long jj_links = 0;     // inter-router wiring (jtl skew, link clock fan-out)
  long jj_retimers = 0;  // inter-node retiming registers
  long jj_total = 0;
  double retimer_share = 0.0;  // (retimers + link overhead) / total
  int retimer_stages = 0;      // per link channel
};

struct AreaManifest {
  std::string topology;
  SimTime data_period_ps = 0;
  SimTime epoch_ps = 0;
  // Reference basis: every 2x2 priced at the published reference router
  // (10-stage input registers) and retimers sized from the published
  // router latency.  The published composite totals are additive on this
  // basis.
  AreaAccounting reference;
  // Configured basis: input registers resized to the configured control
  // period and retimers sized from the calibrated netlist latency.  The
  // router/link portion matches Netlist::jj_total() of the gate-level
  // build exactly.
  AreaAccounting configured;
  long paper_parity_jj = 0;  // published total where one exists, else 0
  std::string notes;
};

AreaManifest jj_count(const Topology& t);

// ---------------------------------------------------------------------------
// Gate-level compositions.
// ---------------------------------------------------------------------------

struct PulseInjection {
  int epoch = 0;
  int input = 1;  // endpoint id, 1-based
  Packet pkt;
};

struct PulseDelivery {
  int epoch = 0;
  int endpoint = 0;  // 1-based
  Packet pkt;
};

struct PulseAnomaly {
  int epoch = 0;
  int endpoint = 0;
  CodecStatus status = CodecStatus::Ok;
};

// Four routers in two columns; the second column's taps lag by one router
// propagation delay and endpoint windows by two.  Purely gate-level: the
// inter-column wires are direct (A side) or two-JTL (B side) segments.
class PulseButterfly4 {
 public:
  explicit PulseButterfly4(ArbiterPolicy policy = ArbiterPolicy::RoundRobin,
                           int data_slots = 20);

  // Simulates epochs [0, epochs).  Returns deliveries sorted by
  // (epoch, endpoint).  Decode failures other than empty windows are
  // reported in `anomalies` when given.  Under RandomizedRR the arbiter
  // bits are drawn from mt19937(rand_seed), one per element per epoch in
  // element-id order (the same convention the epoch-level stepper uses).
  std::vector<PulseDelivery> run(const std::vector<PulseInjection>& inj,
                                 int epochs,
                                 std::vector<PulseAnomaly>* anomalies = nullptr,
                                 uint32_t rand_seed = 1);

  SimTime pd() const;         // one-router data latency
  SimTime epoch_len() const;  // epoch duration
  long jj_total() const { return net_.jj_total(); }
  const Netlist& netlist() const { return net_; }
  const Engine* engine() const { return eng_.get(); }

  // Raw pulse times on an endpoint's output wire, relative to its decode
  // window for `epoch` (exact-match traces).
  std::vector<SimTime> raw_endpoint(int endpoint, int epoch) const;

 private:
  RaceLogicConfig rl_;
  ArbiterPolicy policy_;
  Netlist net_;
  std::vector<RouterNetlist> r_;  // A, B, C, D
  std::unique_ptr<Engine> eng_;
};

// Four 4x4 butterfly nodes on a 2x2 grid with eight endpoints.  Nodes are
// gate-level; each directed link is a clocked retiming register modeled as
// a slot-preserving repeater: every pulse leaving a node is retransmitted
// at its nominal slot position `link_epochs` epochs later, which is the
// whole-epoch boundary no earlier than the node traversal latency.
class PulseMesh8 {
 public:
  explicit PulseMesh8(ArbiterPolicy policy = ArbiterPolicy::RoundRobin,
                      int data_slots = 20);

  std::vector<PulseDelivery> run(const std::vector<PulseInjection>& inj,
                                 int epochs,
                                 std::vector<PulseAnomaly>* anomalies = nullptr,
                                 uint32_t rand_seed = 1);

  SimTime pd() const;
  SimTime epoch_len() const;
  int link_epochs() const { return topo_.link_epochs; }
  long jj_total() const { return net_.jj_total(); }
  const Netlist& netlist() const { return net_; }
  const Engine* engine() const { return eng_.get(); }
  const Topology& topology() const { return topo_; }

  std::vector<SimTime> raw_endpoint(int endpoint, int epoch) const;

 private:
  struct LinkChannel {
    WireId egress = kNoWire;    // leaf output wire at the source node
    WireId ingress = kNoWire;   // primary input wire at the target node
    SimTime scanned_to = 0;     // forwarding watermark (exclusive)
  };

  void forward_links(SimTime upto, int max_epoch);

  Topology topo_;
  ArbiterPolicy policy_;
  Netlist net_;
  std::vector<RouterNetlist> r_;  // in build order (stage-ascending)
  std::vector<int> el2r_;         // element id -> index into r_
  std::vector<LinkChannel> channels_;
  std::unique_ptr<Engine> eng_;
};

// ---------------------------------------------------------------------------
// Canonical demonstration scenarios (used by the CLI and acceptance tests).
// ---------------------------------------------------------------------------

struct ScenarioSpec {
  std::string name;
  std::string topology;  // router2 | butterfly4 | mesh8
  int epochs = 0;
  std::vector<PulseInjection> injections;
};

ScenarioSpec scenario_fig9();   // 2x2: repeated conflict, alternating grants
ScenarioSpec scenario_fig11();  // butterfly: conflict at the second column
ScenarioSpec scenario_fig14();  // mesh: two packets to one endpoint, one hop apart

}  // namespace pastnoc

#endif  // PASTNOC_TOPOLOGY_HPP
