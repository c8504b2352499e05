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

// Pulse-level discrete-event simulation of single-flux-quantum logic.
//
// A netlist is a set of cells joined by wires.  A wire has at most one
// driver and at most one sink; fan-out requires explicit splitter cells.
// Events are pulse deliveries keyed by (time, sink cell, port rank, wire):
// at equal timestamps a cell consumes its control-like ports before its
// data-like ports, which makes same-picosecond races deterministic.
// Duplicate (time, wire) events coalesce into one pulse, which is what two
// simultaneous arrivals at a merger do physically.

#ifndef PASTNOC_PULSE_ENGINE_HPP
#define PASTNOC_PULSE_ENGINE_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "pastnoc/common.hpp"

namespace pastnoc {

enum class CellKind {
  Splitter,       // 1 in, 2 out
  Merger,         // 2 in, 1 out
  LastArrival,    // fires once both inputs have arrived
  Inhibit,        // data passes unless inhibited within a hold window
  NDRO,           // set/reset latch with non-destructive readout
  AndClocked,     // clocked AND; input flags clear on every clock
  TFF,            // toggle: pulses alternate between out1 and out2
  DFF,            // stores one datum, released by the next clock pulse
  DFF2,           // one datum, two readout ports with separate outputs
  ShiftRegister,  // fixed pipeline delay: stages * pitch + io delay
  JTL,            // plain transmission segment (delay element)
};

const char* cell_kind_name(CellKind k);

// Josephson-junction cost of one cell.  `trimmed_outputs` removes the
// output driver of unused ports (2 JJ each) as the circuits do for readout
// ports that only dump a stored datum.
int jj_count_of(CellKind k, int sr_stages = 0, int trimmed_outputs = 0);

using CellId = int;
using WireId = int;
constexpr int kNoWire = -1;

struct Wire {
  std::string name;
  CellId driver = -1;   // -1: primary input
  int driver_port = 0;
  CellId sink = -1;     // -1: probe / dangling
  int sink_port = 0;
};

struct Cell {
  CellKind kind;
  std::string name;
  std::string module;  // area-accounting group
  int jj = 0;

  std::array<WireId, 2> out{kNoWire, kNoWire};
  std::array<SimTime, 2> out_delay{0, 0};

  // Inhibit: suppression hold window.
  SimTime window = 4;
  // ShiftRegister geometry.
  int sr_stages = 0;
  SimTime sr_pitch = 15;
  SimTime sr_io_delay = 12;
  // Optional input alignment to the stage clock grid (off by default:
  // a flux shift register is a pure pipeline for the packet stream).
  bool sr_quantize = false;
  SimTime sr_phase = 0;

  // Runtime state.
  bool flag0 = false, flag1 = false;  // AND flags / LastArrival marks
  bool latch = false;                 // NDRO state / TFF phase
  bool has_datum = false;             // DFF / DFF2
  SimTime last_inhibit = std::numeric_limits<SimTime>::min();
  long overwrites = 0;  // datum replaced before readout (diagnostic only)
};

class Netlist {
 public:
  WireId wire(const std::string& name);
  CellId add(CellKind k, const std::string& name, const std::string& module);

  // Wiring helpers; each checks the single-driver / single-sink rule.
  void drive(CellId c, int out_port, WireId w, SimTime delay);
  void feed(WireId w, CellId c, int in_port);

  // Convenience builders returning the freshly driven wires.
  std::array<WireId, 2> splitter(const std::string& name, const std::string& module,
                                 WireId in, SimTime d0, SimTime d1);
  WireId merger(const std::string& name, const std::string& module,
                WireId a, WireId b, SimTime d);
  WireId jtl(const std::string& name, const std::string& module, WireId in, SimTime d);

  Cell& cell(CellId c) { return cells_[c]; }
  const Cell& cell(CellId c) const { return cells_[c]; }
  Wire& wire_at(WireId w) { return wires_[w]; }
  const Wire& wire_at(WireId w) const { return wires_[w]; }
  int cell_count() const { return int(cells_.size()); }
  int wire_count() const { return int(wires_.size()); }
  WireId find_wire(const std::string& name) const;

  // Total JJ cost per module group and overall.
  std::vector<std::pair<std::string, int>> jj_by_module() const;
  int jj_total() const;

  // Restore every cell's runtime fields (flags, latches, data) to power-on
  // values so a fresh Engine replays the netlist from scratch.
  void reset_state();

 private:
  friend class Engine;
  std::vector<Cell> cells_;
  std::vector<Wire> wires_;
};

struct TracePulse {
  SimTime t;
  WireId wire;
  bool operator<(const TracePulse& o) const {
    return t != o.t ? t < o.t : wire < o.wire;
  }
  bool operator==(const TracePulse& o) const { return t == o.t && wire == o.wire; }
};

class Engine {
 public:
  explicit Engine(Netlist& net) : net_(net) {}

  // Inject a pulse onto a wire (primary inputs; also used internally).
  void schedule(WireId w, SimTime t);

  // Process events up to and including `until`.
  void run_until(SimTime until);
  // Drain the queue completely.
  void run_all();

  SimTime now() const { return now_; }
  const std::vector<TracePulse>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

  // Pulses recorded on one wire inside [from, to).
  std::vector<SimTime> pulses_on(WireId w, SimTime from, SimTime to) const;

  long total_overwrites() const;

 private:
  struct Event {
    SimTime t;
    CellId sink;   // -1 for probe wires
    int rank;      // port rank at the sink; lower consumed first
    WireId wire;
    bool operator<(const Event& e) const {
      if (t != e.t) return t < e.t;
      if (sink != e.sink) return sink < e.sink;
      if (rank != e.rank) return rank < e.rank;
      return wire < e.wire;
    }
  };

  void deliver(const Event& ev);
  void emit(CellId c, int port, SimTime t);
  static int port_rank(CellKind k, int port);

  Netlist& net_;
  std::set<Event> queue_;
  std::set<TracePulse> seen_;  // coalescing: one pulse per (time, wire)
  std::vector<TracePulse> trace_;
  SimTime now_ = std::numeric_limits<SimTime>::min();
};

}  // namespace pastnoc

#endif  // PASTNOC_PULSE_ENGINE_HPP
