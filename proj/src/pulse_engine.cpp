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

#include "pastnoc/pulse_engine.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pastnoc {

const char* cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::Splitter: return "Splitter";
    case CellKind::Merger: return "Merger";
    case CellKind::LastArrival: return "LastArrival";
    case CellKind::Inhibit: return "Inhibit";
    case CellKind::NDRO: return "NDRO";
    case CellKind::AndClocked: return "AndClocked";
    case CellKind::TFF: return "TFF";
    case CellKind::DFF: return "DFF";
    case CellKind::DFF2: return "DFF2";
    case CellKind::ShiftRegister: return "ShiftRegister";
    case CellKind::JTL: return "JTL";
  }
  return "?";
}

int jj_count_of(CellKind k, int sr_stages, int trimmed_outputs) {
  int base = 0;
  switch (k) {
    case CellKind::Splitter: base = 3; break;
    case CellKind::Merger: base = 5; break;
    case CellKind::LastArrival: base = 6; break;
    case CellKind::Inhibit: base = 8; break;
    case CellKind::NDRO: base = 7; break;
    case CellKind::AndClocked: base = 11; break;
    case CellKind::TFF: base = 10; break;
    case CellKind::DFF: base = 4; break;
    case CellKind::DFF2: base = 12; break;
    case CellKind::ShiftRegister: base = 2 * sr_stages + 2; break;
    case CellKind::JTL: base = 2; break;
  }
  return base - 2 * trimmed_outputs;
}

WireId Netlist::wire(const std::string& name) {
  wires_.push_back(Wire{name, -1, 0, -1, 0});
  return WireId(wires_.size() - 1);
}

CellId Netlist::add(CellKind k, const std::string& name, const std::string& module) {
  Cell c;
  c.kind = k;
  c.name = name;
  c.module = module;
  c.jj = jj_count_of(k);
  cells_.push_back(c);
  return CellId(cells_.size() - 1);
}

void Netlist::drive(CellId c, int out_port, WireId w, SimTime delay) {
  if (wires_[w].driver != -1)
    throw std::logic_error("wire '" + wires_[w].name + "' already has a driver");
  wires_[w].driver = c;
  wires_[w].driver_port = out_port;
  cells_[c].out[out_port] = w;
  cells_[c].out_delay[out_port] = delay;
}

void Netlist::feed(WireId w, CellId c, int in_port) {
  if (wires_[w].sink != -1)
    throw std::logic_error("wire '" + wires_[w].name +
                           "' already has a sink; insert a splitter");
  wires_[w].sink = c;
  wires_[w].sink_port = in_port;
}

std::array<WireId, 2> Netlist::splitter(const std::string& name, const std::string& module,
                                        WireId in, SimTime d0, SimTime d1) {
  CellId c = add(CellKind::Splitter, name, module);
  feed(in, c, 0);
  WireId w0 = wire(name + ".0");
  WireId w1 = wire(name + ".1");
  drive(c, 0, w0, d0);
  drive(c, 1, w1, d1);
  return {w0, w1};
}

WireId Netlist::merger(const std::string& name, const std::string& module,
                       WireId a, WireId b, SimTime d) {
  CellId c = add(CellKind::Merger, name, module);
  feed(a, c, 0);
  feed(b, c, 1);
  WireId w = wire(name + ".out");
  drive(c, 0, w, d);
  return w;
}

WireId Netlist::jtl(const std::string& name, const std::string& module,
                    WireId in, SimTime d) {
  CellId c = add(CellKind::JTL, name, module);
  feed(in, c, 0);
  WireId w = wire(name + ".out");
  drive(c, 0, w, d);
  return w;
}

WireId Netlist::find_wire(const std::string& name) const {
  for (size_t i = 0; i < wires_.size(); ++i)
    if (wires_[i].name == name) return WireId(i);
  return kNoWire;
}

std::vector<std::pair<std::string, int>> Netlist::jj_by_module() const {
  std::map<std::string, int> acc;
  for (const Cell& c : cells_) acc[c.module] += c.jj;
  return {acc.begin(), acc.end()};
}

int Netlist::jj_total() const {
  int t = 0;
  for (const Cell& c : cells_) t += c.jj;
  return t;
}

void Netlist::reset_state() {
  for (Cell& c : cells_) {
    c.flag0 = c.flag1 = false;
    c.latch = false;
    c.has_datum = false;
    c.last_inhibit = std::numeric_limits<SimTime>::min();
    c.overwrites = 0;
  }
}

int Engine::port_rank(CellKind k, int port) {
  // Control-like ports win same-timestamp races against data-like ports.
  switch (k) {
    case CellKind::Inhibit:     // inh(0) before data(1)
    case CellKind::NDRO:        // reset(0), set(1), clk(2)
    case CellKind::AndClocked:  // data flags before the clock sample
    case CellKind::DFF:         // data(0) before clk(1)
    case CellKind::DFF2:        // data(0), readout c1(1), c2(2)
      return port;
    default:
      return port;
  }
}

void Engine::schedule(WireId w, SimTime t) {
  if (t < now_) throw SchedulingInPast(now_, t);
  TracePulse p{t, w};
  if (!seen_.insert(p).second) return;  // coalesced
  const Wire& wr = net_.wires_[w];
  int rank = wr.sink >= 0 ? port_rank(net_.cells_[wr.sink].kind, wr.sink_port) : 0;
  queue_.insert(Event{t, wr.sink, rank, w});
}

void Engine::emit(CellId c, int port, SimTime t) {
  WireId w = net_.cells_[c].out[port];
  if (w == kNoWire) return;  // trimmed / dangling output
  schedule(w, t + net_.cells_[c].out_delay[port]);
}

void Engine::deliver(const Event& ev) {
  if (ev.sink < 0) return;  // probe wire
  Cell& c = net_.cells_[ev.sink];
  const int port = net_.wires_[ev.wire].sink_port;
  const SimTime t = ev.t;
  switch (c.kind) {
    case CellKind::Splitter:
      emit(ev.sink, 0, t);
      emit(ev.sink, 1, t);
      break;
    case CellKind::Merger:
    case CellKind::JTL:
      emit(ev.sink, 0, t);
      break;
    case CellKind::LastArrival:
      (port == 0 ? c.flag0 : c.flag1) = true;
      if (c.flag0 && c.flag1) {
        c.flag0 = c.flag1 = false;
        emit(ev.sink, 0, t);
      }
      break;
    case CellKind::Inhibit:
      if (port == 0) {
        c.last_inhibit = t;
      } else if (t - c.last_inhibit > c.window) {
        emit(ev.sink, 0, t);
      }
      break;
    case CellKind::NDRO:
      if (port == 0) c.latch = false;
      else if (port == 1) c.latch = true;
      else if (c.latch) emit(ev.sink, 0, t);
      break;
    case CellKind::AndClocked:
      if (port == 0) c.flag0 = true;
      else if (port == 1) c.flag1 = true;
      else {
        if (c.flag0 && c.flag1) emit(ev.sink, 0, t);
        c.flag0 = c.flag1 = false;
      }
      break;
    case CellKind::TFF:
      emit(ev.sink, c.latch ? 1 : 0, t);
      c.latch = !c.latch;
      break;
    case CellKind::DFF:
      if (port == 0) {
        if (c.has_datum) ++c.overwrites;
        c.has_datum = true;
      } else if (c.has_datum) {
        c.has_datum = false;
        emit(ev.sink, 0, t);
      }
      break;
    case CellKind::DFF2:
      if (port == 0) {
        if (c.has_datum) ++c.overwrites;
        c.has_datum = true;
      } else if (c.has_datum) {
        c.has_datum = false;
        emit(ev.sink, port - 1, t);  // c1 -> y1, c2 -> y2
      }
      break;
    case CellKind::ShiftRegister: {
      SimTime entry = t;
      if (c.sr_quantize) {
        SimTime rel = entry - c.sr_phase;
        SimTime q = (rel + c.sr_pitch - 1) / c.sr_pitch;
        entry = c.sr_phase + q * c.sr_pitch;
      }
      SimTime exit = entry + SimTime(c.sr_stages) * c.sr_pitch + c.sr_io_delay;
      WireId w = c.out[0];
      if (w != kNoWire) schedule(w, exit);
      break;
    }
  }
}

void Engine::run_until(SimTime until) {
  while (!queue_.empty()) {
    auto it = queue_.begin();
    if (it->t > until) break;
    Event ev = *it;
    queue_.erase(it);
    now_ = ev.t;
    trace_.push_back(TracePulse{ev.t, ev.wire});
    deliver(ev);
    if (trace_.size() % 4096 == 0) {
      // Coalescing only needs entries at or after `now_`.
      seen_.erase(seen_.begin(), seen_.lower_bound(TracePulse{now_, 0}));
    }
  }
  if (until != std::numeric_limits<SimTime>::max()) now_ = std::max(now_, until);
}

void Engine::run_all() { run_until(std::numeric_limits<SimTime>::max()); }

std::vector<SimTime> Engine::pulses_on(WireId w, SimTime from, SimTime to) const {
  std::vector<SimTime> out;
  for (const TracePulse& p : trace_)
    if (p.wire == w && p.t >= from && p.t < to) out.push_back(p.t);
  std::sort(out.begin(), out.end());
  return out;
}

long Engine::total_overwrites() const {
  long n = 0;
  for (int i = 0; i < net_.cell_count(); ++i) n += net_.cell(i).overwrites;
  return n;
}

}  // namespace pastnoc
