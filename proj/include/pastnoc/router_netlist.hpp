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

// Gate-level 2x2 deflection router.
//
// Structure: per input, a splitter taps the first pulse of each epoch into
// the routing logic (a DFF armed at epoch start) while the whole packet
// enters a flux shift register that delays it by roughly one control
// period.  Conflict detection samples the two extracted control pulses
// against the threshold; a toggle flip-flop fires a flip pulse C on every
// second conflict.  Routing stage 1 turns {epoch-start, threshold, C} into
// arming pulses for stage 2; stage 2 is a pair of dual-readout registers
// whose first readout by a delayed control pulse emits one of S1a/S1b/
// S2a/S2b ("input X assigned output Y").  These configure the crossbar,
// regenerate the winning control pulses onto the outputs, and open one of
// two gates that route the resettable last-arrival output (the regenerated
// pulse of the second packet) to the remaining output.  Data pulses pass
// only through the crossbar; window gates keep them out of the control
// logic and keep control pulses off the crossbar clocks.

#ifndef PASTNOC_ROUTER_NETLIST_HPP
#define PASTNOC_ROUTER_NETLIST_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pastnoc/pulse_engine.hpp"
#include "pastnoc/router.hpp"
#include "pastnoc/rl_packet.hpp"

namespace pastnoc {

// Every cell delay in the router, in picoseconds.  The defaults are
// calibrated so the composed paths reproduce the published module
// latencies (see RouterNetlist::audit); change with care.
struct RouterDelays {
  SimTime fe_split = 4;        // input splitter (front end)
  SimTime skew_b = 1;          // extra JTL on input B: deterministic tie-break
  SimTime fd_read = 5;         // first-pulse extractor readout
  SimTime sr_io = 12;          // shift-register entry/exit overhead
  SimTime xm_split = 2;        // splitters on the shift-register output
  SimTime gate_out = 1;        // all window/selection NDRO gates
  SimTime stage2_read = 33;    // stage-2 register readout
  SimTime s_sig = 1;           // S-signal fan-out splitters
  SimTime m_union = 2;         // crossbar-setting union mergers
  SimTime s_set = 2;           // crossbar set fan-out
  SimTime m_regen = 1;         // regeneration union mergers
  SimTime s_regen_tap = 1;     // regen union tap splitters
  SimTime m_ctl = 1;           // control-side output merger
  SimTime m_out = 1;           // final output merger
  SimTime xbar_ndro = 26;      // crossbar data switch readout
  SimTime m_xbar = 2;          // crossbar output merger
  SimTime la_read = 24;        // last-arrival register readout
  SimTime m_la = 5;            // last-arrival merger
  SimTime s_la = 7;            // last-arrival output splitter
  SimTime s_rla = 2;           // last-arrival input splitters
  SimTime m_clk_cd = 2;        // conflict-detection clock merger
  SimTime and_cd = 20;         // clocked AND
  SimTime tff_cd = 16;         // conflict counter
  SimTime s_c0 = 5;            // first splitter of the C tree
  SimTime s_c2 = 2;            // C tree second level
  SimTime tff_thr = 6;         // threshold demultiplexer
  SimTime s_thr2 = 5;          // second-threshold fan-out
  SimTime outer_read = 14;     // stage-1 outer register readout
  SimTime inner_l_read = 34;   // stage-1 inner-left readout (flip path)
  SimTime inner_r_read = 14;   // stage-1 inner-right readout
  SimTime m_arm = 3;           // stage-1 arming mergers
  SimTime s_arm = 1;           // arming fan-out splitters
  SimTime m_close = 1;         // gate-closing mergers
  SimTime s_close = 1;         // gate-closing fan-out
  SimTime s_e3s1 = 4;          // stage-1 epoch-tap splitter
  SimTime s_e1 = 2;            // epoch-start distribution
  SimTime s_e4g = 1;           // data-guard distribution
  SimTime probe_jtl = 1;       // observability taps
  SimTime rnd_read = 5;        // randomizer latch readout
  SimTime s_rnd = 2;           // PRNG fan-out (costed to the PRNG network)
  SimTime m_tff = 2;           // randomizer merge into the counter
  SimTime ndro_rr = 1;         // flip-suppression gate
};

struct RouterConfig {
  RaceLogicConfig rl;          // epoch geometry (D, slots)
  int thr_slot = 1;            // requests Top when dest slot <= thr_slot
  int sr_stages = 0;           // 0: control_period / data_spacing
  ArbiterPolicy policy = ArbiterPolicy::RoundRobin;
  RouterDelays d;

  int effective_sr_stages() const {
    return sr_stages > 0 ? sr_stages
                         : int(rl.control_period() / rl.data_spacing);
  }
  // Published-area preset: the evaluated D=2 router uses a 10-stage
  // register (44 JJ for the pair) even though its control period is 180 ps.
  static RouterConfig reference(ArbiterPolicy p = ArbiterPolicy::RoundRobin) {
    RouterConfig c;
    c.rl.dest_count = 2;
    c.rl.data_slot_count = 20;
    c.thr_slot = 1;
    c.sr_stages = 10;
    c.policy = p;
    return c;
  }
};

struct AuditCheck {
  std::string name;
  SimTime lhs = 0, rhs = 0;
  char op = '<';  // '<' strict, '=' equal
  bool pass = false;
};

class RouterNetlist {
 public:
  // Builds one router into `net`.  `in_a`/`in_b` may be existing wires
  // (outputs of an upstream router) or kNoWire to create primary inputs.
  static RouterNetlist build(Netlist& net, const std::string& prefix,
                             const RouterConfig& cfg,
                             WireId in_a = kNoWire, WireId in_b = kNoWire);

  // Schedule the periodic control taps for one epoch starting at `start`.
  void schedule_taps(Engine& eng, SimTime start) const;
  // Inject a packet on one input for the epoch starting at `start`.
  void inject(Engine& eng, SimTime start, int input, const Packet& p) const;
  // Randomizer pulse: makes `rand_bit` true for the epoch starting at
  // `start` (the PRNG raises the latch input during the previous epoch).
  void inject_rand(Engine& eng, SimTime start) const;

  // Decode one output for the epoch starting at `start` upstream;
  // downstream timing is shifted by data_latency().
  DecodeResult read_output(const Engine& eng, SimTime start, Port port) const;
  std::vector<SimTime> raw_output(const Engine& eng, SimTime start, Port port) const;

  SimTime sr_delay() const;        // shift-register in-to-out
  SimTime data_latency() const;    // input to output, payload path
  SimTime regen_latency() const;   // input to output, control path
  SimTime epoch() const { return cfg.epoch_len; }

  // Static timing audit: every ordering constraint the circuit relies on,
  // computed from the delay fixture.  All checks must pass.
  std::vector<AuditCheck> audit() const;

  // JJ cost per module (the published breakdown) for this instance.
  std::map<std::string, int> jj_by_module(const Netlist& net) const;
  int jj_router_total(const Netlist& net) const;  // excludes prng_dist

  struct Cfg {
    RaceLogicConfig rl;
    int thr_slot;
    int sr_stages;
    ArbiterPolicy policy;
    RouterDelays d;
    SimTime epoch_len;
  } cfg;

  std::string prefix;
  WireId in_a = kNoWire, in_b = kNoWire;
  WireId out_a = kNoWire, out_b = kNoWire;
  // Periodic taps (primary wires scheduled by schedule_taps).
  WireId e1 = kNoWire, thr = kNoWire, e2 = kNoWire, e3s1 = kNoWire,
         e4g = kNoWire;
  std::vector<WireId> e3x;  // per-consumer epoch-start taps
  WireId rnd_raw = kNoWire, e1_rnd = kNoWire, e2d = kNoWire;  // randomizer
  WireId probe_e1 = kNoWire, probe_guard = kNoWire;
  std::vector<CellId> cells;  // all cells of this router
};

}  // namespace pastnoc

#endif  // PASTNOC_ROUTER_NETLIST_HPP
