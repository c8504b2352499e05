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

// Behavioral (epoch-level) model of the 2x2 deflection router.  This is the
// reference the pulse-level netlist is cross-validated against, and the
// per-element arbiter of the flit simulator.

#ifndef PASTNOC_ROUTER_HPP
#define PASTNOC_ROUTER_HPP

#include <optional>

#include "pastnoc/rl_packet.hpp"

namespace pastnoc {

enum class ArbiterPolicy { FixedPriority, RoundRobin, RandomizedRR };

const char* arbiter_policy_name(ArbiterPolicy p);

enum class Port { Top, Bottom };

inline Port other(Port p) { return p == Port::Top ? Port::Bottom : Port::Top; }

struct ArbiterState {
  // Parity of the conflict counter; a conflict pulse fires on every second
  // count, granting the normally-losing side.
  long tff_count = 0;
};

struct EpochDecision {
  std::optional<Port> out_a;  // where input A's packet was sent
  std::optional<Port> out_b;
  bool conflict = false;      // both inputs requested the same output
  bool c_fired = false;       // round-robin flip pulse active this epoch
  int winner = -1;            // 0 = A, 1 = B (conflict epochs only)
};

// Arbitrate one epoch given each input's requested output.
// rand_bit: randomized-arbitration pulse for this epoch.  It advances the
// conflict counter before any conflict is counted and suppresses the flip
// pulse for the epoch, so rand-always-on reproduces fixed priority and
// rand-always-off reproduces plain round robin.
EpochDecision arbitrate(ArbiterState& st, ArbiterPolicy policy,
                        std::optional<Port> req_a, std::optional<Port> req_b,
                        bool tie_a_first = true, bool rand_bit = false);

// Full epoch-level routing of race-logic packets: the requested output is
// Top when the control slot is at or before the threshold slot, and ties
// resolve in favor of input A (its pulse reaches the arbiter first).
struct RouteResult {
  EpochDecision decision;
  std::optional<Packet> top, bottom;  // packets leaving each output
};

RouteResult route_epoch(ArbiterState& st, ArbiterPolicy policy, int thr_slot,
                        const std::optional<Packet>& a,
                        const std::optional<Packet>& b, bool rand_bit = false);

}  // namespace pastnoc

#endif  // PASTNOC_ROUTER_HPP
