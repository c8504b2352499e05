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

#include "pastnoc/router.hpp"

namespace pastnoc {

const char* arbiter_policy_name(ArbiterPolicy p) {
  switch (p) {
    case ArbiterPolicy::FixedPriority: return "fixed_priority";
    case ArbiterPolicy::RoundRobin: return "round_robin";
    case ArbiterPolicy::RandomizedRR: return "randomized_rr";
  }
  return "?";
}

EpochDecision arbitrate(ArbiterState& st, ArbiterPolicy policy,
                        std::optional<Port> req_a, std::optional<Port> req_b,
                        bool tie_a_first, bool rand_bit) {
  EpochDecision d;
  const bool randomized = policy == ArbiterPolicy::RandomizedRR;
  // The randomizing pulse reaches the counter before any conflict pulse.
  if (randomized && rand_bit) ++st.tff_count;

  if (req_a && req_b && *req_a == *req_b) {
    d.conflict = true;
    if (policy != ArbiterPolicy::FixedPriority) {
      ++st.tff_count;
      bool c_raw = (st.tff_count % 2) == 0;
      d.c_fired = c_raw && !(randomized && rand_bit);
    }
    int first = tie_a_first ? 0 : 1;
    d.winner = d.c_fired ? 1 - first : first;
    Port won = *req_a;
    if (d.winner == 0) {
      d.out_a = won;
      d.out_b = other(won);
    } else {
      d.out_b = won;
      d.out_a = other(won);
    }
  } else {
    d.out_a = req_a;
    d.out_b = req_b;
  }
  return d;
}

RouteResult route_epoch(ArbiterState& st, ArbiterPolicy policy, int thr_slot,
                        const std::optional<Packet>& a,
                        const std::optional<Packet>& b, bool rand_bit) {
  auto req = [&](const std::optional<Packet>& p) -> std::optional<Port> {
    if (!p) return std::nullopt;
    return p->dest <= thr_slot ? Port::Top : Port::Bottom;
  };
  // On equal control slots input A's pulse arrives first (front-end skew).
  bool tie_a_first = true;
  if (a && b && req(a) == req(b) && a->dest > b->dest) tie_a_first = false;

  RouteResult r;
  r.decision = arbitrate(st, policy, req(a), req(b), tie_a_first, rand_bit);
  if (r.decision.out_a) (*r.decision.out_a == Port::Top ? r.top : r.bottom) = a;
  if (r.decision.out_b) (*r.decision.out_b == Port::Top ? r.top : r.bottom) = b;
  return r;
}

}  // namespace pastnoc
