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

#include "pastnoc/rl_packet.hpp"

#include <algorithm>
#include <cmath>

namespace pastnoc {

const char* codec_status_name(CodecStatus s) {
  switch (s) {
    case CodecStatus::Ok: return "Ok";
    case CodecStatus::DestinationOutOfRange: return "DestinationOutOfRange";
    case CodecStatus::SlotOutOfRange: return "SlotOutOfRange";
    case CodecStatus::NoControlPulse: return "NoControlPulse";
    case CodecStatus::DuplicateControlPulse: return "DuplicateControlPulse";
    case CodecStatus::PulseInForbiddenSlot: return "PulseInForbiddenSlot";
    case CodecStatus::SpacingViolation: return "SpacingViolation";
  }
  return "?";
}

EncodeResult encode_packet(const RaceLogicConfig& cfg, const Packet& p) {
  EncodeResult r;
  if (p.dest < 1 || p.dest > cfg.dest_count) {
    r.status = CodecStatus::DestinationOutOfRange;
    return r;
  }
  r.pulses.push_back(cfg.control_pulse_time(p.dest));
  int prev = 0;
  for (int k : p.data) {
    if (k < 1 || k > cfg.data_slot_count || k <= prev) {
      r.status = CodecStatus::SlotOutOfRange;
      r.pulses.clear();
      return r;
    }
    prev = k;
    r.pulses.push_back(cfg.data_pulse_time(k));
  }
  return r;
}

DecodeResult decode_packet(const RaceLogicConfig& cfg, std::vector<SimTime> pulses) {
  DecodeResult r;
  std::sort(pulses.begin(), pulses.end());
  const SimTime cp = cfg.control_period();

  std::vector<SimTime> ctl, data;
  for (SimTime t : pulses) (t < cp ? ctl : data).push_back(t);

  if (ctl.empty()) {
    r.status = CodecStatus::NoControlPulse;
    return r;
  }
  if (ctl.size() > 1) {
    r.status = CodecStatus::DuplicateControlPulse;
    return r;
  }
  // Integer division tolerates a pulse riding anywhere inside its slot.
  int slot = int(ctl[0] / cfg.control_slot) + 1;
  if (slot == cfg.dest_count + 1) {
    r.status = CodecStatus::PulseInForbiddenSlot;
    return r;
  }
  r.packet.dest = slot;

  // Raw spacing check runs on unrounded arrival times.
  for (size_t i = 1; i < data.size(); ++i) {
    if (data[i] - data[i - 1] < cfg.data_spacing) {
      r.status = CodecStatus::SpacingViolation;
      return r;
    }
  }
  for (SimTime t : data) {
    double rel = double(t - cp) / double(cfg.data_spacing);
    int k = int(std::lround(rel)) + 1;
    if (k < 1 || k > cfg.data_slot_count) {
      r.status = CodecStatus::SlotOutOfRange;
      return r;
    }
    r.packet.data.push_back(k);
  }
  return r;
}

double asymptotic_occupancy(int n) { return n - n / std::exp(1.0); }

double exact_occupancy(int n) {
  return n * (1.0 - std::pow(1.0 - 1.0 / n, n));
}

double bits_per_packet(int n) {
  return asymptotic_occupancy(n) * std::log2(double(n));
}

}  // namespace pastnoc
