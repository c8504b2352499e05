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

// Race-logic packet encoding.  A packet is a train of SFQ pulses inside a
// fixed-length epoch: one control pulse whose arrival slot encodes the
// destination, followed by a data period where each occupied 15 ps slot
// carries one payload pulse.  The control period ends with one guard slot
// that never carries a pulse; it gives the routing logic time to settle.

#ifndef PASTNOC_RL_PACKET_HPP
#define PASTNOC_RL_PACKET_HPP

#include <optional>
#include <string>
#include <vector>

#include "pastnoc/common.hpp"

namespace pastnoc {

struct RaceLogicConfig {
  int dest_count = 2;        // number of addressable destinations D
  int data_slot_count = 20;  // number of payload slots n
  SimTime control_slot = 60; // width of one control slot, ps
  SimTime data_spacing = 15; // payload slot pitch (minimum pulse spacing), ps

  // Control period: one slot per destination plus the guard slot.
  SimTime control_period() const { return SimTime(dest_count + 1) * control_slot; }
  SimTime data_period() const { return SimTime(data_slot_count) * data_spacing; }
  SimTime epoch() const { return control_period() + data_period(); }
  // Centre of control slot d (1-based).
  SimTime control_pulse_time(int d) const {
    return SimTime(d - 1) * control_slot + control_slot / 2;
  }
  // Time of payload slot k (1-based).
  SimTime data_pulse_time(int k) const {
    return control_period() + SimTime(k - 1) * data_spacing;
  }
};

struct Packet {
  int dest = 1;                // 1-based destination index
  std::vector<int> data;       // occupied payload slots, 1-based, strictly increasing

  bool operator==(const Packet& o) const { return dest == o.dest && data == o.data; }
};

enum class CodecStatus {
  Ok,
  DestinationOutOfRange,   // encode: dest outside [1, D]
  SlotOutOfRange,          // payload slot outside [1, n]
  NoControlPulse,          // decode: no pulse in the control period
  DuplicateControlPulse,   // decode: more than one pulse in the control period
  PulseInForbiddenSlot,    // decode: control pulse in the guard slot
  SpacingViolation,        // decode: payload pulses closer than the minimum spacing
};

const char* codec_status_name(CodecStatus s);

struct EncodeResult {
  CodecStatus status = CodecStatus::Ok;
  std::vector<SimTime> pulses;  // pulse times relative to epoch start
  bool ok() const { return status == CodecStatus::Ok; }
};

struct DecodeResult {
  CodecStatus status = CodecStatus::Ok;
  Packet packet;
  bool ok() const { return status == CodecStatus::Ok; }
};

EncodeResult encode_packet(const RaceLogicConfig& cfg, const Packet& p);

// `pulses` are times relative to the epoch start, in any order.
DecodeResult decode_packet(const RaceLogicConfig& cfg, std::vector<SimTime> pulses);

// Capacity model for an n-slot random payload (balls-into-bins).
// A payload word is formed by dropping n pulses into n slots independently;
// occupied-slot count determines how many bits one packet carries.
double asymptotic_occupancy(int n);        // n - n/e
double exact_occupancy(int n);             // n * (1 - (1 - 1/n)^n)
double bits_per_packet(int n);             // asymptotic_occupancy(n) * log2(n)

}  // namespace pastnoc

#endif  // PASTNOC_RL_PACKET_HPP
