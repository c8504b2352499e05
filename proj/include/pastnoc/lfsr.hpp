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

// 8-bit Galois LFSR used as the pseudo-random pulse source for randomized
// arbitration.  Polynomial x^8 + x^6 + x^5 + x^4 + 1 (maximal, period 255).
// One step produces a full 8-bit word; distinct routers tap distinct bit
// positions of the shared word so one generator can feed many arbiters.

#ifndef PASTNOC_LFSR_HPP
#define PASTNOC_LFSR_HPP

#include <cstdint>
#include <stdexcept>

namespace pastnoc {

class Lfsr8 {
 public:
  // Raised on a zero seed: an all-zero register never leaves state zero.
  class ZeroState : public std::runtime_error {
   public:
    ZeroState() : std::runtime_error("lfsr seed must be non-zero") {}
  };

  explicit Lfsr8(std::uint8_t seed = 0x01) : state_(seed) {
    if (seed == 0) throw ZeroState();
  }

  // Advance one step and return the new register word.
  std::uint8_t step() {
    bool lsb = state_ & 1u;
    state_ >>= 1;
    if (lsb) state_ ^= kTapMask;
    return state_;
  }

  std::uint8_t state() const { return state_; }

  // Output bit for router `idx`: routers share the word, one bit each.
  bool bit_for(int idx) const { return (state_ >> (idx & 7)) & 1u; }

  // Right-shift Galois mask for x^8 + x^6 + x^5 + x^4 + 1.
  static constexpr std::uint8_t kTapMask = 0xB8;

 private:
  std::uint8_t state_;
};

}  // namespace pastnoc

#endif  // PASTNOC_LFSR_HPP
