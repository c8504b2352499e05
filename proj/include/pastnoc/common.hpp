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

#ifndef PASTNOC_COMMON_HPP
#define PASTNOC_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pastnoc {

// All simulation timestamps are integer picoseconds.
using SimTime = std::int64_t;

// Raised when a configuration file or CLI value is missing or malformed.
// what() always names the offending field.  CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& msg)
      : std::runtime_error("config error: field '" + field + "': " + msg),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Raised when the pulse-level and behavioral models disagree.
// CLI maps this to exit code 3.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg)
      : std::runtime_error("validation mismatch: " + msg) {}
};

// Raised by the event engine if a pulse is scheduled before the
// current simulation time (a causality bug in the netlist).
class SchedulingInPast : public std::runtime_error {
 public:
  SchedulingInPast(SimTime now, SimTime t)
      : std::runtime_error("pulse scheduled at t=" + std::to_string(t) +
                           " but simulation time is already " +
                           std::to_string(now)) {}
};

}  // namespace pastnoc

#endif  // PASTNOC_COMMON_HPP
