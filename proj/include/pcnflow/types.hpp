// Copyright 2026 The pcnflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PCNFLOW_TYPES_HPP_
#define PCNFLOW_TYPES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcnflow {

// All amounts are integer satoshi unless a name says otherwise. Fees are
// tracked in millisatoshi; exact proportional fees additionally use
// milli-msat (= sat * ppm) so that no rounding happens before display or
// forwarding. Solver quantities are in units of `quantum` satoshi.
using Sat = std::int64_t;
using Msat = std::int64_t;
using MilliMsat = std::int64_t;  // 1 msat == 1000 milli-msat
using Units = std::int64_t;

// Dense arc index into ChannelGraph::arcs(); stable across runs because arcs
// are kept sorted by (channel id, direction).
using ArcIndex = std::int32_t;
using NodeIndex = std::int32_t;

inline constexpr ArcIndex kNoArc = -1;
inline constexpr NodeIndex kNoNode = -1;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed snapshot / belief / script input. Messages name the offending
// line or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A belief update contradicts what is already known (stale knowledge).
class BeliefError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class SessionError : public Error {
 public:
  using Error::Error;
};

// A probability value, kept in [0,1].
class Probability {
 public:
  Probability() : value_(0.0) {}
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw Error("probability out of range: " + std::to_string(value));
    }
  }

  double value() const { return value_; }

 private:
  double value_;
};

}  // namespace pcnflow

#endif  // PCNFLOW_TYPES_HPP_
