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

#ifndef PCNFLOW_UNCERTAINTY_HPP_
#define PCNFLOW_UNCERTAINTY_HPP_

#include <optional>
#include <string>
#include <vector>

#include "pcnflow/channel_graph.hpp"
#include "pcnflow/types.hpp"

namespace pcnflow {

// Everything known about one directed channel's spendable balance X:
// c_min <= X <= c_max (inclusive, integer satoshi, uniform within), plus the
// amount this session holds locked in HTLCs on the arc. The in-flight amount
// is part of X (it was spendable when the HTLC was accepted) but cannot be
// spent again, so probabilities for a further payment of `a` condition on
// X >= a + inflight.
struct ChannelBelief {
  Sat capacity = 0;
  Sat c_min = 0;
  Sat c_max = 0;
  Sat inflight = 0;

  static ChannelBelief fresh(Sat capacity) {
    return ChannelBelief{capacity, 0, capacity, 0};
  }
  static ChannelBelief exact(Sat capacity, Sat balance) {
    return ChannelBelief{capacity, balance, balance, 0};
  }

  bool valid() const {
    return 0 <= inflight && inflight <= c_min && c_min <= c_max &&
           c_max <= capacity;
  }
  // Largest further amount with success probability > 0.
  Sat spendable_bound() const { return c_max - inflight; }

  bool operator==(const ChannelBelief&) const = default;
};

// What a payment round taught us about one arc. Amounts are absolute
// thresholds on X (callers fold their own in-flight total into them):
//   HtlcLocked(h)            -- h more sat just locked; X >= new inflight
//   ForwardedThenReleased(h) -- the arc forwarded h in total; X >= h
//   FailedAt(h)              -- forwarding h failed; X <= h-1
//   Settled(h)               -- h locked sat settled; X shrinks by h
//   NodeDown                 -- belief untouched; arcs removed at graph layer
struct Observation {
  enum class Kind {
    kHtlcLocked,
    kForwardedThenReleased,
    kFailedAt,
    kSettled,
    kNodeDown
  };
  Kind kind = Kind::kNodeDown;
  Sat amount = 0;

  static Observation htlc_locked(Sat h) {
    return {Kind::kHtlcLocked, h};
  }
  static Observation forwarded_then_released(Sat h) {
    return {Kind::kForwardedThenReleased, h};
  }
  static Observation failed_at(Sat h) { return {Kind::kFailedAt, h}; }
  static Observation settled(Sat h) { return {Kind::kSettled, h}; }
  static Observation node_down() { return {Kind::kNodeDown, 0}; }
};

// P(X >= amount + inflight | c_min <= X <= c_max), uniform within the
// interval: 1 below c_min, 0 above c_max, linear ramp between. A fresh
// belief gives the uniform prior (u + 1 - a) / (u + 1).
Probability success_probability(const ChannelBelief& belief, Sat amount);

// Marginal cost of the k-th flow unit (k >= 1) at quantum Q:
//   -log P(kQ) + log P((k-1)Q) + mu * Q * fee_rate_ppm * 1e-6.
// nullopt means the unit is infeasible (saturated). The sequence over k is
// nonnegative and nondecreasing, which is what makes min-cost solving valid.
std::optional<double> unit_cost(const ChannelBelief& belief, Units k,
                                Sat quantum, double mu,
                                std::int64_t fee_rate_ppm);

// Applies one observation, returning the new belief. Throws BeliefError when
// the observation contradicts the interval (stale knowledge).
ChannelBelief update_belief(const ChannelBelief& belief, const Observation& obs);

// True iff the marginal cost sequence at mu = 0 is nondecreasing over the
// whole feasible range. Interval beliefs satisfy this by construction; the
// sweep exists as an executable check.
bool is_convex(const ChannelBelief& belief, Sat quantum);

// Per-arc beliefs for one session over a fixed graph. Applies observations
// together with the capacity-complement inference on the reverse direction
// (balances of the two directions always sum to the capacity, so learning
// X >= h on one side teaches X' <= capacity - h on the other).
class BeliefStore {
 public:
  explicit BeliefStore(const ChannelGraph& graph, bool reverse_inference = true);

  const ChannelGraph& graph() const { return *graph_; }
  const ChannelBelief& belief(ArcIndex a) const { return beliefs_[a]; }
  void set_belief(ArcIndex a, const ChannelBelief& b);
  void set_exact(ArcIndex a, Sat balance);

  // Applies `obs` to arc `a` plus the implied reverse-direction update.
  void observe(ArcIndex a, const Observation& obs);

  // Settlement moves liquidity: the arc's interval shifts down by h and the
  // reverse direction's shifts up.
  void settle(ArcIndex a, Sat h);

  bool reverse_inference() const { return reverse_inference_; }

  std::string serialize() const;
  static BeliefStore parse(const ChannelGraph& graph,
                           const std::string& document,
                           bool reverse_inference = true);

 private:
  const ChannelGraph* graph_;
  std::vector<ChannelBelief> beliefs_;
  bool reverse_inference_;
};

}  // namespace pcnflow

#endif  // PCNFLOW_UNCERTAINTY_HPP_
