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

#ifndef PCNFLOW_SIMULATOR_HPP_
#define PCNFLOW_SIMULATOR_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcnflow/channel_graph.hpp"
#include "pcnflow/mcf_solver.hpp"
#include "pcnflow/types.hpp"
#include "pcnflow/uncertainty.hpp"

namespace pcnflow {

// Result of dispatching one onion. A failed onion locks nothing anywhere
// (clean unwind); `node_down` distinguishes a dead next hop from a liquidity
// failure.
struct OnionOutcome {
  enum class Kind { kLocked, kFailed };
  Kind kind = Kind::kLocked;
  int failed_hop = -1;
  ArcIndex failed_arc = kNoArc;
  bool node_down = false;

  static OnionOutcome locked() { return {}; }
  static OnionOutcome failed(int hop, ArcIndex arc, bool down = false) {
    return {Kind::kFailed, hop, arc, down};
  }
};

// Per-hop satoshi amounts for delivering `delivery_sat` along `arcs`. With
// fee_aware, every hop additionally carries the downstream proportional fees
// (the sender's own first hop charges nothing); otherwise all hops carry the
// plain amount. fee_millimsat is the exact proportional fee total.
struct OnionPlan {
  std::vector<ArcIndex> arcs;
  std::vector<Sat> hop_amounts_sat;
  MilliMsat fee_millimsat = 0;
};
OnionPlan plan_onion(const ChannelGraph& graph,
                     const std::vector<ArcIndex>& arcs, Sat delivery_sat,
                     bool fee_aware);

// What executes onions: the hidden-balance oracle in simulations, a scripted
// responder in deterministic replays.
class PaymentBackend {
 public:
  virtual ~PaymentBackend() = default;

  // Walks the hops in order; on the first hop without enough spendable
  // balance returns a failure and leaves no liquidity locked anywhere.
  // Success locks the per-hop amounts (HTLC semantics).
  virtual OnionOutcome send_onion(const std::vector<ArcIndex>& arcs,
                                  Sat delivery_sat) = 0;

  // Settles every held lock: balances move hop by hop, reverse directions
  // gain the settled liquidity.
  virtual void settle_locked() = 0;

  // Abandons the session: every lock is released and balances restore.
  virtual void release_locked() = 0;

  // Local knowledge for session setup (sender channels, receiver hints);
  // nullopt when the backend has no ground truth (scripts).
  virtual std::optional<Sat> known_balance(ArcIndex arc) const = 0;
};

// Ground-truth oracle over a hidden BalanceAssignment. The spendable amount
// of an arc is its balance minus what this oracle currently holds locked.
class BalanceOracle : public PaymentBackend {
 public:
  BalanceOracle(const ChannelGraph& graph, const BalanceAssignment& assignment,
                bool fee_aware = true);

  OnionOutcome send_onion(const std::vector<ArcIndex>& arcs,
                          Sat delivery_sat) override;
  void settle_locked() override;
  void release_locked() override;
  std::optional<Sat> known_balance(ArcIndex arc) const override;

  void set_node_down(NodeIndex node) { down_[node] = true; }

  Sat balance(ArcIndex a) const { return balances_[a]; }
  Sat locked(ArcIndex a) const { return locked_[a]; }
  Sat spendable(ArcIndex a) const { return balances_[a] - locked_[a]; }

 private:
  const ChannelGraph* graph_;
  bool fee_aware_;
  std::vector<Sat> balances_;
  std::vector<Sat> locked_;
  std::vector<bool> down_;
  struct Held {
    std::vector<ArcIndex> arcs;
    std::vector<Sat> amounts;
  };
  std::vector<Held> held_;
};

// Replays a fixed outcome list. Each issued onion must match the next entry's
// path and amount, otherwise the replay has diverged and an error names the
// mismatch.
class ScriptedBackend : public PaymentBackend {
 public:
  struct Entry {
    std::vector<std::string> path;  // node names, sender first
    Sat amount_sat = 0;
    OnionOutcome outcome;
  };

  ScriptedBackend(const ChannelGraph& graph, std::vector<Entry> script);

  OnionOutcome send_onion(const std::vector<ArcIndex>& arcs,
                          Sat delivery_sat) override;
  void settle_locked() override {}
  void release_locked() override {}
  std::optional<Sat> known_balance(ArcIndex) const override {
    return std::nullopt;
  }

  std::size_t entries_consumed() const { return next_; }

  // Script files: one line per onion, in issuance order:
  //   onion,s>A>B>d,2,lock
  //   onion,s>A>B>d,2,fail,2,liquidity
  static std::vector<Entry> parse_script(const ChannelGraph& graph,
                                         const std::string& document);

 private:
  const ChannelGraph* graph_;
  std::vector<Entry> script_;
  std::size_t next_ = 0;
};

struct SessionConfig {
  Sat quantum = 1;
  double mu = 0.0;
  int max_rounds = 20;
  bool fee_aware_oracle = true;
  bool receiver_hints = false;
  bool reverse_inference = true;
  std::uint64_t seed = 0;
};

enum class SessionStatus { kDelivered, kInfeasible, kRoundLimit };

struct OnionRecord {
  std::vector<NodeIndex> nodes;
  std::vector<ArcIndex> arcs;
  Sat amount_sat = 0;
  OnionOutcome outcome;
  MilliMsat fee_millimsat = 0;
};

struct RoundRecord {
  int round = 0;
  Sat residual_before = 0;
  Sat residual_after = 0;
  std::vector<OnionRecord> onions;
};

struct SessionReport {
  SessionStatus status = SessionStatus::kRoundLimit;
  int rounds_used = 0;
  Sat requested_sat = 0;
  Sat delivered_sat = 0;
  Msat fee_msat = 0;
  Sat cut_value_sat = 0;            // discovered min-cut (infeasible only)
  std::vector<ArcIndex> cut_arcs;   // graph arcs of the saturated cut
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<RoundRecord> rounds;
};

// Called after each round's belief updates (used by invariant checks).
using RoundObserver =
    std::function<void(int round, const BeliefStore& beliefs,
                       const std::vector<bool>& disabled_nodes)>;

// The round-based payment loop: solve a min-cost flow for the residual on
// current beliefs, decompose, send the onions, learn from every outcome,
// repeat. Terminates when the full amount is locked (then settles), when the
// belief network admits no further flow (infeasible: the discovered cut value
// is what got locked, which then equals the real min-cut), or at the round
// limit. Sender channels start with exact beliefs when the backend knows
// them; receiver channels too with receiver_hints.
SessionReport run_session(const ChannelGraph& graph, PaymentBackend& backend,
                          const std::string& sender,
                          const std::string& receiver, Sat amount_sat,
                          const SessionConfig& config,
                          const RoundObserver& observer = nullptr);

std::string serialize_report(const ChannelGraph& graph,
                             const SessionReport& report);

}  // namespace pcnflow

#endif  // PCNFLOW_SIMULATOR_HPP_
