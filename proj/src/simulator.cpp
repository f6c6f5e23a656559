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

#include "pcnflow/simulator.hpp"

#include <algorithm>
#include <sstream>

#include "pcnflow/text.hpp"

namespace pcnflow {

namespace {

void check_path(const ChannelGraph& graph, const std::vector<ArcIndex>& arcs) {
  if (arcs.empty()) throw SessionError("onion path is empty");
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    if (arcs[k] < 0 || arcs[k] >= static_cast<ArcIndex>(graph.arc_count())) {
      throw SessionError("onion path names an unknown arc");
    }
    if (k > 0 &&
        graph.arc(arcs[k]).source != graph.arc(arcs[k - 1]).target) {
      throw SessionError("onion path has broken adjacency at hop " +
                         std::to_string(k));
    }
  }
}

std::string path_names(const ChannelGraph& graph,
                       const std::vector<ArcIndex>& arcs) {
  std::string s = graph.node_name(graph.arc(arcs.front()).source);
  for (ArcIndex a : arcs) {
    s += '>';
    s += graph.node_name(graph.arc(a).target);
  }
  return s;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

OnionPlan plan_onion(const ChannelGraph& graph,
                     const std::vector<ArcIndex>& arcs, Sat delivery_sat,
                     bool fee_aware) {
  check_path(graph, arcs);
  if (delivery_sat < 1) throw SessionError("onion amount must be >= 1 sat");
  OnionPlan plan;
  plan.arcs = arcs;
  plan.hop_amounts_sat.assign(arcs.size(), delivery_sat);
  for (int k = static_cast<int>(arcs.size()) - 1; k >= 1; --k) {
    const Channel& ch = graph.arc(arcs[k]);
    MilliMsat fee = plan.hop_amounts_sat[k] * ch.fee_rate_ppm;
    plan.fee_millimsat += fee;
    if (fee_aware) {
      plan.hop_amounts_sat[k - 1] =
          plan.hop_amounts_sat[k] + (fee + 999999) / 1000000;
    }
  }
  return plan;
}

BalanceOracle::BalanceOracle(const ChannelGraph& graph,
                             const BalanceAssignment& assignment,
                             bool fee_aware)
    : graph_(&graph),
      fee_aware_(fee_aware),
      balances_(assignment.balances()),
      locked_(graph.arc_count(), 0),
      down_(graph.node_count(), false) {}

OnionOutcome BalanceOracle::send_onion(const std::vector<ArcIndex>& arcs,
                                       Sat delivery_sat) {
  OnionPlan plan = plan_onion(*graph_, arcs, delivery_sat, fee_aware_);
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const Channel& ch = graph_->arc(arcs[k]);
    if (down_[ch.target]) {
      return OnionOutcome::failed(static_cast<int>(k), arcs[k], true);
    }
    if (plan.hop_amounts_sat[k] > spendable(arcs[k])) {
      return OnionOutcome::failed(static_cast<int>(k), arcs[k]);
    }
  }
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    locked_[arcs[k]] += plan.hop_amounts_sat[k];
  }
  held_.push_back({arcs, plan.hop_amounts_sat});
  return OnionOutcome::locked();
}

void BalanceOracle::settle_locked() {
  for (const Held& h : held_) {
    for (std::size_t k = 0; k < h.arcs.size(); ++k) {
      ArcIndex a = h.arcs[k];
      locked_[a] -= h.amounts[k];
      balances_[a] -= h.amounts[k];
      ArcIndex rev = graph_->reverse_arc(a);
      if (rev != kNoArc) balances_[rev] += h.amounts[k];
    }
  }
  held_.clear();
}

void BalanceOracle::release_locked() {
  for (const Held& h : held_) {
    for (std::size_t k = 0; k < h.arcs.size(); ++k) {
      locked_[h.arcs[k]] -= h.amounts[k];
    }
  }
  held_.clear();
}

std::optional<Sat> BalanceOracle::known_balance(ArcIndex arc) const {
  return balances_[arc];
}

ScriptedBackend::ScriptedBackend(const ChannelGraph& graph,
                                 std::vector<Entry> script)
    : graph_(&graph), script_(std::move(script)) {}

OnionOutcome ScriptedBackend::send_onion(const std::vector<ArcIndex>& arcs,
                                         Sat delivery_sat) {
  check_path(*graph_, arcs);
  if (next_ >= script_.size()) {
    throw SessionError("script exhausted at onion " + path_names(*graph_, arcs) +
                       " for " + std::to_string(delivery_sat) + " sat");
  }
  const Entry& entry = script_[next_];
  std::vector<std::string> issued;
  issued.push_back(graph_->node_name(graph_->arc(arcs.front()).source));
  for (ArcIndex a : arcs) {
    issued.push_back(graph_->node_name(graph_->arc(a).target));
  }
  if (issued != entry.path || delivery_sat != entry.amount_sat) {
    std::string want = entry.path.empty() ? "?" : entry.path.front();
    for (std::size_t i = 1; i < entry.path.size(); ++i) {
      want += '>';
      want += entry.path[i];
    }
    throw SessionError("script divergence at entry " + std::to_string(next_) +
                       ": issued " + path_names(*graph_, arcs) + " for " +
                       std::to_string(delivery_sat) + " sat, script expects " +
                       want + " for " + std::to_string(entry.amount_sat) +
                       " sat");
  }
  OnionOutcome outcome = entry.outcome;
  if (outcome.kind == OnionOutcome::Kind::kFailed) {
    if (outcome.failed_hop < 0 ||
        outcome.failed_hop >= static_cast<int>(arcs.size())) {
      throw SessionError("script entry " + std::to_string(next_) +
                         " fails at a hop outside the path");
    }
    outcome.failed_arc = arcs[outcome.failed_hop];
  }
  ++next_;
  return outcome;
}

std::vector<ScriptedBackend::Entry> ScriptedBackend::parse_script(
    const ChannelGraph& graph, const std::string& document) {
  std::vector<Entry> entries;
  std::istringstream in(document);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string context = "line " + std::to_string(lineno);
    auto f = split_csv(t);
    if (f.size() < 4 || f[0] != "onion") {
      throw ParseError(context + ": expected onion record");
    }
    Entry e;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= f[1].size(); ++i) {
      if (i == f[1].size() || f[1][i] == '>') {
        e.path.push_back(trim(std::string_view(f[1]).substr(start, i - start)));
        start = i + 1;
      }
    }
    for (const std::string& n : e.path) {
      if (!graph.has_node(n)) {
        throw ParseError(context + ": unknown node '" + n + "'");
      }
    }
    e.amount_sat = parse_int(f[2], context);
    if (f[3] == "lock") {
      e.outcome = OnionOutcome::locked();
    } else if (f[3] == "fail" && f.size() == 6) {
      int hop = static_cast<int>(parse_int(f[4], context));
      bool down;
      if (f[5] == "liquidity") {
        down = false;
      } else if (f[5] == "node_down") {
        down = true;
      } else {
        throw ParseError(context + ": unknown failure reason '" + f[5] + "'");
      }
      e.outcome = OnionOutcome::failed(hop, kNoArc, down);
    } else {
      throw ParseError(context + ": expected lock or fail,<hop>,<reason>");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

struct LockedPath {
  std::vector<ArcIndex> arcs;
  std::vector<Sat> amounts;
  Sat delivery_sat = 0;
  MilliMsat fee_millimsat = 0;
};

std::string hash_config(const std::string& sender, const std::string& receiver,
                        Sat amount, const SessionConfig& c) {
  std::ostringstream s;
  s << sender << '|' << receiver << '|' << amount << '|' << c.quantum << '|'
    << c.mu << '|' << c.max_rounds << '|' << c.fee_aware_oracle << '|'
    << c.receiver_hints << '|' << c.reverse_inference << '|' << c.seed;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s.str())));
  return buf;
}

}  // namespace

SessionReport run_session(const ChannelGraph& graph, PaymentBackend& backend,
                          const std::string& sender,
                          const std::string& receiver, Sat amount_sat,
                          const SessionConfig& config,
                          const RoundObserver& observer) {
  if (amount_sat < 1) throw SessionError("amount must be >= 1 sat");
  if (config.max_rounds < 1) throw SessionError("max_rounds must be >= 1");
  if (config.quantum < 1) throw SessionError("quantum must be >= 1 sat");
  NodeIndex s = graph.node_index(sender);
  NodeIndex r = graph.node_index(receiver);
  if (s == kNoNode || r == kNoNode || s == r) {
    throw SessionError("sender/receiver invalid");
  }

  SessionReport report;
  report.requested_sat = amount_sat;
  report.seed = config.seed;
  report.config_hash = hash_config(sender, receiver, amount_sat, config);

  BeliefStore beliefs(graph, config.reverse_inference);
  for (ArcIndex a : graph.out_arcs(s)) {
    if (auto b = backend.known_balance(a)) beliefs.set_exact(a, *b);
  }
  if (config.receiver_hints) {
    for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
      if (graph.arc(a).target != r) continue;
      if (auto b = backend.known_balance(a)) beliefs.set_exact(a, *b);
    }
  }

  std::vector<bool> disabled(graph.node_count(), false);
  std::vector<LockedPath> locked_paths;
  Sat locked_total = 0;

  auto abandon = [&]() {
    backend.release_locked();
    for (const LockedPath& p : locked_paths) {
      for (std::size_t k = 0; k < p.arcs.size(); ++k) {
        ChannelBelief b = beliefs.belief(p.arcs[k]);
        b.inflight -= p.amounts[k];  // the floor c_min keeps what we learned
        beliefs.set_belief(p.arcs[k], b);
      }
    }
  };

  for (int round = 1; round <= config.max_rounds; ++round) {
    RoundRecord record;
    record.round = round;
    record.residual_before = amount_sat - locked_total;

    FlowProblem problem =
        build_payment_problem(graph, beliefs, sender, receiver,
                              record.residual_before, config.quantum,
                              config.mu, &disabled);
    Flow flow;
    try {
      flow = solve_exact(problem);
    } catch (const SolverError& e) {
      throw SessionError("round " + std::to_string(round) + ": " + e.what());
    }

    if (!flow.feasible && flow.delivered_units == 0) {
      // No belief-feasible flow is left at all: the locked paths saturate a
      // cut, so the locked total is the discovered min-cut value.
      report.status = SessionStatus::kInfeasible;
      report.cut_value_sat = locked_total;
      for (int i : flow.cut_arcs) {
        if (problem.arcs[i].graph_arc != kNoArc) {
          report.cut_arcs.push_back(problem.arcs[i].graph_arc);
        }
      }
      record.residual_after = record.residual_before;
      report.rounds.push_back(std::move(record));
      report.rounds_used = round;
      abandon();
      return report;
    }

    PathDecomposition decomposition = decompose(problem, flow, true);

    // Unit rounding can overshoot the residual; trim the last path so the
    // locked total never exceeds the requested amount.
    std::vector<std::pair<std::vector<ArcIndex>, Sat>> onions;
    Sat planned = 0;
    for (const PathEntry& path : decomposition.paths) {
      std::vector<ArcIndex> arcs;
      for (int i : path.arcs) arcs.push_back(problem.arcs[i].graph_arc);
      onions.emplace_back(std::move(arcs), path.amount_sat);
      planned += path.amount_sat;
    }
    if (flow.feasible && planned > record.residual_before) {
      Sat overshoot = planned - record.residual_before;
      onions.back().second -= overshoot;
      if (onions.back().second < 1) {
        throw SessionError("round " + std::to_string(round) +
                           ": overshoot trim emptied a path");
      }
    }

    for (const auto& [arcs, delivery] : onions) {
      OnionPlan plan =
          plan_onion(graph, arcs, delivery, config.fee_aware_oracle);
      OnionOutcome outcome = backend.send_onion(arcs, delivery);

      OnionRecord onion;
      onion.arcs = arcs;
      onion.nodes.push_back(graph.arc(arcs.front()).source);
      for (ArcIndex a : arcs) onion.nodes.push_back(graph.arc(a).target);
      onion.amount_sat = delivery;
      onion.outcome = outcome;
      onion.fee_millimsat = plan.fee_millimsat;

      if (outcome.kind == OnionOutcome::Kind::kLocked) {
        for (std::size_t k = 0; k < arcs.size(); ++k) {
          beliefs.observe(arcs[k],
                          Observation::htlc_locked(plan.hop_amounts_sat[k]));
        }
        locked_paths.push_back(
            {arcs, plan.hop_amounts_sat, delivery, plan.fee_millimsat});
        locked_total += delivery;
      } else {
        for (int k = 0; k < outcome.failed_hop; ++k) {
          const ChannelBelief& b = beliefs.belief(arcs[k]);
          beliefs.observe(arcs[k], Observation::forwarded_then_released(
                                       b.inflight + plan.hop_amounts_sat[k]));
        }
        ArcIndex failed = arcs[outcome.failed_hop];
        if (outcome.node_down) {
          disabled[graph.arc(failed).target] = true;
        } else {
          const ChannelBelief& b = beliefs.belief(failed);
          beliefs.observe(failed,
                          Observation::failed_at(
                              b.inflight +
                              plan.hop_amounts_sat[outcome.failed_hop]));
        }
      }
      record.onions.push_back(std::move(onion));
    }

    record.residual_after = amount_sat - locked_total;
    report.rounds.push_back(std::move(record));
    report.rounds_used = round;
    if (observer) observer(round, beliefs, disabled);

    if (locked_total == amount_sat) {
      backend.settle_locked();
      MilliMsat fee_mmsat = 0;
      for (const LockedPath& p : locked_paths) {
        fee_mmsat += p.fee_millimsat;
        for (std::size_t k = 0; k < p.arcs.size(); ++k) {
          beliefs.settle(p.arcs[k], p.amounts[k]);
        }
      }
      report.status = SessionStatus::kDelivered;
      report.delivered_sat = amount_sat;
      report.fee_msat = (fee_mmsat + 999) / 1000;
      return report;
    }
  }

  report.status = SessionStatus::kRoundLimit;
  abandon();
  return report;
}

std::string serialize_report(const ChannelGraph& graph,
                             const SessionReport& report) {
  std::ostringstream out;
  out << "round,path,amount_sat,outcome,residual_before,residual_after\n";
  for (const RoundRecord& round : report.rounds) {
    if (round.onions.empty()) {
      out << round.round << ",,," << "no-flow" << ',' << round.residual_before
          << ',' << round.residual_after << "\n";
    }
    for (const OnionRecord& onion : round.onions) {
      std::string path = graph.node_name(onion.nodes.front());
      for (std::size_t i = 1; i < onion.nodes.size(); ++i) {
        path += '>';
        path += graph.node_name(onion.nodes[i]);
      }
      std::string outcome = "locked";
      if (onion.outcome.kind == OnionOutcome::Kind::kFailed) {
        outcome = (onion.outcome.node_down ? "node_down@" : "failed@") +
                  std::to_string(onion.outcome.failed_hop) + ':' +
                  graph.arc(onion.outcome.failed_arc).id;
      }
      out << round.round << ',' << path << ',' << onion.amount_sat << ','
          << outcome << ',' << round.residual_before << ','
          << round.residual_after << "\n";
    }
  }
  const char* status = "round-limit";
  if (report.status == SessionStatus::kDelivered) status = "delivered";
  if (report.status == SessionStatus::kInfeasible) status = "infeasible";
  out << "# status=" << status << " rounds=" << report.rounds_used
      << " requested_sat=" << report.requested_sat
      << " delivered_sat=" << report.delivered_sat
      << " fee_msat=" << report.fee_msat;
  if (report.status == SessionStatus::kInfeasible) {
    out << " cut_value_sat=" << report.cut_value_sat;
  }
  out << " seed=" << report.seed << " config=" << report.config_hash << "\n";
  return out.str();
}

}  // namespace pcnflow
