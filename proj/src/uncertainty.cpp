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

#include "pcnflow/uncertainty.hpp"

#include <cmath>
#include <sstream>

#include "pcnflow/text.hpp"

namespace pcnflow {

Probability success_probability(const ChannelBelief& belief, Sat amount) {
  if (amount < 0) throw Error("success_probability: negative amount");
  const Sat needed = amount + belief.inflight;
  if (needed <= belief.c_min) return Probability(1.0);
  if (needed > belief.c_max) return Probability(0.0);
  const double num = static_cast<double>(belief.c_max + 1 - needed);
  const double den = static_cast<double>(belief.c_max + 1 - belief.c_min);
  return Probability(num / den);
}

std::optional<double> unit_cost(const ChannelBelief& belief, Units k,
                                Sat quantum, double mu,
                                std::int64_t fee_rate_ppm) {
  if (k < 1 || quantum < 1) throw Error("unit_cost: bad unit or quantum");
  if (mu < 0) throw Error("unit_cost: negative mu");
  if (k * quantum > belief.spendable_bound()) return std::nullopt;
  const double p_now = success_probability(belief, k * quantum).value();
  const double p_prev = success_probability(belief, (k - 1) * quantum).value();
  double cost = std::log(p_prev) - std::log(p_now);
  cost += mu * static_cast<double>(quantum) *
          static_cast<double>(fee_rate_ppm) * 1e-6;
  return cost;
}

ChannelBelief update_belief(const ChannelBelief& belief,
                            const Observation& obs) {
  ChannelBelief b = belief;
  switch (obs.kind) {
    case Observation::Kind::kHtlcLocked:
      if (obs.amount < 1) throw BeliefError("HtlcLocked: amount must be >= 1");
      b.inflight += obs.amount;
      b.c_min = std::max(b.c_min, b.inflight);
      break;
    case Observation::Kind::kForwardedThenReleased:
      if (obs.amount < 1) {
        throw BeliefError("ForwardedThenReleased: amount must be >= 1");
      }
      b.c_min = std::max(b.c_min, obs.amount);
      break;
    case Observation::Kind::kFailedAt:
      if (obs.amount < 1) throw BeliefError("FailedAt: amount must be >= 1");
      b.c_max = std::min(b.c_max, obs.amount - 1);
      break;
    case Observation::Kind::kSettled:
      if (obs.amount < 1) throw BeliefError("Settled: amount must be >= 1");
      if (obs.amount > belief.inflight) {
        throw BeliefError("Settled: amount exceeds in-flight total");
      }
      b.inflight -= obs.amount;
      b.c_min -= obs.amount;
      b.c_max -= obs.amount;
      break;
    case Observation::Kind::kNodeDown:
      return b;
  }
  if (!b.valid()) {
    std::ostringstream msg;
    msg << "belief update inconsistent (stale knowledge): capacity "
        << b.capacity << ", c_min " << b.c_min << ", c_max " << b.c_max
        << ", inflight " << b.inflight;
    throw BeliefError(msg.str());
  }
  return b;
}

bool is_convex(const ChannelBelief& belief, Sat quantum) {
  double prev = 0.0;
  for (Units k = 1;; ++k) {
    std::optional<double> c = unit_cost(belief, k, quantum, 0.0, 0);
    if (!c.has_value()) return true;
    if (*c < prev - 1e-12 || *c < -1e-12) return false;
    prev = *c;
  }
}

BeliefStore::BeliefStore(const ChannelGraph& graph, bool reverse_inference)
    : graph_(&graph), reverse_inference_(reverse_inference) {
  beliefs_.reserve(graph.arc_count());
  for (const Channel& ch : graph.arcs()) {
    beliefs_.push_back(ChannelBelief::fresh(ch.capacity_sat));
  }
}

void BeliefStore::set_belief(ArcIndex a, const ChannelBelief& b) {
  if (!b.valid() || b.capacity != graph_->arc(a).capacity_sat) {
    throw BeliefError("set_belief: invalid belief for arc");
  }
  beliefs_[a] = b;
}

void BeliefStore::set_exact(ArcIndex a, Sat balance) {
  const Channel& ch = graph_->arc(a);
  if (balance < 0 || balance > ch.capacity_sat) {
    throw BeliefError("set_exact: balance out of range");
  }
  beliefs_[a] = ChannelBelief::exact(ch.capacity_sat, balance);
  ArcIndex r = graph_->reverse_arc(a);
  if (reverse_inference_ && r != kNoArc &&
      graph_->arc(r).capacity_sat == ch.capacity_sat) {
    ChannelBelief& rev = beliefs_[r];
    Sat complement = ch.capacity_sat - balance;
    rev.c_min = std::max(rev.c_min, complement);
    rev.c_max = std::min(rev.c_max, complement);
    if (!rev.valid()) {
      throw BeliefError("set_exact: reverse belief inconsistent for channel '" +
                        ch.id + "'");
    }
  }
}

void BeliefStore::observe(ArcIndex a, const Observation& obs) {
  beliefs_[a] = update_belief(beliefs_[a], obs);
  if (!reverse_inference_) return;
  ArcIndex r = graph_->reverse_arc(a);
  if (r == kNoArc) return;
  const Sat capacity = graph_->arc(a).capacity_sat;
  if (graph_->arc(r).capacity_sat != capacity) return;
  // X_fwd + X_rev == capacity at all times (balances move only on
  // settlement, which shifts both intervals together).
  ChannelBelief& rev = beliefs_[r];
  ChannelBelief updated = rev;
  updated.c_max = std::min(updated.c_max, capacity - beliefs_[a].c_min);
  updated.c_min = std::max(updated.c_min, capacity - beliefs_[a].c_max);
  if (!updated.valid()) {
    throw BeliefError("reverse inference inconsistent for channel '" +
                      graph_->arc(a).id + "'");
  }
  rev = updated;
}

void BeliefStore::settle(ArcIndex a, Sat h) {
  beliefs_[a] = update_belief(beliefs_[a], Observation::settled(h));
  ArcIndex r = graph_->reverse_arc(a);
  if (r == kNoArc) return;
  const Sat capacity = graph_->arc(a).capacity_sat;
  if (graph_->arc(r).capacity_sat != capacity) return;
  ChannelBelief& rev = beliefs_[r];
  rev.c_min = std::min(rev.c_min + h, capacity);
  rev.c_max = std::min(rev.c_max + h, capacity);
  if (!rev.valid()) {
    throw BeliefError("settlement made reverse belief inconsistent for '" +
                      graph_->arc(a).id + "'");
  }
}

std::string BeliefStore::serialize() const {
  std::ostringstream out;
  out << "channel_id,source,target,c_min,c_max,inflight\n";
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph_->arc_count()); ++a) {
    const Channel& ch = graph_->arc(a);
    const ChannelBelief& b = beliefs_[a];
    out << ch.id << ',' << graph_->node_name(ch.source) << ','
        << graph_->node_name(ch.target) << ',' << b.c_min << ',' << b.c_max
        << ',' << b.inflight << "\n";
  }
  return out.str();
}

BeliefStore BeliefStore::parse(const ChannelGraph& graph,
                               const std::string& document,
                               bool reverse_inference) {
  BeliefStore store(graph, reverse_inference);
  std::istringstream in(document);
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!saw_header) {
      if (t != "channel_id,source,target,c_min,c_max,inflight") {
        throw ParseError("beliefs: missing header");
      }
      saw_header = true;
      continue;
    }
    const std::string context = "line " + std::to_string(lineno);
    auto f = split_csv(t);
    if (f.size() != 6) throw ParseError(context + ": expected 6 fields");
    ArcIndex a = graph.find_arc(f[0], f[1], f[2]);
    if (a == kNoArc) {
      throw ParseError(context + ": unknown arc '" + f[0] + "' " + f[1] +
                       "->" + f[2]);
    }
    ChannelBelief b;
    b.capacity = graph.arc(a).capacity_sat;
    b.c_min = parse_int(f[3], context);
    b.c_max = parse_int(f[4], context);
    b.inflight = parse_int(f[5], context);
    if (!b.valid()) throw ParseError(context + ": belief violates invariants");
    store.beliefs_[a] = b;
  }
  if (!saw_header) throw ParseError("beliefs: empty document");
  return store;
}

}  // namespace pcnflow
