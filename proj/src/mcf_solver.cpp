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

#include "pcnflow/mcf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "pcnflow/text.hpp"

namespace pcnflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cost of the k-th unit (1-indexed) on an arc, conditioning on the offset
// flow already placed there.
double arc_unit_cost(const ProblemArc& arc, Sat quantum, double mu, Units k) {
  const Sat lo = arc.offset_sat + (k - 1) * quantum;
  const Sat hi = arc.offset_sat + k * quantum;
  const double p_lo = success_probability(arc.belief, lo).value();
  const double p_hi = success_probability(arc.belief, hi).value();
  return std::log(p_lo) - std::log(p_hi) +
         mu * static_cast<double>(quantum) *
             static_cast<double>(arc.fee_rate_ppm) * 1e-6;
}

// Total cost of f units on an arc (the telescoped marginal sum).
double arc_flow_cost(const ProblemArc& arc, Sat quantum, double mu, Units f) {
  if (f == 0) return 0.0;
  const double p0 = success_probability(arc.belief, arc.offset_sat).value();
  const double pf =
      success_probability(arc.belief, arc.offset_sat + f * quantum).value();
  return std::log(p0) - std::log(pf) +
         mu * static_cast<double>(f) * static_cast<double>(quantum) *
             static_cast<double>(arc.fee_rate_ppm) * 1e-6;
}

}  // namespace

void FlowProblem::validate() const {
  if (quantum < 1) throw SolverError("problem: quantum must be >= 1");
  if (mu < 0) throw SolverError("problem: mu must be nonnegative");
  if (excess.size() != node_names.size()) {
    throw SolverError("problem: excess vector size mismatch");
  }
  Units total = 0;
  for (Units e : excess) total += e;
  if (total != 0) throw SolverError("problem: excess does not sum to zero");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const ProblemArc& a = arcs[i];
    if (a.tail < 0 || a.head < 0 ||
        a.tail >= static_cast<NodeIndex>(node_names.size()) ||
        a.head >= static_cast<NodeIndex>(node_names.size()) ||
        a.tail == a.head) {
      throw SolverError("problem: arc " + std::to_string(i) +
                        " has bad endpoints");
    }
    if (a.capacity_units < 0) {
      throw SolverError("problem: arc " + std::to_string(i) +
                        " has negative capacity");
    }
    if (!a.belief.valid()) {
      throw SolverError("problem: arc " + std::to_string(i) +
                        " has an invalid belief");
    }
    if (a.offset_sat < 0 ||
        a.offset_sat + a.capacity_units * quantum > a.belief.spendable_bound()) {
      throw SolverError("problem: arc " + std::to_string(i) +
                        " capacity exceeds the belief's spendable bound");
    }
    if (a.fee_rate_ppm < 0) {
      throw SolverError("problem: arc " + std::to_string(i) +
                        " has a negative fee rate");
    }
  }
}

// Problem builders -----------------------------------------------------------

namespace {

FlowProblem make_problem(const ChannelGraph& graph, const BeliefStore& beliefs,
                         const std::vector<Units>& excess_units, Sat quantum,
                         double mu, const std::vector<bool>* disabled_nodes,
                         const std::vector<bool>& fee_exempt_tail) {
  FlowProblem p;
  p.node_names = graph.nodes();
  p.excess = excess_units;
  p.quantum = quantum;
  p.mu = mu;
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    const Channel& ch = graph.arc(a);
    if (disabled_nodes != nullptr &&
        ((*disabled_nodes)[ch.source] || (*disabled_nodes)[ch.target])) {
      continue;
    }
    const ChannelBelief& b = beliefs.belief(a);
    ProblemArc arc;
    arc.tail = ch.source;
    arc.head = ch.target;
    arc.capacity_units = b.spendable_bound() / quantum;
    arc.belief = b;
    arc.fee_rate_ppm = fee_exempt_tail[ch.source] ? 0 : ch.fee_rate_ppm;
    arc.graph_arc = a;
    if (arc.capacity_units > 0) p.arcs.push_back(arc);
  }
  p.validate();
  return p;
}

}  // namespace

FlowProblem build_payment_problem(const ChannelGraph& graph,
                                  const BeliefStore& beliefs,
                                  const std::string& sender,
                                  const std::string& receiver, Sat amount_sat,
                                  Sat quantum, double mu,
                                  const std::vector<bool>* disabled_nodes) {
  NodeIndex s = graph.node_index(sender);
  NodeIndex r = graph.node_index(receiver);
  if (s == kNoNode) throw SolverError("unknown sender node '" + sender + "'");
  if (r == kNoNode) throw SolverError("unknown receiver node '" + receiver + "'");
  if (s == r) throw SolverError("sender and receiver must differ");
  if (amount_sat < 1) throw SolverError("amount must be >= 1 sat");
  if (quantum < 1) throw SolverError("quantum must be >= 1 sat");
  const Units units = (amount_sat + quantum - 1) / quantum;
  std::vector<Units> excess(graph.node_count(), 0);
  excess[s] = units;
  excess[r] = -units;
  std::vector<bool> exempt(graph.node_count(), false);
  exempt[s] = true;
  return make_problem(graph, beliefs, excess, quantum, mu, disabled_nodes,
                      exempt);
}

FlowProblem build_flow_problem(const ChannelGraph& graph,
                               const BeliefStore& beliefs,
                               const std::map<std::string, Sat>& excess_sat,
                               Sat quantum, double mu,
                               const std::vector<bool>* disabled_nodes) {
  if (quantum < 1) throw SolverError("quantum must be >= 1 sat");
  std::vector<Units> excess(graph.node_count(), 0);
  std::vector<bool> exempt(graph.node_count(), false);
  for (const auto& [name, sat] : excess_sat) {
    NodeIndex n = graph.node_index(name);
    if (n == kNoNode) throw SolverError("unknown node '" + name + "'");
    if (sat % quantum != 0) {
      throw SolverError("excess at '" + name +
                        "' is not a multiple of the quantum");
    }
    excess[n] = sat / quantum;
    if (sat > 0) exempt[n] = true;
  }
  return make_problem(graph, beliefs, excess, quantum, mu, disabled_nodes,
                      exempt);
}

FlowProblem build_rebalancing_problem(const ChannelGraph& graph,
                                      const BeliefStore& beliefs,
                                      const std::string& node,
                                      const std::map<std::string, Sat>& surplus,
                                      const std::map<std::string, Sat>& deficit,
                                      Sat quantum, double mu) {
  NodeIndex i = graph.node_index(node);
  if (i == kNoNode) throw SolverError("unknown node '" + node + "'");
  if (quantum < 1) throw SolverError("quantum must be >= 1 sat");
  Sat total_surplus = 0, total_deficit = 0;
  for (const auto& [id, sat] : surplus) {
    (void)id;
    total_surplus += sat;
  }
  for (const auto& [id, sat] : deficit) {
    (void)id;
    total_deficit += sat;
  }
  if (total_surplus != total_deficit) {
    throw SolverError("rebalancing surplus and deficit totals differ");
  }

  // Resolve surplus channels to outbound arcs and deficit channels to
  // inbound arcs of `node`.
  std::vector<bool> removed(graph.arc_count(), false);
  std::vector<Units> excess(graph.node_count(), 0);
  for (const auto& [id, sat] : surplus) {
    if (sat < 0 || sat % quantum != 0) {
      throw SolverError("surplus on '" + id +
                        "' must be a nonnegative multiple of the quantum");
    }
    ArcIndex found = kNoArc;
    for (ArcIndex a : graph.out_arcs(i)) {
      if (graph.arc(a).id == id) {
        found = a;
        break;
      }
    }
    if (found == kNoArc) {
      throw SolverError("surplus channel '" + id +
                        "' is not an outbound channel of '" + node + "'");
    }
    removed[found] = true;
    excess[graph.arc(found).target] += sat / quantum;
  }

  FlowProblem p;
  p.node_names = graph.nodes();
  p.quantum = quantum;
  p.mu = mu;

  struct DeficitCopy {
    ArcIndex arc;
    NodeIndex demand_node;
    Units units;
  };
  std::vector<DeficitCopy> copies;
  for (const auto& [id, sat] : deficit) {
    if (sat < 0 || sat % quantum != 0) {
      throw SolverError("deficit on '" + id +
                        "' must be a nonnegative multiple of the quantum");
    }
    ArcIndex found = kNoArc;
    for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
      if (graph.arc(a).id == id && graph.arc(a).target == i) {
        found = a;
        break;
      }
    }
    if (found == kNoArc) {
      throw SolverError("deficit channel '" + id +
                        "' is not an inbound channel of '" + node + "'");
    }
    NodeIndex demand = static_cast<NodeIndex>(p.node_names.size());
    p.node_names.push_back("demand:" + id);
    copies.push_back({found, demand, sat / quantum});
  }

  p.excess.assign(p.node_names.size(), 0);
  for (NodeIndex n = 0; n < static_cast<NodeIndex>(graph.node_count()); ++n) {
    p.excess[n] = excess[n];
  }
  for (const DeficitCopy& c : copies) p.excess[c.demand_node] -= c.units;

  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    if (removed[a]) continue;
    const Channel& ch = graph.arc(a);
    const ChannelBelief& b = beliefs.belief(a);
    ProblemArc arc;
    arc.tail = ch.source;
    arc.head = ch.target;
    arc.capacity_units = b.spendable_bound() / quantum;
    arc.belief = b;
    arc.fee_rate_ppm = ch.source == i ? 0 : ch.fee_rate_ppm;
    arc.graph_arc = a;
    if (arc.capacity_units > 0) p.arcs.push_back(arc);
  }
  for (const DeficitCopy& c : copies) {
    const Channel& ch = graph.arc(c.arc);
    const ChannelBelief& b = beliefs.belief(c.arc);
    ProblemArc arc;
    arc.tail = ch.source;
    arc.head = c.demand_node;
    arc.capacity_units = b.spendable_bound() / quantum;
    arc.belief = b;
    arc.fee_rate_ppm = ch.fee_rate_ppm;
    arc.graph_arc = c.arc;
    p.arcs.push_back(arc);
  }
  p.validate();
  return p;
}

// Exact solver ---------------------------------------------------------------

namespace {

// Successive shortest path state. Residual arc ids: 2*i forward, 2*i+1
// backward for problem arc i; ascending residual id is the deterministic
// relaxation and tie-breaking order.
class SspSolver {
 public:
  SspSolver(const FlowProblem& problem)
      : p_(problem),
        n_(static_cast<int>(problem.node_names.size())),
        m_(static_cast<int>(problem.arcs.size())),
        flow_(m_, 0),
        fwd_cost_(m_, kInf),
        bwd_cost_(m_, kInf),
        out_res_(n_),
        pi_(n_, 0.0),
        excess_(problem.excess),
        dist_(n_, kInf),
        popped_(n_, false),
        pred_res_(n_, -1) {
    for (int i = 0; i < m_; ++i) {
      const ProblemArc& a = p_.arcs[i];
      out_res_[a.tail].push_back(2 * i);
      out_res_[a.head].push_back(2 * i + 1);
      if (a.capacity_units > 0) {
        fwd_cost_[i] = arc_unit_cost(a, p_.quantum, p_.mu, 1);
      }
    }
    for (auto& v : out_res_) std::sort(v.begin(), v.end());
  }

  Flow run() {
    check_costs();
    Flow result;
    Units supply = 0;
    for (Units e : excess_) {
      if (e > 0) supply += e;
    }
    Units delivered = 0;
    while (delivered < supply) {
      NodeIndex target = dijkstra();
      if (target == kNoNode) break;
      augment(target);
      ++delivered;
    }
    result.flow_units = flow_;
    result.delivered_units = delivered;
    result.feasible = delivered == supply;
    result.potentials = pi_;
    result.numerical_warning = numerical_warning_;
    if (!result.feasible) {
      // Saturated cut between the nodes still holding excess and the rest;
      // the last Dijkstra left `popped_` marking the reachable side.
      for (int i = 0; i < m_; ++i) {
        const ProblemArc& a = p_.arcs[i];
        if (popped_[a.tail] && !popped_[a.head] && a.capacity_units > 0) {
          result.cut_arcs.push_back(i);
        }
      }
    }
    double cost = 0.0;
    for (int i = 0; i < m_; ++i) {
      cost += arc_flow_cost(p_.arcs[i], p_.quantum, p_.mu, flow_[i]);
    }
    result.total_cost = cost;
    return result;
  }

 private:
  void check_costs() {
    for (int i = 0; i < m_; ++i) {
      const ProblemArc& a = p_.arcs[i];
      if (a.capacity_units == 0) continue;
      if (arc_unit_cost(a, p_.quantum, p_.mu, 1) < -1e-12) {
        throw SolverError("arc " + std::to_string(i) +
                          " has a negative marginal cost");
      }
      // Convexity sweep; interval beliefs are convex by construction, so a
      // bounded sweep is enough to catch corrupted cost handles.
      if (a.capacity_units <= 1024 && !is_convex(a.belief, p_.quantum)) {
        throw SolverError("arc " + std::to_string(i) +
                          " has a non-convex cost sequence");
      }
    }
  }

  double residual_cost(int res_id) const {
    return (res_id & 1) ? bwd_cost_[res_id >> 1] : fwd_cost_[res_id >> 1];
  }

  NodeIndex residual_head(int res_id) const {
    const ProblemArc& a = p_.arcs[res_id >> 1];
    return (res_id & 1) ? a.tail : a.head;
  }

  void refresh_costs(int i) {
    const ProblemArc& a = p_.arcs[i];
    fwd_cost_[i] = flow_[i] < a.capacity_units
                       ? arc_unit_cost(a, p_.quantum, p_.mu, flow_[i] + 1)
                       : kInf;
    bwd_cost_[i] = flow_[i] > 0
                       ? -arc_unit_cost(a, p_.quantum, p_.mu, flow_[i])
                       : kInf;
  }

  std::vector<int> path_sequence(NodeIndex v) const {
    std::vector<int> seq;
    while (pred_res_[v] != -1) {
      seq.push_back(pred_res_[v]);
      v = (pred_res_[v] & 1) ? p_.arcs[pred_res_[v] >> 1].head
                             : p_.arcs[pred_res_[v] >> 1].tail;
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
  }

  // Multi-source Dijkstra over the residual network with reduced costs.
  // Returns the nearest deficit node, or kNoNode when none is reachable.
  NodeIndex dijkstra() {
    std::fill(dist_.begin(), dist_.end(), kInf);
    std::fill(popped_.begin(), popped_.end(), false);
    std::fill(pred_res_.begin(), pred_res_.end(), -1);
    std::priority_queue<std::pair<double, NodeIndex>,
                        std::vector<std::pair<double, NodeIndex>>,
                        std::greater<>>
        heap;
    for (NodeIndex v = 0; v < n_; ++v) {
      if (excess_[v] > 0) {
        dist_[v] = 0.0;
        heap.emplace(0.0, v);
      }
    }
    NodeIndex target = kNoNode;
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (popped_[u] || d > dist_[u]) continue;
      popped_[u] = true;
      if (excess_[u] < 0) {
        target = u;
        break;
      }
      for (int res_id : out_res_[u]) {
        double c = residual_cost(res_id);
        if (c == kInf) continue;
        NodeIndex v = residual_head(res_id);
        if (popped_[v]) continue;
        double rc = c + pi_[u] - pi_[v];
        if (rc < 0) {
          if (rc < -1e-7) numerical_warning_ = true;
          rc = 0.0;
        }
        double nd = dist_[u] + rc;
        if (nd < dist_[v]) {
          dist_[v] = nd;
          pred_res_[v] = res_id;
          heap.emplace(nd, v);
        } else if (nd == dist_[v] && pred_res_[v] != -1) {
          // Exact tie: prefer the lexicographically smaller arc-id sequence
          // so solver output is reproducible.
          std::vector<int> cand = path_sequence(u);
          cand.push_back(res_id);
          std::vector<int> cur = path_sequence(v);
          if (std::lexicographical_compare(cand.begin(), cand.end(),
                                           cur.begin(), cur.end())) {
            pred_res_[v] = res_id;
          }
        }
      }
    }
    if (target == kNoNode) return kNoNode;
    const double dt = dist_[target];
    for (NodeIndex v = 0; v < n_; ++v) {
      pi_[v] += popped_[v] ? dist_[v] : dt;
    }
    return target;
  }

  void augment(NodeIndex target) {
    NodeIndex v = target;
    while (pred_res_[v] != -1) {
      int res_id = pred_res_[v];
      int i = res_id >> 1;
      if (res_id & 1) {
        --flow_[i];
        v = p_.arcs[i].head;
      } else {
        ++flow_[i];
        v = p_.arcs[i].tail;
      }
      refresh_costs(i);
    }
    --excess_[v];
    ++excess_[target];
  }

  const FlowProblem& p_;
  int n_;
  int m_;
  std::vector<Units> flow_;
  std::vector<double> fwd_cost_;
  std::vector<double> bwd_cost_;
  std::vector<std::vector<int>> out_res_;
  std::vector<double> pi_;
  std::vector<Units> excess_;
  std::vector<double> dist_;
  std::vector<char> popped_;
  std::vector<int> pred_res_;
  bool numerical_warning_ = false;
};

}  // namespace

Flow solve_exact(const FlowProblem& problem) {
  problem.validate();
  SspSolver solver(problem);
  return solver.run();
}

bool verify_optimality(const FlowProblem& problem, const Flow& flow,
                       double tolerance) {
  if (!flow.feasible) return false;
  if (flow.potentials.size() != problem.node_names.size()) return false;
  for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
    const ProblemArc& a = problem.arcs[i];
    const Units f = flow.flow_units[i];
    const double dpi = flow.potentials[a.tail] - flow.potentials[a.head];
    if (f < a.capacity_units) {
      if (arc_unit_cost(a, problem.quantum, problem.mu, f + 1) + dpi <
          -tolerance) {
        return false;
      }
    }
    if (f > 0) {
      if (-arc_unit_cost(a, problem.quantum, problem.mu, f) - dpi < -tolerance) {
        return false;
      }
    }
  }
  return true;
}

Flow solve_scaled(const FlowProblem& problem, Sat coarse_quantum) {
  problem.validate();
  if (coarse_quantum < problem.quantum) {
    throw SolverError("coarse quantum must be >= the problem quantum");
  }
  // Keep the coarse quantum a multiple of the fine one so all flows stay on
  // the fine grid.
  Sat coarse = coarse_quantum / problem.quantum * problem.quantum;
  const Sat fine = problem.quantum;

  while (coarse > fine) {
    FlowProblem cp;
    cp.node_names = problem.node_names;
    cp.quantum = coarse;
    cp.mu = problem.mu;
    cp.excess.assign(problem.excess.size(), 0);
    Units imbalance = 0;
    for (std::size_t v = 0; v < problem.excess.size(); ++v) {
      const Sat sat = problem.excess[v] * fine;
      cp.excess[v] = sat / coarse;  // truncates toward zero
      imbalance += cp.excess[v];
    }
    // Trimming remainders can leave the coarse vector unbalanced; shave the
    // heavier side deterministically, the remainder moves to the fine stage.
    for (std::size_t v = 0; imbalance > 0 && v < cp.excess.size(); ++v) {
      while (cp.excess[v] > 0 && imbalance > 0) {
        --cp.excess[v];
        --imbalance;
      }
    }
    for (std::size_t v = 0; imbalance < 0 && v < cp.excess.size(); ++v) {
      while (cp.excess[v] < 0 && imbalance < 0) {
        ++cp.excess[v];
        ++imbalance;
      }
    }
    for (const ProblemArc& a : problem.arcs) {
      ProblemArc c = a;
      c.capacity_units = (a.belief.spendable_bound() - a.offset_sat) / coarse;
      cp.arcs.push_back(c);
    }

    Flow coarse_flow = solve_exact(cp);
    if (coarse_flow.feasible) {
      FlowProblem fp;
      fp.node_names = problem.node_names;
      fp.quantum = fine;
      fp.mu = problem.mu;
      fp.excess.assign(problem.excess.size(), 0);
      for (std::size_t v = 0; v < problem.excess.size(); ++v) {
        fp.excess[v] = problem.excess[v] - cp.excess[v] * (coarse / fine);
      }
      for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
        ProblemArc c = problem.arcs[i];
        c.offset_sat += coarse_flow.flow_units[i] * coarse;
        c.capacity_units = (c.belief.spendable_bound() - c.offset_sat) / fine;
        fp.arcs.push_back(c);
      }
      Flow fine_flow = solve_exact(fp);
      if (fine_flow.feasible) {
        Flow merged;
        merged.feasible = true;
        merged.flow_units.resize(problem.arcs.size());
        for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
          merged.flow_units[i] =
              coarse_flow.flow_units[i] * (coarse / fine) +
              fine_flow.flow_units[i];
        }
        Units supply = 0;
        for (Units e : problem.excess) {
          if (e > 0) supply += e;
        }
        merged.delivered_units = supply;
        merged.numerical_warning =
            coarse_flow.numerical_warning || fine_flow.numerical_warning;
        double cost = 0.0;
        for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
          cost += arc_flow_cost(problem.arcs[i], fine, problem.mu,
                                merged.flow_units[i]);
        }
        merged.total_cost = cost;
        return merged;
      }
    }
    coarse = std::max(fine, coarse / fine / 2 * fine);
  }
  return solve_exact(problem);
}

// Decomposition --------------------------------------------------------------

PathDecomposition decompose(const FlowProblem& problem, const Flow& flow,
                            bool allow_partial) {
  if (!flow.feasible && !allow_partial) {
    throw SolverError("decompose: flow is not feasible");
  }
  if (flow.flow_units.size() != problem.arcs.size()) {
    throw SolverError("decompose: flow does not match problem");
  }
  const int n = static_cast<int>(problem.node_names.size());
  const int m = static_cast<int>(problem.arcs.size());

  std::vector<Units> remaining = flow.flow_units;
  std::vector<Units> imbalance(n, 0);
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < m; ++i) {
    if (flow.flow_units[i] < 0) throw SolverError("decompose: negative flow");
    imbalance[problem.arcs[i].tail] += flow.flow_units[i];
    imbalance[problem.arcs[i].head] -= flow.flow_units[i];
    if (flow.flow_units[i] > 0) out[problem.arcs[i].tail].push_back(i);
  }
  for (auto& v : out) std::sort(v.begin(), v.end());
  std::vector<std::size_t> ptr(n, 0);
  std::vector<int> on_path(n, -1);

  PathDecomposition result;

  auto next_arc = [&](NodeIndex v) -> int {
    while (ptr[v] < out[v].size() && remaining[out[v][ptr[v]]] == 0) ++ptr[v];
    return ptr[v] < out[v].size() ? out[v][ptr[v]] : -1;
  };

  for (NodeIndex source = 0; source < n; ++source) {
    while (imbalance[source] > 0) {
      std::vector<int> arcs;
      std::vector<NodeIndex> nodes{source};
      NodeIndex cur = source;
      on_path[source] = 0;
      bool restart = false;
      while (!(imbalance[cur] < 0 && cur != source)) {
        int a = next_arc(cur);
        if (a == -1) {
          throw SolverError("decompose: conservation violated at node " +
                            problem.node_names[cur]);
        }
        NodeIndex to = problem.arcs[a].head;
        if (on_path[to] != -1) {
          // Splice out the cycle and restart the walk.
          int start = on_path[to];
          Units c = remaining[a];
          for (std::size_t k = start; k < arcs.size(); ++k) {
            c = std::min(c, remaining[arcs[k]]);
          }
          CycleEntry cycle;
          cycle.nodes.assign(nodes.begin() + start, nodes.end());
          cycle.nodes.push_back(to);
          cycle.arcs.assign(arcs.begin() + start, arcs.end());
          cycle.arcs.push_back(a);
          cycle.amount_units = c;
          cycle.amount_sat = c * problem.quantum;
          for (int arc : cycle.arcs) remaining[arc] -= c;
          result.cycles.push_back(std::move(cycle));
          for (NodeIndex nd : nodes) on_path[nd] = -1;
          restart = true;
          break;
        }
        arcs.push_back(a);
        nodes.push_back(to);
        on_path[to] = static_cast<int>(nodes.size()) - 1;
        cur = to;
      }
      if (restart) continue;
      Units amount = std::min(imbalance[source], -imbalance[cur]);
      for (int a : arcs) amount = std::min(amount, remaining[a]);
      for (int a : arcs) remaining[a] -= amount;
      imbalance[source] -= amount;
      imbalance[cur] += amount;
      for (NodeIndex nd : nodes) on_path[nd] = -1;
      PathEntry path;
      path.nodes = std::move(nodes);
      path.arcs = std::move(arcs);
      path.amount_units = amount;
      path.amount_sat = amount * problem.quantum;
      result.paths.push_back(std::move(path));
    }
  }

  // What is left is circulation; peel cycles off arc by arc.
  for (int i = 0; i < m; ++i) {
    while (remaining[i] > 0) {
      std::vector<int> arcs{i};
      std::vector<NodeIndex> nodes{problem.arcs[i].tail, problem.arcs[i].head};
      on_path[problem.arcs[i].tail] = 0;
      on_path[problem.arcs[i].head] = 1;
      NodeIndex cur = problem.arcs[i].head;
      while (true) {
        int a = next_arc(cur);
        if (a == -1) {
          throw SolverError("decompose: dangling circulation at node " +
                            problem.node_names[cur]);
        }
        NodeIndex to = problem.arcs[a].head;
        if (on_path[to] != -1) {
          int start = on_path[to];
          arcs.push_back(a);
          nodes.push_back(to);
          CycleEntry cycle;
          cycle.nodes.assign(nodes.begin() + start, nodes.end());
          cycle.arcs.assign(arcs.begin() + start, arcs.end());
          Units c = remaining[cycle.arcs.front()];
          for (int arc : cycle.arcs) c = std::min(c, remaining[arc]);
          cycle.amount_units = c;
          cycle.amount_sat = c * problem.quantum;
          for (int arc : cycle.arcs) remaining[arc] -= c;
          result.cycles.push_back(std::move(cycle));
          break;
        }
        arcs.push_back(a);
        nodes.push_back(to);
        on_path[to] = static_cast<int>(nodes.size()) - 1;
        cur = to;
      }
      for (NodeIndex nd : nodes) on_path[nd] = -1;
    }
  }
  return result;
}

// Metrics --------------------------------------------------------------------

namespace {

// Per-hop forwarded satoshi for delivering `delivery_sat` over `arcs`
// (problem arc indices, source first). The hop amounts accumulate the
// downstream proportional fees; the first hop charges nothing.
struct PathFees {
  MilliMsat total_fee_millimsat = 0;
  std::vector<Sat> hop_amounts_sat;
};

PathFees path_fees(const FlowProblem& problem, const std::vector<int>& arcs,
                   Sat delivery_sat) {
  PathFees fees;
  fees.hop_amounts_sat.assign(arcs.size(), delivery_sat);
  for (int k = static_cast<int>(arcs.size()) - 1; k >= 1; --k) {
    const ProblemArc& a = problem.arcs[arcs[k]];
    MilliMsat fee = fees.hop_amounts_sat[k] * a.fee_rate_ppm;
    fees.total_fee_millimsat += fee;
    fees.hop_amounts_sat[k - 1] =
        fees.hop_amounts_sat[k] + (fee + 999999) / 1000000;
  }
  return fees;
}

}  // namespace

FlowMetrics flow_metrics(const FlowProblem& problem, const Flow& flow) {
  if (!flow.feasible) throw SolverError("flow_metrics: flow is not feasible");
  FlowMetrics metrics;
  double log_p = 0.0;
  double fee_objective = 0.0;
  for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
    const ProblemArc& a = problem.arcs[i];
    const Units f = flow.flow_units[i];
    if (f == 0) continue;
    const double p0 = success_probability(a.belief, a.offset_sat).value();
    const double pf =
        success_probability(a.belief, a.offset_sat + f * problem.quantum)
            .value();
    log_p += std::log(pf) - std::log(p0);
    fee_objective += static_cast<double>(f) *
                     static_cast<double>(problem.quantum) *
                     static_cast<double>(a.fee_rate_ppm) * 1e-6;
  }
  PathDecomposition decomposition = decompose(problem, flow);
  MilliMsat fee_mmsat = 0;
  for (const PathEntry& path : decomposition.paths) {
    fee_mmsat += path_fees(problem, path.arcs, path.amount_sat)
                     .total_fee_millimsat;
  }
  metrics.probability = Probability(std::exp(log_p));
  metrics.fee_msat = (fee_mmsat + 999) / 1000;
  metrics.fee_objective_sat = fee_objective;
  metrics.cost = -log_p + problem.mu * fee_objective;
  return metrics;
}

// Max-flow / min-cut ---------------------------------------------------------

namespace {

// Dinic on the balance graph with a super source/sink.
class DinicSolver {
 public:
  DinicSolver(int n) : n_(n), adj_(n), level_(n), ptr_(n) {}

  int add_edge(int from, int to, Sat cap) {
    int id = static_cast<int>(edges_.size());
    edges_.push_back({to, cap, 0});
    edges_.push_back({from, 0, 0});
    adj_[from].push_back(id);
    adj_[to].push_back(id + 1);
    return id;
  }

  Sat run(int s, int t) {
    Sat total = 0;
    while (bfs(s, t)) {
      std::fill(ptr_.begin(), ptr_.end(), 0);
      while (Sat pushed = dfs(s, t, std::numeric_limits<Sat>::max())) {
        total += pushed;
      }
    }
    return total;
  }

  std::vector<bool> reachable(int s) const {
    std::vector<bool> seen(n_, false);
    std::vector<int> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int id : adj_[v]) {
        const Edge& e = edges_[id];
        if (e.cap - e.flow > 0 && !seen[e.to]) {
          seen[e.to] = true;
          stack.push_back(e.to);
        }
      }
    }
    return seen;
  }

  Sat edge_flow(int id) const { return edges_[id].flow; }

 private:
  struct Edge {
    int to;
    Sat cap;
    Sat flow;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    q.push(s);
    level_[s] = 0;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int id : adj_[v]) {
        const Edge& e = edges_[id];
        if (e.cap - e.flow > 0 && level_[e.to] == -1) {
          level_[e.to] = level_[v] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[t] != -1;
  }

  Sat dfs(int v, int t, Sat limit) {
    if (v == t || limit == 0) return limit;
    for (std::size_t& i = ptr_[v]; i < adj_[v].size(); ++i) {
      int id = adj_[v][i];
      Edge& e = edges_[id];
      if (level_[e.to] != level_[v] + 1 || e.cap - e.flow <= 0) continue;
      Sat pushed = dfs(e.to, t, std::min(limit, e.cap - e.flow));
      if (pushed > 0) {
        e.flow += pushed;
        edges_[id ^ 1].flow -= pushed;
        return pushed;
      }
    }
    return 0;
  }

  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> ptr_;
};

}  // namespace

MaxFlowResult max_flow(const ChannelGraph& graph,
                       const BalanceAssignment& assignment,
                       const std::vector<NodeIndex>& sources,
                       const std::vector<NodeIndex>& sinks) {
  for (NodeIndex s : sources) {
    for (NodeIndex t : sinks) {
      if (s == t) throw SolverError("max_flow: sources and sinks intersect");
    }
  }
  const int n = static_cast<int>(graph.node_count());
  DinicSolver dinic(n + 2);
  const int super_s = n;
  const int super_t = n + 1;
  Sat total_balance = 1;
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    total_balance += assignment.balance(a);
  }
  std::vector<int> edge_of_arc(graph.arc_count());
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    const Channel& ch = graph.arc(a);
    edge_of_arc[a] = dinic.add_edge(ch.source, ch.target, assignment.balance(a));
  }
  for (NodeIndex s : sources) dinic.add_edge(super_s, s, total_balance);
  for (NodeIndex t : sinks) dinic.add_edge(t, super_t, total_balance);

  MaxFlowResult result;
  result.value_sat = dinic.run(super_s, super_t);
  std::vector<bool> reach = dinic.reachable(super_s);
  result.flow_sat.resize(graph.arc_count());
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    result.flow_sat[a] = std::max<Sat>(0, dinic.edge_flow(edge_of_arc[a]));
    const Channel& ch = graph.arc(a);
    if (reach[ch.source] && !reach[ch.target] && assignment.balance(a) > 0) {
      result.min_cut.push_back(a);
    }
  }
  return result;
}

// Serialization ---------------------------------------------------------------

std::string serialize_problem(const FlowProblem& problem) {
  std::ostringstream out;
  out << "# pcnflow flow problem\n";
  char mu[64];
  std::snprintf(mu, sizeof(mu), "%.17g", problem.mu);
  out << "quantum," << problem.quantum << "\nmu," << mu << "\nnodes,"
      << problem.node_names.size() << "\n";
  for (std::size_t v = 0; v < problem.node_names.size(); ++v) {
    out << "node," << v << ',' << problem.node_names[v] << ','
        << problem.excess[v] << "\n";
  }
  for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
    const ProblemArc& a = problem.arcs[i];
    out << "arc," << i << ',' << a.tail << ',' << a.head << ','
        << a.capacity_units << ',' << a.belief.capacity << ',' << a.belief.c_min
        << ',' << a.belief.c_max << ',' << a.belief.inflight << ','
        << a.fee_rate_ppm << ',' << a.offset_sat << ',' << a.graph_arc << "\n";
  }
  return out.str();
}

FlowProblem parse_problem(const std::string& document) {
  FlowProblem p;
  std::istringstream in(document);
  std::string line;
  int lineno = 0;
  std::size_t node_count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string context = "line " + std::to_string(lineno);
    auto f = split_csv(t);
    if (f[0] == "quantum" && f.size() == 2) {
      p.quantum = parse_int(f[1], context);
    } else if (f[0] == "mu" && f.size() == 2) {
      p.mu = parse_double(f[1], context);
    } else if (f[0] == "nodes" && f.size() == 2) {
      node_count = static_cast<std::size_t>(parse_int(f[1], context));
      p.node_names.resize(node_count);
      p.excess.assign(node_count, 0);
    } else if (f[0] == "node" && f.size() == 4) {
      std::size_t v = static_cast<std::size_t>(parse_int(f[1], context));
      if (v >= node_count) throw ParseError(context + ": node index range");
      p.node_names[v] = f[2];
      p.excess[v] = parse_int(f[3], context);
    } else if (f[0] == "arc" && f.size() == 12) {
      ProblemArc a;
      a.tail = static_cast<NodeIndex>(parse_int(f[2], context));
      a.head = static_cast<NodeIndex>(parse_int(f[3], context));
      a.capacity_units = parse_int(f[4], context);
      a.belief.capacity = parse_int(f[5], context);
      a.belief.c_min = parse_int(f[6], context);
      a.belief.c_max = parse_int(f[7], context);
      a.belief.inflight = parse_int(f[8], context);
      a.fee_rate_ppm = parse_int(f[9], context);
      a.offset_sat = parse_int(f[10], context);
      a.graph_arc = static_cast<ArcIndex>(parse_int(f[11], context));
      std::size_t idx = static_cast<std::size_t>(parse_int(f[1], context));
      if (idx != p.arcs.size()) {
        throw ParseError(context + ": arc records out of order");
      }
      p.arcs.push_back(a);
    } else {
      throw ParseError(context + ": unrecognized record '" + f[0] + "'");
    }
  }
  p.validate();
  return p;
}

std::string serialize_flow(const FlowProblem& problem, const Flow& flow) {
  std::ostringstream out;
  out << "# pcnflow flow\n";
  out << "feasible," << (flow.feasible ? 1 : 0) << "\n";
  out << "delivered_units," << flow.delivered_units << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", flow.total_cost);
  out << "total_cost," << buf << "\n";
  for (std::size_t i = 0; i < flow.flow_units.size(); ++i) {
    if (flow.flow_units[i] != 0) {
      out << "flow," << i << ',' << flow.flow_units[i] << "\n";
    }
  }
  (void)problem;
  return out.str();
}

Flow parse_flow(const FlowProblem& problem, const std::string& document) {
  Flow flow;
  flow.flow_units.assign(problem.arcs.size(), 0);
  std::istringstream in(document);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string context = "line " + std::to_string(lineno);
    auto f = split_csv(t);
    if (f[0] == "feasible" && f.size() == 2) {
      flow.feasible = parse_int(f[1], context) != 0;
    } else if (f[0] == "delivered_units" && f.size() == 2) {
      flow.delivered_units = parse_int(f[1], context);
    } else if (f[0] == "total_cost" && f.size() == 2) {
      flow.total_cost = parse_double(f[1], context);
    } else if (f[0] == "flow" && f.size() == 3) {
      std::size_t i = static_cast<std::size_t>(parse_int(f[1], context));
      if (i >= problem.arcs.size()) {
        throw ParseError(context + ": arc index out of range");
      }
      flow.flow_units[i] = parse_int(f[2], context);
      if (flow.flow_units[i] < 0 ||
          flow.flow_units[i] > problem.arcs[i].capacity_units) {
        throw ParseError(context + ": flow violates the arc capacity");
      }
    } else {
      throw ParseError(context + ": unrecognized record '" + f[0] + "'");
    }
  }
  return flow;
}

std::string serialize_decomposition(const FlowProblem& problem,
                                    const PathDecomposition& decomposition) {
  std::ostringstream out;
  out << "# pcnflow decomposition\n";
  auto join_nodes = [&](const std::vector<NodeIndex>& nodes) {
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i > 0) s += '>';
      s += problem.node_names[nodes[i]];
    }
    return s;
  };
  for (const PathEntry& path : decomposition.paths) {
    double log_p = 0.0;
    for (int a : path.arcs) {
      log_p += std::log(success_probability(problem.arcs[a].belief,
                                            problem.arcs[a].offset_sat +
                                                path.amount_sat)
                            .value());
    }
    MilliMsat fee = path_fees(problem, path.arcs, path.amount_sat)
                        .total_fee_millimsat;
    out << "path," << path.amount_sat << ',' << format_g6(std::exp(log_p))
        << ',' << (fee + 999) / 1000 << ',' << join_nodes(path.nodes) << "\n";
  }
  for (const CycleEntry& cycle : decomposition.cycles) {
    out << "cycle," << cycle.amount_sat << ',' << join_nodes(cycle.nodes)
        << "\n";
  }
  return out.str();
}

}  // namespace pcnflow
