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

#ifndef PCNFLOW_MCF_SOLVER_HPP_
#define PCNFLOW_MCF_SOLVER_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcnflow/channel_graph.hpp"
#include "pcnflow/types.hpp"
#include "pcnflow/uncertainty.hpp"

namespace pcnflow {

// One arc of a flow problem. The cost of routing k units is
//   -log P(offset_sat + k*Q) + log P(offset_sat)  +  mu * k * Q * fee * 1e-6
// with P the belief's success probability; marginals are nonnegative and
// nondecreasing (separable convex cost). `fee_rate_ppm` is the effective
// rate: arcs leaving a supply node carry 0 because senders pay no fees to
// themselves. `offset_sat` is flow already committed by a coarser solve.
struct ProblemArc {
  NodeIndex tail = kNoNode;
  NodeIndex head = kNoNode;
  Units capacity_units = 0;
  ChannelBelief belief;
  std::int64_t fee_rate_ppm = 0;
  Sat offset_sat = 0;
  ArcIndex graph_arc = kNoArc;  // provenance; kNoArc for synthetic copies
};

// Integer min-cost flow instance at quantum Q satoshi per unit. Node indices
// refer to `node_names`; for payment problems these coincide with the graph's
// node indices, rebalancing problems append synthetic demand nodes.
struct FlowProblem {
  std::vector<std::string> node_names;
  std::vector<ProblemArc> arcs;
  std::vector<Units> excess;  // per node, sums to zero
  Sat quantum = 1;
  double mu = 0.0;

  void validate() const;  // throws SolverError on broken invariants
};

struct Flow {
  std::vector<Units> flow_units;  // per problem arc
  bool feasible = false;
  Units delivered_units = 0;  // total excess routed (== supply iff feasible)
  double total_cost = 0.0;
  std::vector<double> potentials;  // final node potentials (exact solves)
  std::vector<int> cut_arcs;  // saturated problem arcs certifying infeasibility
  bool numerical_warning = false;
};

struct PathEntry {
  std::vector<NodeIndex> nodes;
  std::vector<int> arcs;  // problem arc indices along the path
  Units amount_units = 0;
  Sat amount_sat = 0;
};

struct CycleEntry {
  std::vector<NodeIndex> nodes;  // first node repeated at the end
  std::vector<int> arcs;
  Units amount_units = 0;
  Sat amount_sat = 0;
};

// An MPP split: per-arc sums over paths plus cycles reconstruct the flow
// exactly; cycles move no excess and are excluded from payments.
struct PathDecomposition {
  std::vector<PathEntry> paths;
  std::vector<CycleEntry> cycles;
};

struct FlowMetrics {
  Probability probability;     // product of arc success probabilities
  Msat fee_msat = 0;           // proportional fees along decomposed paths
  double fee_objective_sat = 0.0;  // linear fee term the solver optimizes
  double cost = 0.0;           // -log(probability) + mu * fee_objective_sat
};

// Problem builders ----------------------------------------------------------

// Excess +ceil(amount/Q) at the sender, the negative at the receiver. Arc
// capacities are floor((c_max - inflight)/Q) per belief; arcs of disabled
// nodes are dropped.
FlowProblem build_payment_problem(const ChannelGraph& graph,
                                  const BeliefStore& beliefs,
                                  const std::string& sender,
                                  const std::string& receiver, Sat amount_sat,
                                  Sat quantum, double mu,
                                  const std::vector<bool>* disabled_nodes = nullptr);

// General form: any balanced excess vector in satoshi (amounts must be
// multiples of the quantum). Supply nodes pay no fees on their own arcs.
FlowProblem build_flow_problem(const ChannelGraph& graph,
                               const BeliefStore& beliefs,
                               const std::map<std::string, Sat>& excess_sat,
                               Sat quantum, double mu,
                               const std::vector<bool>* disabled_nodes = nullptr);

// Multi-channel rebalancing for `node`: surplus channels (outbound arcs,
// keyed by channel id) are removed and their amounts become supply at the
// channel partners; each deficit channel (inbound arc) is copied to a fresh
// demand node that absorbs its amount. Solving then shifts liquidity from
// surplus partners into the deficit channels.
FlowProblem build_rebalancing_problem(const ChannelGraph& graph,
                                      const BeliefStore& beliefs,
                                      const std::string& node,
                                      const std::map<std::string, Sat>& surplus,
                                      const std::map<std::string, Sat>& deficit,
                                      Sat quantum, double mu);

// Solvers -------------------------------------------------------------------

// Exact integer min-cost flow by successive shortest augmenting paths on the
// residual network of marginal costs, one unit per augmentation, with node
// potentials keeping reduced costs nonnegative (so Dijkstra applies). When
// the remaining excess cannot reach any deficit the partial flow is returned
// with feasible = false and the saturated cut as certificate. Deterministic:
// ties break toward the smallest arc-id sequence.
Flow solve_exact(const FlowProblem& problem);

// Heuristic for large problems: solves at `coarse_quantum` (a multiple of the
// problem quantum), then refines the remainder at the fine quantum on the
// residual capacities. Feasible output, cost >= the exact optimum; falls back
// to halved coarseness (ultimately solve_exact) when coarsening kills
// feasibility.
Flow solve_scaled(const FlowProblem& problem, Sat coarse_quantum);

// Checks the optimality certificate: no residual arc of `flow` has negative
// reduced cost under its final potentials.
bool verify_optimality(const FlowProblem& problem, const Flow& flow,
                       double tolerance = 1e-7);

// Decomposes a flow into source->sink paths and cycles in time linear in
// (nodes + arcs + output). Paths come out in deterministic order. Partial
// flows (from infeasible solves) decompose with allow_partial = true.
PathDecomposition decompose(const FlowProblem& problem, const Flow& flow,
                            bool allow_partial = false);

// Probability, fee and cost of a feasible flow.
FlowMetrics flow_metrics(const FlowProblem& problem, const Flow& flow);

// Max-flow / min-cut --------------------------------------------------------

struct MaxFlowResult {
  Sat value_sat = 0;
  std::vector<ArcIndex> min_cut;    // graph arcs crossing the returned cut
  std::vector<Sat> flow_sat;        // per graph arc
};

// Max-flow on the balance graph (directional capacities = balances) from the
// source set to the sink set, with a cut whose capacity equals the value.
MaxFlowResult max_flow(const ChannelGraph& graph,
                       const BalanceAssignment& assignment,
                       const std::vector<NodeIndex>& sources,
                       const std::vector<NodeIndex>& sinks);

// Serialization -------------------------------------------------------------

std::string serialize_problem(const FlowProblem& problem);
FlowProblem parse_problem(const std::string& document);
std::string serialize_flow(const FlowProblem& problem, const Flow& flow);
Flow parse_flow(const FlowProblem& problem, const std::string& document);
std::string serialize_decomposition(const FlowProblem& problem,
                                    const PathDecomposition& decomposition);

}  // namespace pcnflow

#endif  // PCNFLOW_MCF_SOLVER_HPP_
