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

#include "pcnflow/experiments.hpp"

#include <sstream>

#include "pcnflow/rng.hpp"
#include "pcnflow/text.hpp"

namespace pcnflow {

MincutStudyResult run_mincut_study(const ChannelGraph& graph,
                                   std::uint64_t seed, int pair_count) {
  if (pair_count < 1) throw Error("mincut study needs pair_count >= 1");
  if (graph.node_count() < 2) throw Error("mincut study needs >= 2 nodes");
  MincutStudyResult result;
  result.seed = seed;
  BalanceAssignment assignment = instantiate_balances(graph, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);

  const int n = static_cast<int>(graph.node_count());
  int limited = 0;
  for (int pair = 0; pair < pair_count; ++pair) {
    NodeIndex src = static_cast<NodeIndex>(rng.uniform(0, n - 1));
    NodeIndex dst = static_cast<NodeIndex>(rng.uniform(0, n - 2));
    if (dst >= src) ++dst;

    Sat local_out = 0;
    for (ArcIndex a : graph.out_arcs(src)) local_out += assignment.balance(a);
    Sat remote_in = 0;
    for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
      if (graph.arc(a).target == dst) remote_in += assignment.balance(a);
    }

    MincutStudyRow row;
    row.pair_index = pair;
    row.source = graph.node_name(src);
    row.target = graph.node_name(dst);
    row.max_flow_sat = max_flow(graph, assignment, {src}, {dst}).value_sat;
    row.local_bound_sat = std::min(local_out, remote_in);
    row.limited_by_network = row.max_flow_sat < row.local_bound_sat;
    if (row.limited_by_network) ++limited;
    result.rows.push_back(std::move(row));
  }
  result.limited_fraction =
      static_cast<double>(limited) / static_cast<double>(pair_count);
  return result;
}

std::vector<MuSweepRow> run_mu_sweep(const ChannelGraph& graph,
                                     const BeliefStore& beliefs,
                                     const std::string& sender,
                                     const std::string& receiver,
                                     Sat amount_sat,
                                     const std::vector<double>& mu_values,
                                     Sat quantum) {
  if (mu_values.empty()) throw Error("mu sweep needs at least one mu value");
  for (std::size_t i = 0; i < mu_values.size(); ++i) {
    if (mu_values[i] < 0) throw Error("mu values must be nonnegative");
    if (i > 0 && mu_values[i] > mu_values[i - 1]) {
      throw Error("mu values must be sorted descending");
    }
  }
  std::vector<MuSweepRow> rows;
  for (double mu : mu_values) {
    FlowProblem problem = build_payment_problem(graph, beliefs, sender,
                                                receiver, amount_sat, quantum,
                                                mu);
    Flow flow = solve_exact(problem);
    if (!flow.feasible) {
      throw SolverError("mu sweep: the payment is infeasible at mu=" +
                        format_g6(mu));
    }
    FlowMetrics metrics = flow_metrics(problem, flow);
    MuSweepRow row;
    row.mu = mu;
    row.probability = metrics.probability.value();
    row.fee_sat = metrics.fee_objective_sat;
    row.fee_msat = metrics.fee_msat;
    row.warning = flow.numerical_warning;
    rows.push_back(row);
  }
  return rows;
}

std::string mincut_study_table(const MincutStudyResult& result) {
  std::ostringstream out;
  out << "pair,source,target,max_flow_sat,local_bound_sat,limited_by_network\n";
  for (const MincutStudyRow& row : result.rows) {
    out << row.pair_index << ',' << row.source << ',' << row.target << ','
        << row.max_flow_sat << ',' << row.local_bound_sat << ','
        << (row.limited_by_network ? 1 : 0) << "\n";
  }
  out << "# limited_fraction=" << format_g6(result.limited_fraction)
      << " pairs=" << result.rows.size() << " seed=" << result.seed << "\n";
  return out.str();
}

std::string mu_sweep_table(const std::vector<MuSweepRow>& rows) {
  std::ostringstream out;
  out << "mu,probability,fee_sat,fee_msat,warning\n";
  for (const MuSweepRow& row : rows) {
    out << format_g6(row.mu) << ',' << format_g6(row.probability) << ','
        << format_g6(row.fee_sat) << ',' << row.fee_msat << ','
        << (row.warning ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace pcnflow
