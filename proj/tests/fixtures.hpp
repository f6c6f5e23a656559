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

#ifndef PCNFLOW_TESTS_FIXTURES_HPP_
#define PCNFLOW_TESTS_FIXTURES_HPP_

#include <string>

#include "pcnflow/channel_graph.hpp"
#include "pcnflow/mcf_solver.hpp"

namespace pcnflow::testing {

// Six-node example network used throughout the solver and simulator tests:
// two short corridors s-A-B-d and s-X-Y-d plus the X-B cross channel. Small
// enough to verify every probability by hand.
inline const char kExampleSnapshot[] =
    "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
    "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a\n"
    "cAB,A,B,2,0,0,0,0\n"
    "cBd,B,d,4,0,0,0,0\n"
    "csA,s,A,2,0,0,0,0\n"
    "csX,s,X,1,0,0,0,0\n"
    "cXB,X,B,9,0,0,0,0\n"
    "cXY,X,Y,7,0,0,0,0\n"
    "cYd,Y,d,4,0,0,0,0\n";

inline ChannelGraph example_graph() { return parse_snapshot(kExampleSnapshot); }

// Problem arc index carrying the given graph arc, or -1.
inline int problem_arc(const FlowProblem& problem, ArcIndex graph_arc) {
  for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
    if (problem.arcs[i].graph_arc == graph_arc) return static_cast<int>(i);
  }
  return -1;
}

inline int problem_arc(const FlowProblem& problem, const ChannelGraph& graph,
                       const std::string& channel_id, const std::string& source,
                       const std::string& target) {
  return problem_arc(problem, graph.find_arc(channel_id, source, target));
}

}  // namespace pcnflow::testing

#endif  // PCNFLOW_TESTS_FIXTURES_HPP_
