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

#ifndef PCNFLOW_EXPERIMENTS_HPP_
#define PCNFLOW_EXPERIMENTS_HPP_

#include <string>
#include <vector>

#include "pcnflow/channel_graph.hpp"
#include "pcnflow/mcf_solver.hpp"
#include "pcnflow/uncertainty.hpp"

namespace pcnflow {

// How often is the deliverable amount between a random pair actually below
// what sender and receiver can bound from their local channels alone? One
// balance instantiation per study; every row carries the max-flow value and
// the local bound min(sender outbound, receiver inbound).
struct MincutStudyRow {
  int pair_index = 0;
  std::string source;
  std::string target;
  Sat max_flow_sat = 0;
  Sat local_bound_sat = 0;
  bool limited_by_network = false;  // max_flow < local bound
};

struct MincutStudyResult {
  std::vector<MincutStudyRow> rows;
  double limited_fraction = 0.0;
  std::uint64_t seed = 0;
};

MincutStudyResult run_mincut_study(const ChannelGraph& graph,
                                   std::uint64_t seed, int pair_count);

// Lagrange-multiplier sweep on a fixed payment pair: per mu, the optimal
// flow's success probability and fee. A descending mu list yields
// nondecreasing fees and nondecreasing probabilities down the table.
struct MuSweepRow {
  double mu = 0.0;
  double probability = 0.0;
  double fee_sat = 0.0;  // linear fee objective, in satoshi
  Msat fee_msat = 0;
  bool warning = false;  // solver reported numerical noise
};

std::vector<MuSweepRow> run_mu_sweep(const ChannelGraph& graph,
                                     const BeliefStore& beliefs,
                                     const std::string& sender,
                                     const std::string& receiver,
                                     Sat amount_sat,
                                     const std::vector<double>& mu_values,
                                     Sat quantum);

// One header line plus comma-separated rows; floats at 6 significant digits.
std::string mincut_study_table(const MincutStudyResult& result);
std::string mu_sweep_table(const std::vector<MuSweepRow>& rows);

}  // namespace pcnflow

#endif  // PCNFLOW_EXPERIMENTS_HPP_
