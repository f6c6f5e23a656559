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

#ifndef PCNFLOW_SYNTHETIC_HPP_
#define PCNFLOW_SYNTHETIC_HPP_

#include <cstdint>

#include "pcnflow/channel_graph.hpp"

namespace pcnflow {

// Random connected test networks: a random spanning tree plus extra channels,
// capacities log-uniform between the bounds, proportional fee rates uniform
// up to the maximum. Node names n000..; channel ids c0000...
struct SyntheticParams {
  int nodes = 200;
  int extra_channels = 300;
  Sat capacity_min = 10'000;
  Sat capacity_max = 1'000'000;
  std::int64_t fee_rate_max_ppm = 100;
  Msat base_fee_msat = 0;
};

ChannelGraph make_synthetic_graph(const SyntheticParams& params,
                                  std::uint64_t seed);

}  // namespace pcnflow

#endif  // PCNFLOW_SYNTHETIC_HPP_
