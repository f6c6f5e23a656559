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

#include "pcnflow/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "pcnflow/rng.hpp"

namespace pcnflow {

ChannelGraph make_synthetic_graph(const SyntheticParams& params,
                                  std::uint64_t seed) {
  if (params.nodes < 2) throw Error("synthetic graph needs >= 2 nodes");
  if (params.capacity_min < 1 || params.capacity_max < params.capacity_min) {
    throw Error("synthetic graph has bad capacity bounds");
  }
  Rng rng(seed);
  auto node_name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "n%03d", i);
    return std::string(buf);
  };
  auto draw_capacity = [&]() -> Sat {
    const double lo = std::log(static_cast<double>(params.capacity_min));
    const double hi = std::log(static_cast<double>(params.capacity_max));
    const double v = std::exp(lo + (hi - lo) * rng.uniform_real());
    return std::min<Sat>(params.capacity_max,
                         std::max<Sat>(params.capacity_min,
                                       static_cast<Sat>(std::llround(v))));
  };

  std::vector<ChannelGraph::ChannelRecord> records;
  int channel_no = 0;
  auto add_channel = [&](int a, int b) {
    ChannelGraph::ChannelRecord r;
    char id[16];
    std::snprintf(id, sizeof(id), "c%05d", channel_no++);
    r.id = id;
    r.node_a = node_name(a);
    r.node_b = node_name(b);
    r.capacity_sat = draw_capacity();
    r.fee_rate_ppm_a_to_b = rng.uniform(0, params.fee_rate_max_ppm);
    r.fee_rate_ppm_b_to_a = rng.uniform(0, params.fee_rate_max_ppm);
    r.base_fee_msat_a_to_b = params.base_fee_msat;
    r.base_fee_msat_b_to_a = params.base_fee_msat;
    records.push_back(std::move(r));
  };

  for (int i = 1; i < params.nodes; ++i) {
    add_channel(static_cast<int>(rng.uniform(0, i - 1)), i);
  }
  for (int e = 0; e < params.extra_channels; ++e) {
    int a = static_cast<int>(rng.uniform(0, params.nodes - 1));
    int b = static_cast<int>(rng.uniform(0, params.nodes - 2));
    if (b >= a) ++b;
    add_channel(a, b);
  }
  return ChannelGraph::from_channels(records);
}

}  // namespace pcnflow
