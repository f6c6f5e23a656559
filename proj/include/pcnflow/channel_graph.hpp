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

#ifndef PCNFLOW_CHANNEL_GRAPH_HPP_
#define PCNFLOW_CHANNEL_GRAPH_HPP_

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcnflow/rng.hpp"
#include "pcnflow/types.hpp"

namespace pcnflow {

// One directed arc of a payment channel. An undirected channel between nodes
// a and b appears as two arcs sharing the same channel id: direction 0 is
// a->b as listed in the snapshot, direction 1 is b->a. Fixture graphs loaded
// from per-arc records may carry one direction only.
struct Channel {
  std::string id;
  int direction = 0;
  NodeIndex source = kNoNode;
  NodeIndex target = kNoNode;
  Sat capacity_sat = 0;
  std::int64_t fee_rate_ppm = 0;
  Msat base_fee_msat = 0;

  bool operator==(const Channel&) const = default;
};

// Immutable directed multigraph of payment channels. Arcs are sorted by
// (channel id, direction), which fixes ArcIndex values and makes every
// downstream computation deterministic. Parallel channels between the same
// node pair are allowed as long as their ids differ.
class ChannelGraph {
 public:
  ChannelGraph() = default;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t arc_count() const { return arcs_.size(); }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Channel>& arcs() const { return arcs_; }
  const Channel& arc(ArcIndex a) const { return arcs_[a]; }

  const std::string& node_name(NodeIndex n) const { return nodes_[n]; }
  NodeIndex node_index(const std::string& name) const;  // kNoNode if absent
  bool has_node(const std::string& name) const {
    return node_index(name) != kNoNode;
  }

  // Arc indices leaving `n`, ascending.
  const std::vector<ArcIndex>& out_arcs(NodeIndex n) const {
    return out_arcs_[n];
  }

  // The opposite direction of the same channel, or kNoArc for one-directional
  // fixture arcs.
  ArcIndex reverse_arc(ArcIndex a) const { return reverse_[a]; }

  // Finds the arc source->target with the given channel id (kNoArc if absent).
  ArcIndex find_arc(const std::string& channel_id, const std::string& source,
                    const std::string& target) const;

  // True when every arc has a reverse with equal capacity, i.e. the graph was
  // (or could have been) built from whole-channel records.
  bool is_channel_symmetric() const;

  // Builders. Channel records expand to both directions; arc records map
  // one-to-one. Both validate capacities, fees and id uniqueness.
  struct ChannelRecord {
    std::string id;
    std::string node_a;
    std::string node_b;
    Sat capacity_sat = 0;
    std::int64_t fee_rate_ppm_a_to_b = 0;
    std::int64_t fee_rate_ppm_b_to_a = 0;
    Msat base_fee_msat_a_to_b = 0;
    Msat base_fee_msat_b_to_a = 0;
  };
  struct ArcRecord {
    std::string id;
    std::string source;
    std::string target;
    Sat capacity_sat = 0;
    std::int64_t fee_rate_ppm = 0;
    Msat base_fee_msat = 0;
  };
  static ChannelGraph from_channels(const std::vector<ChannelRecord>& records);
  static ChannelGraph from_arcs(const std::vector<ArcRecord>& records);

  bool operator==(const ChannelGraph& other) const {
    return nodes_ == other.nodes_ && arcs_ == other.arcs_;
  }

 private:
  void intern_nodes(std::vector<std::string> names);
  void finalize();

  std::vector<std::string> nodes_;
  std::vector<Channel> arcs_;
  std::vector<std::vector<ArcIndex>> out_arcs_;
  std::vector<ArcIndex> reverse_;
  std::unordered_map<std::string, NodeIndex> node_index_;
};

// Hidden ground truth for simulations: one balance per arc, with the two
// directions of a channel summing to its capacity.
class BalanceAssignment {
 public:
  BalanceAssignment() = default;
  BalanceAssignment(const ChannelGraph& graph, std::vector<Sat> balances);

  Sat balance(ArcIndex a) const { return balances_[a]; }
  const std::vector<Sat>& balances() const { return balances_; }

 private:
  std::vector<Sat> balances_;
};

// Splits every channel capacity into two directional balances uniformly at
// random. Direction 0 draws b from {0..capacity}, direction 1 gets the
// complement. One-directional arcs draw independently. Fully determined by
// the seed.
BalanceAssignment instantiate_balances(const ChannelGraph& graph,
                                       std::uint64_t seed);

// Snapshot parsing. Detects the record kind from the header line:
//   channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,
//     fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a
// or per-arc fixture records:
//   channel_id,source,target,capacity_sat,fee_rate_ppm,base_fee_msat
// '#' lines and blank lines are ignored. Errors name the offending line.
ChannelGraph parse_snapshot(const std::string& document);
ChannelGraph load_snapshot(const std::string& path);

// Canonical serialization; parse_snapshot(serialize_graph(g)) == g. Emits
// channel records when the graph is channel-symmetric, arc records otherwise.
std::string serialize_graph(const ChannelGraph& graph);

// Balance files: channel_id,source,target,balance_sat per arc.
std::string serialize_balances(const ChannelGraph& graph,
                               const BalanceAssignment& assignment);
BalanceAssignment parse_balances(const ChannelGraph& graph,
                                 const std::string& document);
BalanceAssignment load_balances(const ChannelGraph& graph,
                                const std::string& path);

// Routing fee of one arc for forwarding `amount_sat`, in exact milli-msat
// (sat * ppm). Additive and free of rounding; callers round at the display
// or forwarding boundary.
MilliMsat proportional_fee_millimsat(const Channel& ch, Sat amount_sat);

// Full fee including the base fee, rounded up to whole msat. Amount 0 is
// free.
Msat fee_msat(const Channel& ch, Sat amount_sat);

}  // namespace pcnflow

#endif  // PCNFLOW_CHANNEL_GRAPH_HPP_
