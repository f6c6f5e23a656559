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

#include "pcnflow/channel_graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pcnflow/text.hpp"

namespace pcnflow {

NodeIndex ChannelGraph::node_index(const std::string& name) const {
  auto it = node_index_.find(name);
  return it == node_index_.end() ? kNoNode : it->second;
}

ArcIndex ChannelGraph::find_arc(const std::string& channel_id,
                                const std::string& source,
                                const std::string& target) const {
  NodeIndex s = node_index(source);
  if (s == kNoNode) return kNoArc;
  for (ArcIndex a : out_arcs_[s]) {
    const Channel& ch = arcs_[a];
    if (ch.id == channel_id && nodes_[ch.target] == target) return a;
  }
  return kNoArc;
}

bool ChannelGraph::is_channel_symmetric() const {
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(arcs_.size()); ++a) {
    ArcIndex r = reverse_[a];
    if (r == kNoArc || arcs_[r].capacity_sat != arcs_[a].capacity_sat) {
      return false;
    }
  }
  return true;
}

// Node indices follow sorted node names and arcs sort by (id, direction), so
// equal networks compare equal regardless of record order.
void ChannelGraph::intern_nodes(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  nodes_ = std::move(names);
  node_index_.clear();
  for (NodeIndex n = 0; n < static_cast<NodeIndex>(nodes_.size()); ++n) {
    node_index_.emplace(nodes_[n], n);
  }
}

void ChannelGraph::finalize() {
  std::sort(arcs_.begin(), arcs_.end(), [](const Channel& a, const Channel& b) {
    return std::tie(a.id, a.direction) < std::tie(b.id, b.direction);
  });
  out_arcs_.assign(nodes_.size(), {});
  reverse_.assign(arcs_.size(), kNoArc);
  std::map<std::pair<std::string, int>, ArcIndex> by_id_dir;
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(arcs_.size()); ++a) {
    out_arcs_[arcs_[a].source].push_back(a);
    by_id_dir[{arcs_[a].id, arcs_[a].direction}] = a;
  }
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(arcs_.size()); ++a) {
    auto it = by_id_dir.find({arcs_[a].id, 1 - arcs_[a].direction});
    if (it != by_id_dir.end()) reverse_[a] = it->second;
  }
}

namespace {

void validate_record(const std::string& id, Sat capacity,
                     std::int64_t fee_rate, Msat base_fee,
                     const std::string& context) {
  if (id.empty()) throw ParseError(context + ": empty channel id");
  if (capacity < 0) {
    throw ParseError(context + ": negative capacity " +
                     std::to_string(capacity) + " in channel '" + id + "'");
  }
  if (fee_rate < 0 || base_fee < 0) {
    throw ParseError(context + ": negative fee in channel '" + id + "'");
  }
}

}  // namespace

ChannelGraph ChannelGraph::from_channels(
    const std::vector<ChannelRecord>& records) {
  ChannelGraph g;
  std::vector<std::string> names;
  for (const ChannelRecord& r : records) {
    names.push_back(r.node_a);
    names.push_back(r.node_b);
  }
  g.intern_nodes(std::move(names));
  std::unordered_map<std::string, std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ChannelRecord& r = records[i];
    const std::string context = "channel record " + std::to_string(i + 1);
    validate_record(r.id, r.capacity_sat, r.fee_rate_ppm_a_to_b,
                    r.base_fee_msat_a_to_b, context);
    validate_record(r.id, r.capacity_sat, r.fee_rate_ppm_b_to_a,
                    r.base_fee_msat_b_to_a, context);
    if (r.node_a == r.node_b) {
      throw ParseError(context + ": channel '" + r.id + "' is a self-loop");
    }
    auto [it, inserted] = seen.emplace(r.id, std::pair{r.node_a, r.node_b});
    if (!inserted) {
      throw ParseError(context + ": duplicate channel id '" + r.id + "'");
    }
    NodeIndex a = g.node_index(r.node_a);
    NodeIndex b = g.node_index(r.node_b);
    g.arcs_.push_back(Channel{r.id, 0, a, b, r.capacity_sat,
                              r.fee_rate_ppm_a_to_b, r.base_fee_msat_a_to_b});
    g.arcs_.push_back(Channel{r.id, 1, b, a, r.capacity_sat,
                              r.fee_rate_ppm_b_to_a, r.base_fee_msat_b_to_a});
  }
  g.finalize();
  return g;
}

ChannelGraph ChannelGraph::from_arcs(const std::vector<ArcRecord>& records) {
  ChannelGraph g;
  std::vector<std::string> names;
  for (const ArcRecord& r : records) {
    names.push_back(r.source);
    names.push_back(r.target);
  }
  g.intern_nodes(std::move(names));
  // First record of a channel id fixes direction 0; a second record must be
  // the exact opposite direction.
  std::unordered_map<std::string, std::pair<std::string, std::string>> first;
  std::unordered_map<std::string, int> count;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ArcRecord& r = records[i];
    const std::string context = "arc record " + std::to_string(i + 1);
    validate_record(r.id, r.capacity_sat, r.fee_rate_ppm, r.base_fee_msat,
                    context);
    if (r.source == r.target) {
      throw ParseError(context + ": channel '" + r.id + "' is a self-loop");
    }
    int direction = 0;
    auto it = first.find(r.id);
    if (it == first.end()) {
      first.emplace(r.id, std::pair{r.source, r.target});
    } else if (it->second.first == r.target && it->second.second == r.source &&
               count[r.id] == 1) {
      direction = 1;
    } else {
      throw ParseError(context + ": duplicate channel id '" + r.id +
                       "' with conflicting endpoints");
    }
    ++count[r.id];
    g.arcs_.push_back(Channel{r.id, direction, g.node_index(r.source),
                              g.node_index(r.target), r.capacity_sat,
                              r.fee_rate_ppm, r.base_fee_msat});
  }
  g.finalize();
  return g;
}

namespace {

const char kChannelHeader[] =
    "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
    "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a";
const char kArcHeader[] =
    "channel_id,source,target,capacity_sat,fee_rate_ppm,base_fee_msat";

std::vector<std::pair<int, std::string>> data_lines(
    const std::string& document) {
  std::vector<std::pair<int, std::string>> out;
  std::istringstream in(document);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.emplace_back(lineno, t);
  }
  return out;
}

}  // namespace

ChannelGraph parse_snapshot(const std::string& document) {
  auto lines = data_lines(document);
  if (lines.empty()) throw ParseError("snapshot: empty document");
  const std::string header = lines.front().second;
  lines.erase(lines.begin());

  auto context = [](int lineno) { return "line " + std::to_string(lineno); };

  if (header == kChannelHeader) {
    std::vector<ChannelGraph::ChannelRecord> records;
    for (const auto& [lineno, line] : lines) {
      auto f = split_csv(line);
      if (f.size() != 8) {
        throw ParseError(context(lineno) + ": expected 8 fields, got " +
                         std::to_string(f.size()));
      }
      ChannelGraph::ChannelRecord r;
      r.id = f[0];
      r.node_a = f[1];
      r.node_b = f[2];
      r.capacity_sat = parse_int(f[3], context(lineno));
      r.fee_rate_ppm_a_to_b = parse_int(f[4], context(lineno));
      r.fee_rate_ppm_b_to_a = parse_int(f[5], context(lineno));
      r.base_fee_msat_a_to_b = parse_int(f[6], context(lineno));
      r.base_fee_msat_b_to_a = parse_int(f[7], context(lineno));
      if (r.capacity_sat < 0) {
        throw ParseError(context(lineno) + ": negative capacity " +
                         std::to_string(r.capacity_sat) + " in channel '" +
                         r.id + "'");
      }
      records.push_back(std::move(r));
    }
    try {
      return ChannelGraph::from_channels(records);
    } catch (const ParseError& e) {
      throw ParseError(std::string("snapshot: ") + e.what());
    }
  }
  if (header == kArcHeader) {
    std::vector<ChannelGraph::ArcRecord> records;
    for (const auto& [lineno, line] : lines) {
      auto f = split_csv(line);
      if (f.size() != 6) {
        throw ParseError(context(lineno) + ": expected 6 fields, got " +
                         std::to_string(f.size()));
      }
      ChannelGraph::ArcRecord r;
      r.id = f[0];
      r.source = f[1];
      r.target = f[2];
      r.capacity_sat = parse_int(f[3], context(lineno));
      r.fee_rate_ppm = parse_int(f[4], context(lineno));
      r.base_fee_msat = parse_int(f[5], context(lineno));
      if (r.capacity_sat < 0) {
        throw ParseError(context(lineno) + ": negative capacity " +
                         std::to_string(r.capacity_sat) + " in channel '" +
                         r.id + "'");
      }
      records.push_back(std::move(r));
    }
    try {
      return ChannelGraph::from_arcs(records);
    } catch (const ParseError& e) {
      throw ParseError(std::string("snapshot: ") + e.what());
    }
  }
  throw ParseError("snapshot: unrecognized header '" + header + "'");
}

ChannelGraph load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open snapshot file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

std::string serialize_graph(const ChannelGraph& graph) {
  std::ostringstream out;
  if (graph.is_channel_symmetric()) {
    out << kChannelHeader << "\n";
    for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
      const Channel& ch = graph.arc(a);
      if (ch.direction != 0) continue;
      const Channel& rev = graph.arc(graph.reverse_arc(a));
      out << ch.id << ',' << graph.node_name(ch.source) << ','
          << graph.node_name(ch.target) << ',' << ch.capacity_sat << ','
          << ch.fee_rate_ppm << ',' << rev.fee_rate_ppm << ','
          << ch.base_fee_msat << ',' << rev.base_fee_msat << "\n";
    }
  } else {
    out << kArcHeader << "\n";
    for (const Channel& ch : graph.arcs()) {
      out << ch.id << ',' << graph.node_name(ch.source) << ','
          << graph.node_name(ch.target) << ',' << ch.capacity_sat << ','
          << ch.fee_rate_ppm << ',' << ch.base_fee_msat << "\n";
    }
  }
  return out.str();
}

BalanceAssignment::BalanceAssignment(const ChannelGraph& graph,
                                     std::vector<Sat> balances)
    : balances_(std::move(balances)) {
  if (balances_.size() != graph.arc_count()) {
    throw Error("balance vector size mismatch");
  }
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    const Channel& ch = graph.arc(a);
    if (balances_[a] < 0 || balances_[a] > ch.capacity_sat) {
      throw Error("balance out of range for channel '" + ch.id + "'");
    }
    ArcIndex r = graph.reverse_arc(a);
    if (r != kNoArc && balances_[a] + balances_[r] != ch.capacity_sat) {
      throw Error("directional balances of channel '" + ch.id +
                  "' do not sum to its capacity");
    }
  }
}

BalanceAssignment instantiate_balances(const ChannelGraph& graph,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sat> balances(graph.arc_count(), 0);
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    const Channel& ch = graph.arc(a);
    ArcIndex r = graph.reverse_arc(a);
    if (r == kNoArc) {
      balances[a] = rng.uniform(0, ch.capacity_sat);
    } else if (a < r) {
      Sat b = rng.uniform(0, ch.capacity_sat);
      balances[a] = b;
      balances[r] = ch.capacity_sat - b;
    }
  }
  return BalanceAssignment(graph, std::move(balances));
}

std::string serialize_balances(const ChannelGraph& graph,
                               const BalanceAssignment& assignment) {
  std::ostringstream out;
  out << "channel_id,source,target,balance_sat\n";
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    const Channel& ch = graph.arc(a);
    out << ch.id << ',' << graph.node_name(ch.source) << ','
        << graph.node_name(ch.target) << ',' << assignment.balance(a) << "\n";
  }
  return out.str();
}

BalanceAssignment parse_balances(const ChannelGraph& graph,
                                 const std::string& document) {
  auto lines = data_lines(document);
  if (lines.empty() || lines.front().second != "channel_id,source,target,balance_sat") {
    throw ParseError("balances: missing header");
  }
  lines.erase(lines.begin());
  std::vector<Sat> balances(graph.arc_count(), -1);
  for (const auto& [lineno, line] : lines) {
    const std::string context = "line " + std::to_string(lineno);
    auto f = split_csv(line);
    if (f.size() != 4) {
      throw ParseError(context + ": expected 4 fields");
    }
    ArcIndex a = graph.find_arc(f[0], f[1], f[2]);
    if (a == kNoArc) {
      throw ParseError(context + ": unknown arc '" + f[0] + "' " + f[1] +
                       "->" + f[2]);
    }
    balances[a] = parse_int(f[3], context);
  }
  for (ArcIndex a = 0; a < static_cast<ArcIndex>(graph.arc_count()); ++a) {
    if (balances[a] < 0) {
      throw ParseError("balances: missing arc '" + graph.arc(a).id + "' " +
                       graph.node_name(graph.arc(a).source) + "->" +
                       graph.node_name(graph.arc(a).target));
    }
  }
  return BalanceAssignment(graph, std::move(balances));
}

BalanceAssignment load_balances(const ChannelGraph& graph,
                                const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open balance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_balances(graph, buf.str());
}

MilliMsat proportional_fee_millimsat(const Channel& ch, Sat amount_sat) {
  return amount_sat * ch.fee_rate_ppm;
}

Msat fee_msat(const Channel& ch, Sat amount_sat) {
  if (amount_sat == 0) return 0;
  MilliMsat prop = proportional_fee_millimsat(ch, amount_sat);
  return ch.base_fee_msat + (prop + 999) / 1000;
}

}  // namespace pcnflow
