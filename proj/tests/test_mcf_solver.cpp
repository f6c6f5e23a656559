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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "brute_force.hpp"
#include "fixtures.hpp"
#include "pcnflow/mcf_solver.hpp"

using namespace pcnflow;
using namespace pcnflow::testing;

namespace {

Units flow_on(const FlowProblem& problem, const Flow& flow,
              const ChannelGraph& graph, const std::string& id,
              const std::string& src, const std::string& dst) {
  int i = problem_arc(problem, graph, id, src, dst);
  return i < 0 ? 0 : flow.flow_units[i];
}

void check_conservation(const FlowProblem& problem, const Flow& flow) {
  std::vector<Units> net(problem.node_names.size(), 0);
  for (std::size_t i = 0; i < problem.arcs.size(); ++i) {
    REQUIRE(flow.flow_units[i] >= 0);
    REQUIRE(flow.flow_units[i] <= problem.arcs[i].capacity_units);
    net[problem.arcs[i].tail] += flow.flow_units[i];
    net[problem.arcs[i].head] -= flow.flow_units[i];
  }
  for (std::size_t v = 0; v < net.size(); ++v) {
    CHECK(net[v] == (flow.feasible ? problem.excess[v] : net[v]));
  }
}

}  // namespace

TEST_CASE("most probable 1-sat flow uses the cross channel") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 1, 1, 0.0);
  CHECK(p.excess[g.node_index("s")] == 1);
  CHECK(p.excess[g.node_index("d")] == -1);

  Flow f = solve_exact(p);
  REQUIRE(f.feasible);
  CHECK(flow_on(p, f, g, "csX", "s", "X") == 1);
  CHECK(flow_on(p, f, g, "cXB", "X", "B") == 1);
  CHECK(flow_on(p, f, g, "cBd", "B", "d") == 1);
  CHECK(f.total_cost == doctest::Approx(-std::log(0.36)).epsilon(1e-12));
  CHECK(flow_metrics(p, f).probability.value() == doctest::Approx(0.36));
  CHECK(verify_optimality(p, f));
}

TEST_CASE("optimal 2-sat flow is not an extension of the best 1-sat flow") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 2, 1, 0.0);
  Flow f = solve_exact(p);
  REQUIRE(f.feasible);

  CHECK(flow_on(p, f, g, "csA", "s", "A") == 1);
  CHECK(flow_on(p, f, g, "cAB", "A", "B") == 1);
  CHECK(flow_on(p, f, g, "csX", "s", "X") == 1);
  CHECK(flow_on(p, f, g, "cXY", "X", "Y") == 1);
  CHECK(flow_on(p, f, g, "cYd", "Y", "d") == 1);
  CHECK(flow_on(p, f, g, "cBd", "B", "d") == 1);

  const double best = -std::log(28.0 / 225.0);
  CHECK(std::abs(f.total_cost - best) < 1e-9);
  CHECK(flow_metrics(p, f).probability.value() ==
        doctest::Approx(28.0 / 225.0).epsilon(1e-9));

  SUBCASE("the greedy merged flow costs strictly more") {
    Flow greedy;
    greedy.flow_units.assign(p.arcs.size(), 0);
    greedy.feasible = true;
    greedy.delivered_units = 2;
    auto set = [&](const std::string& id, const std::string& a,
                   const std::string& b, Units u) {
      greedy.flow_units[problem_arc(p, g, id, a, b)] = u;
    };
    set("csX", "s", "X", 1);
    set("cXB", "X", "B", 1);
    set("csA", "s", "A", 1);
    set("cAB", "A", "B", 1);
    set("cBd", "B", "d", 2);
    FlowMetrics m = flow_metrics(p, greedy);
    CHECK(m.probability.value() == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(m.cost > f.total_cost + 1e-6);
  }
}

TEST_CASE("3-sat flow splits 2+1 over the two corridors") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 3, 1, 0.0);
  Flow f = solve_exact(p);
  REQUIRE(f.feasible);
  CHECK(flow_metrics(p, f).probability.value() ==
        doctest::Approx(7.0 / 300.0).epsilon(1e-9));

  PathDecomposition d = decompose(p, f);
  REQUIRE(d.paths.size() == 2);
  CHECK(d.cycles.empty());
  // Deterministic order: the s,A,B,d corridor walks first.
  CHECK(d.paths[0].amount_sat == 2);
  CHECK(p.node_names[d.paths[0].nodes[1]] == "A");
  CHECK(d.paths[1].amount_sat == 1);
  CHECK(p.node_names[d.paths[1].nodes[1]] == "X");

  auto oracle = brute_force_min_cost(p);
  REQUIRE(oracle.has_value());
  CHECK(std::abs(f.total_cost - *oracle) < 1e-9);
}

TEST_CASE("updated beliefs after a failed round prefer the 1+1 split") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  // Round 1: 1 sat locked along s,X,Y,d; a 2-sat onion along s,A,B,d failed
  // on the B,d channel.
  beliefs.observe(g.find_arc("csX", "s", "X"), Observation::htlc_locked(1));
  beliefs.observe(g.find_arc("cXY", "X", "Y"), Observation::htlc_locked(1));
  beliefs.observe(g.find_arc("cYd", "Y", "d"), Observation::htlc_locked(1));
  beliefs.observe(g.find_arc("csA", "s", "A"),
                  Observation::forwarded_then_released(2));
  beliefs.observe(g.find_arc("cAB", "A", "B"),
                  Observation::forwarded_then_released(2));
  beliefs.observe(g.find_arc("cBd", "B", "d"), Observation::failed_at(2));

  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 2, 1, 0.0);
  // The saturated s,X arc is gone entirely.
  CHECK(problem_arc(p, g, "csX", "s", "X") == -1);

  Flow f = solve_exact(p);
  REQUIRE(f.feasible);
  FlowMetrics m = flow_metrics(p, f);
  CHECK(m.probability.value() == doctest::Approx(81.0 / 280.0).epsilon(1e-9));
  CHECK(flow_on(p, f, g, "cBd", "B", "d") == 1);
  CHECK(flow_on(p, f, g, "cXB", "B", "X") == 1);

  SUBCASE("the single 2-sat path is strictly less likely") {
    Flow single;
    single.flow_units.assign(p.arcs.size(), 0);
    single.feasible = true;
    single.delivered_units = 2;
    auto set = [&](const std::string& id, const std::string& a,
                   const std::string& b, Units u) {
      single.flow_units[problem_arc(p, g, id, a, b)] = u;
    };
    set("csA", "s", "A", 2);
    set("cAB", "A", "B", 2);
    set("cXB", "B", "X", 2);
    set("cXY", "X", "Y", 2);
    set("cYd", "Y", "d", 2);
    CHECK(flow_metrics(p, single).probability.value() ==
          doctest::Approx(2.0 / 7.0).epsilon(1e-9));
    CHECK(flow_metrics(p, single).cost > f.total_cost);
  }

  SUBCASE("after the second round only the 5-hop path remains") {
    beliefs.observe(g.find_arc("cBd", "B", "d"), Observation::failed_at(1));
    beliefs.observe(g.find_arc("csA", "s", "A"), Observation::htlc_locked(1));
    beliefs.observe(g.find_arc("cAB", "A", "B"), Observation::htlc_locked(1));
    beliefs.observe(g.find_arc("cXB", "B", "X"), Observation::htlc_locked(1));
    beliefs.observe(g.find_arc("cXY", "X", "Y"), Observation::htlc_locked(1));
    beliefs.observe(g.find_arc("cYd", "Y", "d"), Observation::htlc_locked(1));

    FlowProblem p3 = build_payment_problem(g, beliefs, "s", "d", 1, 1, 0.0);
    Flow f3 = solve_exact(p3);
    REQUIRE(f3.feasible);
    CHECK(flow_metrics(p3, f3).probability.value() ==
          doctest::Approx(40.0 / 81.0).epsilon(1e-9));
    PathDecomposition d3 = decompose(p3, f3);
    REQUIRE(d3.paths.size() == 1);
    CHECK(d3.paths[0].nodes.size() == 6);
  }
}

TEST_CASE("infeasible demand returns the saturated cut") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  // Total capacity out of s is 3.
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 50, 1, 0.0);
  Flow f = solve_exact(p);
  CHECK_FALSE(f.feasible);
  CHECK(f.delivered_units == 3);
  REQUIRE_FALSE(f.cut_arcs.empty());
  for (int i : f.cut_arcs) {
    CHECK(f.flow_units[i] == p.arcs[i].capacity_units);
  }
  check_conservation(p, f);
  CHECK_THROWS_AS(decompose(p, f), SolverError);
  CHECK(decompose(p, f, true).paths.size() > 0);
}

TEST_CASE("multi-source excess vectors are accepted") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  std::map<std::string, Sat> excess{{"s", 2}, {"A", 1}, {"d", -3}};
  FlowProblem p = build_flow_problem(g, beliefs, excess, 1, 0.0);
  Flow f = solve_exact(p);
  REQUIRE(f.feasible);
  check_conservation(p, f);
  auto oracle = brute_force_min_cost(p);
  REQUIRE(oracle.has_value());
  CHECK(std::abs(f.total_cost - *oracle) < 1e-9);
}

TEST_CASE("solver input validation") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  CHECK_THROWS_AS(build_payment_problem(g, beliefs, "s", "s", 1, 1, 0.0),
                  SolverError);
  CHECK_THROWS_AS(build_payment_problem(g, beliefs, "nope", "d", 1, 1, 0.0),
                  SolverError);
  CHECK_THROWS_AS(build_payment_problem(g, beliefs, "s", "d", 0, 1, 0.0),
                  SolverError);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 1, 1, 0.0);
  p.excess[0] += 1;  // break the zero-sum invariant
  CHECK_THROWS_AS(solve_exact(p), SolverError);
}

TEST_CASE("deterministic tie-breaking across identical routes") {
  ChannelGraph g = parse_snapshot(
      "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
      "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a\n"
      "m1a,s,p,10,0,0,0,0\n"
      "m1b,p,d,10,0,0,0,0\n"
      "m2a,s,q,10,0,0,0,0\n"
      "m2b,q,d,10,0,0,0,0\n");
  BeliefStore beliefs(g);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 1, 1, 0.0);
  Flow f1 = solve_exact(p);
  Flow f2 = solve_exact(p);
  CHECK(f1.flow_units == f2.flow_units);
  // Lexicographically smaller arc ids win the tie: route via m1a/m1b.
  CHECK(flow_on(p, f1, g, "m1a", "s", "p") == 1);
  CHECK(flow_on(p, f1, g, "m2a", "s", "q") == 0);
}

TEST_CASE("solver matches brute force on random small instances") {
  Rng rng(2024);
  int feasible_count = 0;
  for (int trial = 0; trial < 80; ++trial) {
    ChannelGraph g = random_small_graph(rng, 6, 8, 1000);
    BeliefStore beliefs(g);
    if (trial % 2 == 0) {
      for (ArcIndex a = 0; a < static_cast<ArcIndex>(g.arc_count()); ++a) {
        beliefs.set_belief(a, random_belief(rng, g.arc(a).capacity_sat));
      }
    }
    const int n = static_cast<int>(g.node_count());
    NodeIndex s = static_cast<NodeIndex>(rng.uniform(0, n - 1));
    NodeIndex r = static_cast<NodeIndex>(rng.uniform(0, n - 2));
    if (r >= s) ++r;
    const Sat amount = rng.uniform(1, 6);
    const double mu = (trial % 3 == 0) ? 0.1 : 0.0;

    FlowProblem p = build_payment_problem(g, beliefs, g.node_name(s),
                                          g.node_name(r), amount, 1, mu);
    Flow f = solve_exact(p);
    auto oracle = brute_force_min_cost(p);
    REQUIRE(f.feasible == oracle.has_value());
    if (f.feasible) {
      ++feasible_count;
      CHECK(std::abs(f.total_cost - *oracle) < 1e-9);
      CHECK(verify_optimality(p, f));
      check_conservation(p, f);

      // Decomposition reconstructs the flow arc-exactly.
      PathDecomposition d = decompose(p, f);
      std::vector<Units> rebuilt(p.arcs.size(), 0);
      for (const PathEntry& path : d.paths) {
        for (int i : path.arcs) rebuilt[i] += path.amount_units;
      }
      for (const CycleEntry& cycle : d.cycles) {
        for (int i : cycle.arcs) rebuilt[i] += cycle.amount_units;
      }
      CHECK(rebuilt == f.flow_units);
    }
  }
  CHECK(feasible_count > 10);  // the generator must exercise both outcomes
}

TEST_CASE("zero flow decomposes to nothing") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 1, 1, 0.0);
  Flow zero;
  zero.flow_units.assign(p.arcs.size(), 0);
  zero.feasible = true;
  PathDecomposition d = decompose(p, zero, true);
  CHECK(d.paths.empty());
  CHECK(d.cycles.empty());
  FlowMetrics m = flow_metrics(p, zero);
  CHECK(m.probability.value() == 1.0);
  CHECK(m.fee_msat == 0);
}

TEST_CASE("a circulation on top of a path is reported as a cycle") {
  ChannelGraph g = parse_snapshot(
      "channel_id,source,target,capacity_sat,fee_rate_ppm,base_fee_msat\n"
      "e1,s,a,5,0,0\n"
      "e2,a,d,5,0,0\n"
      "e3,a,b,5,0,0\n"
      "e4,b,c,5,0,0\n"
      "e5,c,a,5,0,0\n");
  BeliefStore beliefs(g);
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 1, 1, 0.0);
  Flow f;
  f.flow_units.assign(p.arcs.size(), 0);
  f.feasible = true;
  f.flow_units[problem_arc(p, g, "e1", "s", "a")] = 1;
  f.flow_units[problem_arc(p, g, "e2", "a", "d")] = 1;
  f.flow_units[problem_arc(p, g, "e3", "a", "b")] = 1;
  f.flow_units[problem_arc(p, g, "e4", "b", "c")] = 1;
  f.flow_units[problem_arc(p, g, "e5", "c", "a")] = 1;

  PathDecomposition d = decompose(p, f);
  REQUIRE(d.paths.size() == 1);
  CHECK(d.paths[0].amount_sat == 1);
  CHECK(d.paths[0].nodes.size() == 3);
  REQUIRE(d.cycles.size() == 1);
  CHECK(d.cycles[0].amount_units == 1);
  CHECK(d.cycles[0].arcs.size() == 3);
}

TEST_CASE("max-flow basics") {
  SUBCASE("single channel carries its balance") {
    ChannelGraph g = parse_snapshot(
        "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
        "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a\n"
        "c1,s,d,10,0,0,0,0\n");
    std::vector<Sat> balances{7, 3};
    BalanceAssignment assignment(g, balances);
    MaxFlowResult r = max_flow(g, assignment, {g.node_index("s")},
                               {g.node_index("d")});
    CHECK(r.value_sat == 7);
    REQUIRE(r.min_cut.size() == 1);
    CHECK(g.arc(r.min_cut[0]).id == "c1");
  }
  SUBCASE("diamond") {
    ChannelGraph g = parse_snapshot(
        "channel_id,source,target,capacity_sat,fee_rate_ppm,base_fee_msat\n"
        "sa,s,a,3,0,0\n"
        "sb,s,b,2,0,0\n"
        "ad,a,d,2,0,0\n"
        "bd,b,d,2,0,0\n");
    std::vector<Sat> balances;
    for (const Channel& ch : g.arcs()) balances.push_back(ch.capacity_sat);
    BalanceAssignment assignment(g, balances);
    MaxFlowResult r = max_flow(g, assignment, {g.node_index("s")},
                               {g.node_index("d")});
    CHECK(r.value_sat == 4);
    Sat cut_total = 0;
    for (ArcIndex a : r.min_cut) cut_total += assignment.balance(a);
    CHECK(cut_total == 4);
  }
  SUBCASE("disconnected pair") {
    ChannelGraph g = parse_snapshot(
        "channel_id,source,target,capacity_sat,fee_rate_ppm,base_fee_msat\n"
        "c1,s,a,5,0,0\n"
        "c2,b,d,5,0,0\n");
    std::vector<Sat> balances{5, 5};
    BalanceAssignment assignment(g, balances);
    MaxFlowResult r = max_flow(g, assignment, {g.node_index("s")},
                               {g.node_index("d")});
    CHECK(r.value_sat == 0);
  }
}

TEST_CASE("max-flow equals exhaustive min-cut on random balance graphs") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    ChannelGraph g = random_small_graph(rng, 7, 9, 0);
    BalanceAssignment assignment = instantiate_balances(g, rng.next_u64());
    const int n = static_cast<int>(g.node_count());
    NodeIndex s = static_cast<NodeIndex>(rng.uniform(0, n - 1));
    NodeIndex t = static_cast<NodeIndex>(rng.uniform(0, n - 2));
    if (t >= s) ++t;
    MaxFlowResult r = max_flow(g, assignment, {s}, {t});
    CHECK(r.value_sat == brute_force_min_cut(g, assignment, {s}, {t}));
    Sat cut_total = 0;
    for (ArcIndex a : r.min_cut) cut_total += assignment.balance(a);
    CHECK(cut_total == r.value_sat);
  }
}

TEST_CASE("Lagrange multiplier trades probability against fees") {
  ChannelGraph g = parse_snapshot(
      "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
      "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a\n"
      "cheap1,s,a,6,900,900,0,0\n"
      "cheap2,a,d,6,900,900,0,0\n"
      "rich1,s,b,60,4000,4000,0,0\n"
      "rich2,b,d,60,4000,4000,0,0\n");
  BeliefStore beliefs(g);
  // Walking mu downward may only raise the success probability and may only
  // raise the fee (the Lagrangian bounding principle, pairwise).
  double prev_prob = -1.0, prev_fee = -1.0;
  for (double mu : {400.0, 40.0, 4.0, 0.0}) {
    FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 5, 1, mu);
    Flow f = solve_exact(p);
    REQUIRE(f.feasible);
    FlowMetrics m = flow_metrics(p, f);
    CHECK(m.probability.value() >= prev_prob - 1e-12);
    CHECK(m.fee_objective_sat >= prev_fee - 1e-12);
    prev_prob = m.probability.value();
    prev_fee = m.fee_objective_sat;
  }
  CHECK(prev_prob > 0.0);
  CHECK(prev_fee > 0.0);
}

TEST_CASE("scaled solve") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  SUBCASE("degenerate coarsening equals exact") {
    FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 2, 1, 0.0);
    Flow exact = solve_exact(p);
    Flow scaled = solve_scaled(p, 1);
    CHECK(scaled.flow_units == exact.flow_units);
    CHECK(scaled.total_cost == doctest::Approx(exact.total_cost));
  }
  SUBCASE("small instance stays exact through fallback") {
    FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 2, 1, 0.0);
    Flow exact = solve_exact(p);
    Flow scaled = solve_scaled(p, 4);
    REQUIRE(scaled.feasible);
    CHECK(scaled.total_cost <= exact.total_cost * 1.01 + 1e-9);
    check_conservation(p, scaled);
  }
  SUBCASE("coarse plus refinement stays close to exact on a larger net") {
    ChannelGraph net = parse_snapshot(
        "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
        "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a\n"
        "h1,s,a,100000,0,0,0,0\n"
        "h2,a,d,120000,0,0,0,0\n"
        "h3,s,b,90000,0,0,0,0\n"
        "h4,b,d,80000,0,0,0,0\n"
        "h5,a,b,50000,0,0,0,0\n");
    BeliefStore nb(net);
    FlowProblem p = build_payment_problem(net, nb, "s", "d", 60000, 1, 0.0);
    Flow exact = solve_exact(p);
    Flow scaled = solve_scaled(p, 1000);
    REQUIRE(scaled.feasible);
    check_conservation(p, scaled);
    CHECK(scaled.total_cost >= exact.total_cost - 1e-9);
    CHECK(scaled.total_cost <= exact.total_cost * 1.01);
  }
}

TEST_CASE("rebalancing construction") {
  // Star around node i with partners a, b, c, d2 plus outer connections.
  ChannelGraph g = parse_snapshot(
      "channel_id,node_a,node_b,capacity_sat,fee_rate_ppm_a_to_b,"
      "fee_rate_ppm_b_to_a,base_fee_msat_a_to_b,base_fee_msat_b_to_a\n"
      "ia,i,a,10,100,100,0,0\n"
      "ib,i,b,10,100,100,0,0\n"
      "ci,c,i,10,100,100,0,0\n"
      "di,d2,i,10,100,100,0,0\n"
      "ac,a,c,20,100,100,0,0\n"
      "bd,b,d2,20,100,100,0,0\n"
      "ab,a,b,20,100,100,0,0\n");
  BeliefStore beliefs(g);

  SUBCASE("single surplus and deficit") {
    FlowProblem p = build_rebalancing_problem(g, beliefs, "i", {{"ia", 5}},
                                              {{"ci", 5}}, 1, 0.0);
    // Surplus arc i->a removed, supply sits at a.
    CHECK(problem_arc(p, g, "ia", "i", "a") == -1);
    CHECK(problem_arc(p, g, "ia", "a", "i") != -1);
    CHECK(p.excess[g.node_index("a")] == 5);
    // Fresh demand node absorbs the deficit through a copy of c->i.
    NodeIndex demand = kNoNode;
    for (std::size_t v = g.node_count(); v < p.node_names.size(); ++v) {
      if (p.node_names[v] == "demand:ci") demand = static_cast<NodeIndex>(v);
    }
    REQUIRE(demand != kNoNode);
    CHECK(p.excess[demand] == -5);
    int copies = 0;
    for (const ProblemArc& a : p.arcs) {
      if (a.head == demand) {
        ++copies;
        CHECK(p.node_names[a.tail] == "c");
        CHECK(a.belief.capacity == 10);
      }
    }
    CHECK(copies == 1);
  }

  SUBCASE("empty rebalancing is trivially feasible") {
    FlowProblem p = build_rebalancing_problem(g, beliefs, "i", {}, {}, 1, 0.0);
    Flow f = solve_exact(p);
    CHECK(f.feasible);
    CHECK(f.delivered_units == 0);
  }

  SUBCASE("unbalanced totals and foreign channels are rejected") {
    CHECK_THROWS_AS(build_rebalancing_problem(g, beliefs, "i", {{"ia", 5}},
                                              {{"ci", 4}}, 1, 0.0),
                    SolverError);
    CHECK_THROWS_AS(build_rebalancing_problem(g, beliefs, "i", {{"ac", 5}},
                                              {{"ci", 5}}, 1, 0.0),
                    SolverError);
    CHECK_THROWS_AS(build_rebalancing_problem(g, beliefs, "i", {{"ia", 5}},
                                              {{"ab", 5}}, 1, 0.0),
                    SolverError);
  }

  SUBCASE("solved paths run from surplus partners to demand copies") {
    FlowProblem p = build_rebalancing_problem(
        g, beliefs, "i", {{"ia", 3}, {"ib", 2}}, {{"ci", 3}, {"di", 2}}, 1,
        0.0);
    Flow f = solve_exact(p);
    REQUIRE(f.feasible);
    PathDecomposition d = decompose(p, f);
    REQUIRE_FALSE(d.paths.empty());
    for (const PathEntry& path : d.paths) {
      std::string first = p.node_names[path.nodes.front()];
      CHECK((first == "a" || first == "b"));
      CHECK(p.node_names[path.nodes.back()].substr(0, 7) == "demand:");
    }
  }
}

TEST_CASE("problem and flow serialization round-trips") {
  ChannelGraph g = example_graph();
  BeliefStore beliefs(g);
  beliefs.observe(g.find_arc("cBd", "B", "d"), Observation::failed_at(2));
  FlowProblem p = build_payment_problem(g, beliefs, "s", "d", 2, 1, 0.25);
  FlowProblem q = parse_problem(serialize_problem(p));
  REQUIRE(q.arcs.size() == p.arcs.size());
  CHECK(q.quantum == p.quantum);
  CHECK(q.mu == p.mu);
  CHECK(q.excess == p.excess);
  for (std::size_t i = 0; i < p.arcs.size(); ++i) {
    CHECK(q.arcs[i].belief == p.arcs[i].belief);
    CHECK(q.arcs[i].capacity_units == p.arcs[i].capacity_units);
    CHECK(q.arcs[i].fee_rate_ppm == p.arcs[i].fee_rate_ppm);
  }
  Flow f = solve_exact(p);
  Flow f2 = solve_exact(q);
  CHECK(f.flow_units == f2.flow_units);
  Flow parsed = parse_flow(p, serialize_flow(p, f));
  CHECK(parsed.flow_units == f.flow_units);
  CHECK(parsed.feasible == f.feasible);
}
