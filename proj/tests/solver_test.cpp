#include <gtest/gtest.h>

#include "poet/error.hpp"
#include "poet/milp.hpp"
#include "poet/oracle.hpp"
#include "poet/schedule.hpp"
#include "poet/solver.hpp"
#include "support.hpp"

namespace poet {
namespace {

TEST(Solver, FullMemoryDepthTwoIsDiagonal) {
  const TrainingGraph g = test::chain(2);
  const CostedGraph cg = attach(g, synth_profile(g, "mixed", 4), Budget{});
  const MilpInstance inst = build_milp(cg);
  const SolveResult r = solve_exact(inst, SolveLimits{});
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_EQ(r.assignment->objective, cg.energy_floor());
  EXPECT_EQ(r.gap, 0.0);
  const Schedule s = from_assignment(*r.assignment, inst);
  for (int t = 0; t < cg.size(); ++t) {
    for (int i = 0; i < cg.size(); ++i) {
      EXPECT_EQ(s.r(t, i), t == i);
      EXPECT_FALSE(s.m_in(t, i));
      EXPECT_FALSE(s.m_out(t, i));
    }
  }
}

TEST(Solver, BudgetBelowLargestTensorIsInfeasible) {
  const TrainingGraph g = test::chain(2);
  const CostProfile p = synth_profile(g, "mixed", 4);
  std::uint64_t largest = 0;
  for (const NodeCost& c : p.costs) largest = std::max(largest, c.mem_out);
  const CostedGraph cg = attach(g, p, Budget{p.mu_static + largest - 1, std::nullopt});
  EXPECT_EQ(solve_exact(build_milp(cg), SolveLimits{}).status, SolveStatus::kInfeasible);
}

TEST(Solver, MatchesOracleOnTightMixedChain) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (int pct : {100, 85, 70, 55}) {
      const CostedGraph cg = test::synth_instance(test::chain_spec(3), "mixed", seed, Rational(pct, 100));
      const OracleResult o = brute_force(cg, 100000000);
      const SolveResult r = solve_exact(build_milp(cg), SolveLimits{});
      if (!o.feasible()) {
        EXPECT_EQ(r.status, SolveStatus::kInfeasible);
        continue;
      }
      ASSERT_EQ(r.status, SolveStatus::kOptimal);
      EXPECT_EQ(r.assignment->objective, *o.optimal_energy) << "seed " << seed << " pct " << pct;
    }
  }
}

TEST(Solver, ReturnedAssignmentsSatisfyEveryRow) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CostedGraph cg = test::synth_instance(test::chain_spec(3), "conv-like", seed,
                                                Rational(50 + 5 * seed, 100), Rational(3, 2));
    const MilpInstance inst = build_milp(cg);
    const SolveResult r = solve_exact(inst, SolveLimits{});
    if (!r.assignment) continue;
    EXPECT_TRUE(violated_constraints(inst, r.assignment->values).empty());
    EXPECT_EQ(objective_value(inst, r.assignment->values), r.assignment->objective);
  }
}

TEST(Solver, Deterministic) {
  const CostedGraph cg = test::synth_instance(test::chain_spec(4), "mixed", 2, Rational(9, 10));
  const MilpInstance inst = build_milp(cg);
  const SolveResult a = solve_exact(inst, SolveLimits{});
  const SolveResult b = solve_exact(inst, SolveLimits{});
  ASSERT_EQ(a.status, b.status);
  ASSERT_TRUE(a.assignment && b.assignment);
  EXPECT_EQ(a.assignment->values, b.assignment->values);
  EXPECT_EQ(a.nodes, b.nodes);
}

TEST(Solver, NodeLimitReportsIncumbentOrTimeout) {
  const CostedGraph cg = test::tradeoff_instance(Budget{});
  const CostedGraph tight = cg.with_budget(Budget{test::ram_between(cg, Rational(4, 5)), std::nullopt});
  SolveLimits limits;
  limits.node_limit = 1;
  const SolveResult r = solve_exact(build_milp(tight), limits);
  EXPECT_TRUE(r.status == SolveStatus::kFeasible || r.status == SolveStatus::kTimedOut);
  // A diagonal warm start that breaks the budget is ignored, a feasible one
  // becomes the incumbent.
  const MilpInstance inst = build_milp(tight);
  const SolveResult w = solve_exact(inst, limits, {to_assignment(diagonal_schedule(cg), tight, inst)});
  EXPECT_NE(w.status, SolveStatus::kOptimal);
}

TEST(LpFormat, SingleEqualityInstance) {
  MilpInstance inst;
  inst.set_shape(1, 1);
  VarInfo r;
  r.kind = VarKind::kR;
  const int v = inst.add_var(r);
  inst.add_constraint(Constraint{{{v, Rational(1)}}, Sense::kEq, Rational(1), Tag::kDiag});
  inst.set_objective({{v, Rational(2)}});
  const std::string text = write_lp(inst);
  EXPECT_NE(text.find("R_1_1 = 1"), std::string::npos) << text;
  const auto bin = text.find("Binaries");
  ASSERT_NE(bin, std::string::npos);
  EXPECT_NE(text.find("R_1_1", bin), std::string::npos);
  const MilpInstance back = parse_lp(text);
  EXPECT_EQ(back.constraints().size(), 1u);
  EXPECT_EQ(solve_exact(back, SolveLimits{}).assignment->objective, 2);
}

TEST(LpFormat, RoundTripPreservesTagsAndOptimum) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const CostedGraph cg = test::synth_instance(test::chain_spec(2 + seed % 2), "mixed", seed,
                                                Rational(70, 100), Rational(2));
    const MilpInstance inst = build_milp(cg);
    const MilpInstance back = parse_lp(write_lp(inst));
    EXPECT_EQ(back.tag_counts(), inst.tag_counts());
    EXPECT_EQ(back.vars().size(), inst.vars().size());
    EXPECT_EQ(write_lp(back), write_lp(inst));
    const SolveResult a = solve_exact(inst, SolveLimits{});
    const SolveResult b = solve_exact(back, SolveLimits{});
    ASSERT_EQ(a.status, b.status);
    if (a.assignment) EXPECT_EQ(a.assignment->objective, b.assignment->objective);
  }
}

TEST(LpFormat, ParseErrors) {
  EXPECT_THROW(parse_lp("Minimize\n obj: 2 X_1\nEnd\n"), Error);
  EXPECT_THROW(parse_lp("R_1_1 = 1\n"), Error);
}

TEST(SolutionFile, DiagonalAssignmentAccepted) {
  const TrainingGraph g = test::chain(2);
  const CostedGraph cg = attach(g, test::unit_profile(g), Budget{});
  const MilpInstance inst = build_milp(cg);
  std::string text = "# diagonal\n";
  for (int v = 1; v <= cg.size(); ++v) {
    text += "R_" + std::to_string(v) + "_" + std::to_string(v) + " 1\n";
  }
  const Assignment a = parse_solution(text, inst);
  const Schedule s = from_assignment(a, inst);
  EXPECT_EQ(a.objective, 5);
  EXPECT_EQ(s.r.count(), 5u);
}

TEST(SolutionFile, NonIntegralBinaryRejected) {
  const TrainingGraph g = test::chain(1);
  const MilpInstance inst = build_milp(attach(g, test::unit_profile(g), Budget{}));
  EXPECT_THROW(parse_solution("R_1_1 0.5\n", inst), Error);
  EXPECT_THROW(parse_solution("Q_1_1 1\n", inst), Error);
  EXPECT_NO_THROW(parse_solution("R_1_1 0.9999999\n", inst));
}

TEST(SolutionFile, WriteThenParseIsIdentity) {
  const CostedGraph cg = test::synth_instance(test::chain_spec(4), "mixed", 3, Rational(9, 10));
  const MilpInstance inst = build_milp(cg);
  const SolveResult r = solve_exact(inst, SolveLimits{});
  ASSERT_TRUE(r.assignment);
  const Assignment back = parse_solution(write_solution(*r.assignment, inst), inst);
  EXPECT_EQ(back.values, r.assignment->values);
  EXPECT_TRUE(verify(from_assignment(back, inst), cg).ok);
}

}  // namespace
}  // namespace poet
