#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "poet/baselines.hpp"
#include "poet/error.hpp"
#include "poet/milp.hpp"
#include "poet/schedule.hpp"
#include "poet/solver.hpp"
#include "support.hpp"

namespace poet {
namespace {

TEST(Schedule, DiagonalAtFullMemoryVerifies) {
  const TrainingGraph g = test::chain(4);
  const CostedGraph open = attach(g, synth_profile(g, "mixed", 1), Budget{});
  const CostedGraph cg = open.with_budget(Budget{open.full_memory(), open.compute_time_floor()});
  const VerifyReport rep = verify(diagonal_schedule(cg), cg);
  EXPECT_TRUE(rep.ok) << rep.summary();
}

TEST(Schedule, PageInWithoutFlashCopyFlagged) {
  const TrainingGraph g = test::chain(2);
  const CostedGraph cg = attach(g, test::unit_profile(g), Budget{});
  Schedule s = diagonal_schedule(cg);
  s.m_in.set(3, 0);
  const VerifyReport rep = verify(s, cg);
  ASSERT_FALSE(rep.ok);
  const auto it = std::find_if(rep.violations.begin(), rep.violations.end(),
                               [](const Violation& v) { return v.family == "c1e"; });
  ASSERT_NE(it, rep.violations.end());
  EXPECT_EQ(it->t, 3);
  EXPECT_EQ(it->i, 0);
}

TEST(Schedule, ExtraResidencyAtPeakFlaggedAsMemory) {
  const TrainingGraph g = test::chain(3);
  const CostedGraph open = attach(g, test::unit_profile(g, 10, 5), Budget{});
  const std::uint64_t peak = test::diagonal_peak(open);
  const CostedGraph cg = open.with_budget(Budget{peak, std::nullopt});
  Schedule s = diagonal_schedule(cg);
  ASSERT_TRUE(verify(s, cg).ok);
  // Find a row where keeping every dropped tensor alive overflows the budget.
  const auto usage = memory_usage(s, cg);
  int tight = -1;
  for (int t = 1; t < cg.size() && tight < 0; ++t) {
    std::uint64_t extra = 0;
    for (int i = 0; i < t; ++i) extra += s.s_ram(t, i) ? 0 : cg.cost(i).mem_out;
    if (*std::max_element(usage[t].begin(), usage[t].end()) + extra > peak) tight = t;
  }
  ASSERT_GE(tight, 1);
  for (int i = 0; i < tight; ++i) {
    for (int t = i + 1; t <= tight; ++t) s.s_ram.set(t, i);
  }
  const VerifyReport rep = verify(s, cg);
  ASSERT_FALSE(rep.ok);
  bool named = false;
  for (const Violation& v : rep.violations) named |= v.family == "mem" && v.t == tight && v.k >= 0;
  EXPECT_TRUE(named) << rep.summary();
}

TEST(Schedule, OtherFamiliesFlagged) {
  const TrainingGraph g = test::chain(2);
  const CostedGraph cg = attach(g, test::unit_profile(g), Budget{std::nullopt, Rational(4)});
  Schedule diag = diagonal_schedule(cg);
  Schedule s = diag;
  s.r.set(2, 2, false);
  EXPECT_TRUE(verify(s, cg).has("diag"));
  s = diag;
  s.s_ram.set(0, 1);
  EXPECT_TRUE(verify(s, cg).has("init"));
  s = diag;
  s.r.set(4, 1);  // recompute f2 at b1's step: one compute too many
  EXPECT_TRUE(verify(s, cg).has("deadline"));
  s = diag;
  s.s_ram.set(4, 0, false);  // b1 consumes f1
  EXPECT_TRUE(verify(s, cg).has("dep"));
  EXPECT_TRUE(verify(Schedule(3), cg).has("shape"));
}

TEST(Schedule, UnitDiagonalMetrics) {
  const TrainingGraph g = test::chain(2);
  const CostedGraph cg = attach(g, test::unit_profile(g), Budget{});
  const Metrics m = evaluate(diagonal_schedule(cg), cg);
  EXPECT_EQ(m.energy, 5);
  EXPECT_EQ(m.compute_time, 5);
  EXPECT_EQ(m.remat_count, 0u);
  EXPECT_EQ(m.pagein_count + m.pageout_count, 0u);
}

TEST(Schedule, PagingRoundTripAddsBothTransferCosts) {
  const TrainingGraph g = test::chain(3);
  CostProfile p = test::unit_profile(g);
  p.costs[0].phi_pageout = Rational(3, 7);
  p.costs[0].phi_pagein = Rational(2, 9);
  const CostedGraph cg = attach(g, p, Budget{});
  const Schedule diag = diagonal_schedule(cg);
  BitMatrix m_in(cg.size()), m_out(cg.size());
  m_out.set(1, 0);
  m_in.set(4, 0);  // f1 back in time for b2 at step 6
  const Schedule s = complete_storage(diag.r, m_in, m_out, cg);
  ASSERT_TRUE(verify(s, cg).ok) << verify(s, cg).summary();
  EXPECT_EQ(evaluate(s, cg).energy, evaluate(diag, cg).energy + Rational(3, 7) + Rational(2, 9));
}

TEST(Schedule, EnergyScalesWithPhi) {
  const CostedGraph cg = test::synth_instance(test::chain_spec(4), "mixed", 1, Rational(9, 10));
  const BaselineResult r = solve_restricted(cg, RestrictMode::kNone);
  ASSERT_TRUE(r.feasible());
  CostProfile p = cg.profile();
  const Rational c(7, 3);
  for (NodeCost& n : p.costs) {
    n.phi_compute *= c;
    n.phi_pagein *= c;
    n.phi_pageout *= c;
  }
  const CostedGraph scaled = attach(cg.graph(), p, cg.budget());
  EXPECT_EQ(evaluate(*r.schedule, scaled).energy, c * r.metrics->energy);
  const BaselineResult rs = solve_restricted(scaled, RestrictMode::kNone);
  EXPECT_EQ(rs.metrics->energy, c * r.metrics->energy);
}

/// Peak of the diagonal schedule from a liveness pass: a tensor is live from
/// its step until its last consumer's step.
std::uint64_t liveness_peak(const CostedGraph& cg) {
  const int n = cg.size();
  std::vector<int> last_use(n);
  for (int i = 0; i < n; ++i) {
    last_use[i] = cg.users(i).empty() ? i : cg.users(i).back();
  }
  std::uint64_t peak = cg.mu_static();
  for (int t = 0; t < n; ++t) {
    std::uint64_t base = cg.mu_static();
    for (int i = 0; i < t; ++i) {
      if (last_use[i] >= t) base += cg.cost(i).mem_out;
    }
    std::uint64_t after = base + cg.cost(t).mem_out;
    for (int i : cg.deps(t)) {
      if (last_use[i] == t) after -= cg.cost(i).mem_out;
    }
    if (last_use[t] == t) after -= cg.cost(t).mem_out;
    peak = std::max({peak, base, after});
  }
  return peak;
}

TEST(Schedule, DiagonalPeakMatchesLiveness) {
  for (int d = 1; d <= 8; ++d) {
    for (const char* regime : {"mixed", "conv-like", "uniform"}) {
      const TrainingGraph g = test::chain(d);
      const CostedGraph cg = attach(g, synth_profile(g, regime, d), Budget{});
      EXPECT_EQ(evaluate(diagonal_schedule(cg), cg).peak_ram, liveness_peak(cg)) << d << regime;
    }
  }
  GraphSpec spec;
  spec.kind = GraphKind::kAttentionBlock;
  spec.depth = 2;
  const TrainingGraph g = build_training_graph(spec);
  const CostedGraph cg = attach(g, synth_profile(g, "mixed", 1), Budget{});
  EXPECT_EQ(evaluate(diagonal_schedule(cg), cg).peak_ram, liveness_peak(cg));
}

TEST(Schedule, AssignmentRoundTrip) {
  const CostedGraph cg = test::tradeoff_instance(Budget{});
  const CostedGraph tight = cg.with_budget(Budget{test::ram_between(cg, Rational(4, 5)), std::nullopt});
  const MilpInstance inst = build_milp(tight);
  const SolveResult r = solve_exact(inst, SolveLimits{});
  ASSERT_TRUE(r.assignment);
  const Schedule s = from_assignment(*r.assignment, inst);
  const std::vector<Rational> back = to_assignment(s, tight, inst);
  EXPECT_TRUE(is_feasible(inst, back));
  EXPECT_EQ(objective_value(inst, back), r.assignment->objective);
  EXPECT_EQ(evaluate(s, tight).energy, r.assignment->objective);
}

TEST(Schedule, DiagonalBreakRejectedOnDecode) {
  const TrainingGraph g = test::chain(1);
  const CostedGraph cg = attach(g, test::unit_profile(g), Budget{});
  const MilpInstance inst = build_milp(cg);
  Assignment a;
  a.values.assign(inst.vars().size(), Rational(0));
  EXPECT_THROW(from_assignment(a, inst), Error);
  a.values.pop_back();
  EXPECT_THROW(from_assignment(a, inst), Error);
}

TEST(Schedule, FileFormatsRoundTrip) {
  const CostedGraph open = test::tradeoff_instance(Budget{});
  const CostedGraph cg = open.with_budget(Budget{test::ram_between(open, Rational(4, 5)), Rational(1, 10)});
  const BaselineResult r = solve_restricted(cg, RestrictMode::kNone);
  ASSERT_TRUE(r.feasible());
  const ScheduleFile f{*r.schedule, "integrated", graph_hash(cg.graph()), cg.budget(), r.metrics->energy};
  for (const char* ext : {".json", ".psch"}) {
    const auto path = std::filesystem::temp_directory_path() / (std::string("poet_sched") + ext);
    save_schedule(f, path);
    const ScheduleFile back = load_schedule(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.schedule, f.schedule) << ext;
    EXPECT_EQ(back.graph_hash, f.graph_hash);
    if (std::string(ext) == ".psch") continue;  // the compact form carries matrices only
    EXPECT_EQ(back.budget.ram, f.budget.ram);
    EXPECT_EQ(back.budget.deadline, f.budget.deadline);
    EXPECT_EQ(back.objective, f.objective);
  }
  // The compact form is a few hundred bytes for this 13-node graph.
  EXPECT_LT(schedule_to_binary(f).size(), 400u);
  EXPECT_THROW(schedule_from_binary("XXXX"), Error);
}

}  // namespace
}  // namespace poet
