// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are pinned below; everything else is exact.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "poet/baselines.hpp"
#include "poet/bench.hpp"
#include "poet/error.hpp"
#include "poet/milp.hpp"
#include "poet/oracle.hpp"
#include "poet/planner.hpp"
#include "poet/schedule.hpp"
#include "poet/solver.hpp"

namespace poet {
namespace {

/// Minimum relative improvement of the integrated optimum over both
/// restrictions at some point of the tradeoff instance's sweep.
constexpr double kMinImprovement = 0.10;
/// Relative objective tolerance against the third-party solver.
constexpr double kExternalRelTol = 1e-6;
/// Per-solve time limit used throughout (seconds).
constexpr double kTimeLimit = 30.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates the cross-verification of every solver-returned assignment.
struct CrossLedger {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::string first_failure;
} g_cross;

void cross_check(const CostedGraph& cg, const MilpInstance& inst, const SolveResult& r,
                 const std::string& label) {
  if (!r.assignment) return;
  ++g_cross.checked;
  std::string why;
  try {
    const Schedule s = from_assignment(*r.assignment, inst);
    const VerifyReport rep = verify(s, cg);
    if (!rep.ok) {
      why = "verify: " + rep.summary();
    } else if (evaluate(s, cg).energy != r.assignment->objective) {
      why = "evaluate energy " + format_rational(evaluate(s, cg).energy) + " != objective " +
            format_rational(r.assignment->objective);
    }
  } catch (const std::exception& e) {
    why = e.what();
  }
  if (!why.empty()) {
    if (g_cross.failed++ == 0) g_cross.first_failure = label + ": " + why;
  }
}

SolveResult checked_solve(const CostedGraph& cg, const MilpInstance& inst, const std::string& label,
                          double time_limit = kTimeLimit) {
  SolveLimits limits;
  limits.time_limit = time_limit;
  SolveResult r = solve_exact(inst, limits);
  cross_check(cg, inst, r, label);
  return r;
}

TrainingGraph chain(int depth, const std::string& tags = "") {
  GraphSpec spec;
  spec.depth = depth;
  if (!tags.empty()) spec.tags = parse_tags(tags);
  return build_training_graph(spec);
}

std::uint64_t diagonal_peak(const CostedGraph& cg) {
  const CostedGraph open = cg.with_budget(Budget{});
  return evaluate(diagonal_schedule(open), open).peak_ram;
}

/// floor(frac * diagonal peak): the budget convention of the bench harness.
std::uint64_t ram_frac(const CostedGraph& cg, const Rational& frac) {
  const Rational v = frac * Rational(diagonal_peak(cg));
  return BigInt(boost::multiprecision::numerator(v) / boost::multiprecision::denominator(v))
      .convert_to<std::uint64_t>();
}

std::string label_of(const std::string& what, const CostedGraph& cg) {
  std::ostringstream os;
  os << what << " n=" << cg.size();
  if (cg.budget().ram) os << " ram=" << *cg.budget().ram;
  if (cg.budget().deadline) os << " deadline=" << format_rational(*cg.budget().deadline);
  return os.str();
}

std::string text(const std::optional<Rational>& e) { return e ? format_rational(*e) : "inf"; }

// 1 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
  Outcome out;
  std::mt19937_64 rng(20260601);
  const char* regimes[] = {"mixed", "conv-like", "uniform", "tradeoff", "device:M4"};
  int nontrivial = 0, infeasible = 0;
  for (int k = 0; k < 50; ++k) {
    const int depth = 1 + static_cast<int>(rng() % 2);
    const std::string regime = regimes[rng() % 5];
    const TrainingGraph g = chain(depth);
    const CostedGraph open = attach(g, synth_profile(g, regime, rng() % 1000), Budget{});
    std::uint64_t largest = 0;
    for (int i = 0; i < open.size(); ++i) largest = std::max(largest, open.cost(i).mem_out);
    // Half the budgets fall below the diagonal peak, half above it.
    const std::uint64_t peak = diagonal_peak(open);
    const std::uint64_t lo = rng() % 2 ? open.mu_static() + largest : peak;
    const std::uint64_t hi = lo == peak ? open.full_memory() : peak;
    Budget b;
    b.ram = lo + rng() % (hi - lo + 1);
    if (rng() % 2) b.deadline = open.compute_time_floor() * Rational(100 + rng() % 51, 100);
    const CostedGraph cg = open.with_budget(b);
    const OracleResult o = brute_force(cg, 100000000);
    const SolveResult r = checked_solve(cg, build_milp(cg), label_of("oracle-eq", cg));
    const std::optional<Rational> solver =
        r.status == SolveStatus::kOptimal ? std::optional<Rational>(r.assignment->objective) : std::nullopt;
    if (r.status != SolveStatus::kOptimal && r.status != SolveStatus::kInfeasible) {
      out.pass = false;
      out.detail += " instance " + std::to_string(k) + " not solved to optimality;";
      continue;
    }
    if (solver != o.optimal_energy) {
      out.pass = false;
      out.detail += " instance " + std::to_string(k) + " solver " + text(solver) + " oracle " +
                    text(o.optimal_energy) + ";";
    }
    if (!o.feasible()) {
      ++infeasible;
    } else if (*o.optimal_energy != cg.energy_floor()) {
      ++nontrivial;
    }
  }
  out.detail = "50 instances, " + std::to_string(infeasible) + " infeasible, " + std::to_string(nontrivial) +
               " above the compute floor" + out.detail;
  return out;
}

// 2 -------------------------------------------------------------------------
Outcome full_memory_floor() {
  Outcome out;
  std::vector<std::pair<std::string, TrainingGraph>> graphs;
  for (int d = 1; d <= 8; ++d) graphs.emplace_back("chain-" + std::to_string(d), chain(d));
  GraphSpec skip;
  skip.kind = GraphKind::kSkipChain;
  skip.depth = 4;
  graphs.emplace_back("skip-chain-4", build_training_graph(skip));
  GraphSpec att;
  att.kind = GraphKind::kAttentionBlock;
  att.depth = 1;
  graphs.emplace_back("attention-1", build_training_graph(att));
  int count = 0;
  for (const auto& [name, g] : graphs) {
    for (const char* regime : {"mixed", "conv-like", "uniform", "tradeoff"}) {
      const CostedGraph open = attach(g, synth_profile(g, regime, 7), Budget{});
      const CostedGraph cg = open.with_budget(Budget{open.full_memory(), std::nullopt});
      const MilpInstance inst = build_milp(cg);
      const SolveResult r = checked_solve(cg, inst, label_of("floor " + name, cg));
      ++count;
      std::string why;
      if (r.status != SolveStatus::kOptimal) {
        why = std::string("status ") + to_string(r.status);
      } else if (r.assignment->objective != cg.energy_floor()) {
        why = "objective " + format_rational(r.assignment->objective) + " != floor " +
              format_rational(cg.energy_floor());
      } else {
        const Schedule s = from_assignment(*r.assignment, inst);
        const Metrics m = evaluate(s, cg);
        if (s.r != diagonal_schedule(cg).r) why = "compute matrix is not the diagonal";
        if (m.pagein_count + m.pageout_count != 0) why = "schedule pages";
      }
      if (!why.empty()) {
        out.pass = false;
        out.detail += " " + name + "/" + regime + ": " + why + ";";
      }
    }
  }
  out.detail = std::to_string(count) + " instances at full memory" + out.detail;
  return out;
}

// Bench runs shared by criteria 3 and 4 --------------------------------------
struct BenchRuns {
  std::vector<BenchRow> suite;     // broad sweep
  std::vector<BenchRow> tradeoff;  // fine sweep on the tradeoff instance
  int strategies = 0;
};

const BenchRuns& bench_runs() {
  static const BenchRuns runs = [] {
    BenchRuns out;
    BenchConfig cfg;
    for (const char* spec :
         {"chain:4", "chain:5", "chain:6:chhccc", "chain:8", "skip-chain:4", "attention:1"}) {
      for (const char* regime : {"mixed", "conv-like", "tradeoff"}) {
        cfg.instances.push_back({parse_graph_spec(spec), regime, 1});
      }
    }
    cfg.instances.push_back({parse_graph_spec("chain:5"), "mixed", 2});
    cfg.instances.push_back({parse_graph_spec("chain:6:chhccc"), "conv-like", 2});
    cfg.budget_fracs = parse_sweep("0.75:1:6");
    cfg.deadline_fracs = {std::nullopt, Rational(11, 10)};
    cfg.strategies = {Strategy::kPoet, Strategy::kRematOnly, Strategy::kPagingOnly, Strategy::kCapuchin};
    cfg.limits.time_limit = kTimeLimit;
    out.strategies = static_cast<int>(cfg.strategies.size());
    out.suite = run_bench(cfg);

    cfg.instances = {{parse_graph_spec("chain:6:chhccc"), "tradeoff", 0}};
    cfg.budget_fracs = parse_sweep("0.65:1:36");
    cfg.deadline_fracs = {std::nullopt, Rational(1), Rational(21, 20), Rational(11, 10), Rational(6, 5)};
    out.tradeoff = run_bench(cfg);
    return out;
  }();
  return runs;
}

/// Rows grouped per (instance, budget, deadline) cell, strategies in config order.
std::vector<std::vector<const BenchRow*>> cells(const std::vector<BenchRow>& rows, int strategies) {
  std::vector<std::vector<const BenchRow*>> out;
  for (std::size_t k = 0; k < rows.size(); k += strategies) {
    std::vector<const BenchRow*> cell;
    for (int s = 0; s < strategies; ++s) cell.push_back(&rows[k + s]);
    out.push_back(std::move(cell));
  }
  return out;
}

std::string where(const BenchRow& r) {
  std::string s = r.instance + " budget " + format_rational(r.budget_frac);
  if (r.deadline_frac) s += " deadline " + format_rational(*r.deadline_frac);
  return s;
}

/// Cells where a feasible competitor beats POET, or any row errored.
Outcome check_dominance(const std::vector<BenchRow>& rows, int strategies,
                        const std::vector<std::string>& competitors, std::size_t* compared) {
  Outcome out;
  for (const auto& cell : cells(rows, strategies)) {
    const BenchRow& poet = *cell[0];
    for (const BenchRow* r : cell) {
      if (r->status == "error") {
        out.pass = false;
        out.detail += " error in " + where(*r) + " " + r->strategy + ": " + r->error + ";";
      }
    }
    for (const BenchRow* r : cell) {
      if (std::find(competitors.begin(), competitors.end(), r->strategy) == competitors.end()) continue;
      if (!r->feasible) continue;
      ++*compared;
      if (!poet.feasible || *poet.energy > *r->energy) {
        out.pass = false;
        out.detail += " " + r->strategy + " beats poet at " + where(*r) + ";";
      }
    }
  }
  return out;
}

std::string status_mix(const std::vector<BenchRow>& rows, const std::string& strategy) {
  std::map<std::string, int> count;
  for (const BenchRow& r : rows) {
    if (r.strategy == strategy) ++count[r.status];
  }
  std::string s;
  for (const auto& [k, v] : count) s += (s.empty() ? "" : " ") + k + "=" + std::to_string(v);
  return s;
}

// 3 -------------------------------------------------------------------------
Outcome dominance() {
  const BenchRuns& runs = bench_runs();
  std::size_t compared = 0;
  Outcome out = check_dominance(runs.suite, runs.strategies, {"remat-only", "paging-only"}, &compared);
  Outcome fine = check_dominance(runs.tradeoff, runs.strategies, {"remat-only", "paging-only"}, &compared);
  out.pass &= fine.pass;
  out.detail += fine.detail;

  double best = -1;
  std::string best_at;
  for (const auto& cell : cells(runs.tradeoff, runs.strategies)) {
    const BenchRow &poet = *cell[0], &remat = *cell[1], &paging = *cell[2];
    if (!poet.feasible || !remat.feasible || !paging.feasible) continue;
    const Rational other = std::min(*remat.energy, *paging.energy);
    const double gain = to_double((other - *poet.energy) / other);
    if (gain > best) {
      best = gain;
      best_at = where(poet);
    }
  }
  if (best < kMinImprovement) out.pass = false;
  std::ostringstream os;
  os << compared << " feasible restricted rows dominated; best strict gain " << best * 100 << "% at " << best_at
     << " (need " << kMinImprovement * 100 << "%); poet statuses: " << status_mix(runs.suite, "poet")
     << out.detail;
  out.detail = os.str();
  return out;
}

// 4 -------------------------------------------------------------------------
Outcome capuchin_direction() {
  const BenchRuns& runs = bench_runs();
  std::size_t compared = 0;
  Outcome out = check_dominance(runs.suite, runs.strategies, {"capuchin-greedy"}, &compared);
  Outcome fine = check_dominance(runs.tradeoff, runs.strategies, {"capuchin-greedy"}, &compared);
  out.pass &= fine.pass;
  out.detail += fine.detail;

  // Tightest sweep budget (no deadline) at which both produce a schedule.
  const BenchRow* poet = nullptr;
  const BenchRow* greedy = nullptr;
  for (const auto& cell : cells(runs.tradeoff, runs.strategies)) {
    if (cell[0]->deadline_frac || !cell[0]->feasible || !cell[3]->feasible) continue;
    if (!poet || cell[0]->mu_ram < poet->mu_ram) {
      poet = cell[0];
      greedy = cell[3];
    }
  }
  std::ostringstream os;
  os << compared << " capuchin rows dominated";
  if (!poet) {
    out.pass = false;
    os << "; no budget where both are feasible";
  } else {
    const Rational margin = *greedy->rel_energy - *poet->rel_energy;
    if (margin <= 0) out.pass = false;
    os << "; tightest joint budget " << poet->mu_ram << " (" << format_rational(poet->budget_frac)
       << "): capuchin " << format_rational(*greedy->energy) << " vs poet " << format_rational(*poet->energy)
       << ", overhead margin " << to_double(margin);
  }
  out.detail = os.str() + out.detail;
  return out;
}

// 5 -------------------------------------------------------------------------
Outcome monotonicity() {
  Outcome out;
  struct Inst {
    const char* depth_tags;
    int depth;
    const char* regime;
    std::uint64_t seed;
  } insts[] = {{"", 4, "mixed", 1},         {"", 4, "mixed", 2},          {"", 4, "conv-like", 1},
               {"", 4, "conv-like", 2},     {"", 5, "conv-like", 1},      {"", 5, "mixed", 1},
               {"chhccc", 6, "tradeoff", 0}, {"chcc", 4, "tradeoff", 0},   {"chhccc", 6, "conv-like", 1},
               {"", 5, "tradeoff", 0}};
  const Rational ram_fracs[] = {Rational(7, 10), Rational(31, 40), Rational(17, 20), Rational(37, 40), Rational(1)};
  const std::optional<Rational> deadlines[] = {Rational(1), Rational(21, 20), Rational(11, 10), Rational(6, 5),
                                               std::nullopt};
  int feasible_cells = 0, solves = 0;
  for (const Inst& in : insts) {
    const TrainingGraph g = chain(in.depth, in.depth_tags);
    const CostedGraph open = attach(g, synth_profile(g, in.regime, in.seed), Budget{});
    std::optional<Rational> e[5][5];
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        Budget budget{ram_frac(open, ram_fracs[a]), std::nullopt};
        if (deadlines[b]) budget.deadline = *deadlines[b] * open.compute_time_floor();
        const CostedGraph cg = open.with_budget(budget);
        const SolveResult r = checked_solve(cg, build_milp(cg), label_of("monotone", cg));
        ++solves;
        if (r.status != SolveStatus::kOptimal && r.status != SolveStatus::kInfeasible) {
          out.pass = false;
          out.detail += " unsolved cell " + label_of("", cg) + ";";
        }
        if (r.status == SolveStatus::kOptimal) {
          e[a][b] = r.assignment->objective;
          ++feasible_cells;
        }
      }
    }
    const auto worse = [](const std::optional<Rational>& tighter, const std::optional<Rational>& looser) {
      // Loosening a budget may only lower the optimum (infeasible = +inf).
      return looser && (!tighter || *tighter >= *looser);
    };
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        bool ok = true;
        if (e[a][b] && a + 1 < 5) ok &= worse(e[a][b], e[a + 1][b]);
        if (e[a][b] && b + 1 < 5) ok &= worse(e[a][b], e[a][b + 1]);
        if (!ok) {
          out.pass = false;
          out.detail += std::string(" violation on chain-") + std::to_string(in.depth) + "-" + in.regime +
                        " cell (" + std::to_string(a) + "," + std::to_string(b) + ");";
        }
      }
    }
  }
  out.detail = std::to_string(solves) + " solves over 10 instances, " + std::to_string(feasible_cells) +
               " feasible cells" + out.detail;
  return out;
}

// 7 -------------------------------------------------------------------------
Outcome planner_soundness() {
  Outcome out;
  std::mt19937_64 rng(77);
  struct Source {
    const char* spec;
    const char* regime;
  } sources[] = {{"chain:6:chhccc", "tradeoff"}, {"chain:5", "conv-like"}, {"chain:4", "mixed"},
                 {"chain:6:chhccc", "conv-like"}, {"skip-chain:4", "conv-like"}, {"chain:8", "mixed"}};
  int made = 0, paged = 0, attempts = 0, hidden = 0;
  while (made < 20 && attempts < 400) {
    ++attempts;
    const Source& src = sources[rng() % 6];
    const TrainingGraph g = build_training_graph(parse_graph_spec(src.spec));
    const CostedGraph open = attach(g, synth_profile(g, src.regime, 1 + rng() % 5), Budget{});
    Budget b{ram_frac(open, Rational(70 + rng() % 31, 100)), std::nullopt};
    if (rng() % 3 == 0) b.deadline = open.compute_time_floor() * Rational(100 + rng() % 30, 100);
    const CostedGraph cg = open.with_budget(b);
    BaselineResult r;
    switch (rng() % 3) {
      case 0:
        r = capuchin_greedy(cg);
        break;
      case 1: {
        SolveLimits limits;
        limits.time_limit = kTimeLimit;
        r = solve_restricted(cg, RestrictMode::kNone, limits);
        break;
      }
      default: {
        SolveLimits limits;
        limits.time_limit = kTimeLimit;
        r = solve_restricted(cg, RestrictMode::kPagingOnly, limits);
        break;
      }
    }
    if (!r.feasible() || !verify(*r.schedule, cg).ok) continue;
    ++made;
    paged += r.metrics->pagein_count > 0;
    std::string why;
    try {
      const ExecutionPlan plan = emit_plan(*r.schedule, cg);
      const SimReport base = simulate(plan, cg);
      const ExecutionPlan h = hide_latency(plan, cg);
      const SimReport after = simulate(h, cg);
      if (!base.ok) why = "plan: " + base.violation;
      else if (base.peak_ram > *b.ram) why = "plan exceeds RAM";
      else if (!after.ok) why = "hidden plan: " + after.violation;
      else if (after.peak_ram > *b.ram) why = "hidden plan exceeds RAM";
      else if (after.wall_clock > base.wall_clock) why = "hide_latency slowed the plan";
      hidden += after.wall_clock < base.wall_clock;
    } catch (const std::exception& e) {
      why = e.what();
    }
    if (!why.empty()) {
      out.pass = false;
      out.detail += " " + std::string(src.spec) + "/" + src.regime + ": " + why + ";";
    }
  }
  if (made < 20) out.pass = false;
  out.detail = std::to_string(made) + " verified schedules (" + std::to_string(paged) + " with paging, " +
               std::to_string(hidden) + " sped up by hide_latency)" + out.detail;
  return out;
}

// 8 -------------------------------------------------------------------------
Outcome deadline_flip() {
  Outcome out;
  const TrainingGraph g = chain(6, "chhccc");
  const CostedGraph open = attach(g, synth_profile(g, "tradeoff", 0), Budget{});
  const std::uint64_t ram = ram_frac(open, Rational(9, 10));
  const auto solve = [&](const Rational& deadline_frac, RestrictMode mode) {
    const CostedGraph cg = open.with_budget(Budget{ram, deadline_frac * open.compute_time_floor()});
    const MilpInstance inst = restrict(build_milp(cg), mode);
    const SolveResult r = checked_solve(cg, inst, label_of("flip", cg));
    std::optional<Metrics> m;
    if (r.assignment) m = evaluate(from_assignment(*r.assignment, inst), cg);
    return std::make_pair(r.status, m);
  };
  std::ostringstream os;
  const auto [loose_status, loose] = solve(Rational(6, 5), RestrictMode::kNone);
  const auto [remat_status, remat] = solve(Rational(6, 5), RestrictMode::kRematOnly);
  const bool loose_ok = loose_status == SolveStatus::kOptimal && remat_status == SolveStatus::kOptimal &&
                        loose->pagein_count + loose->pageout_count == 0 && loose->energy == remat->energy;
  os << "loose deadline: page traffic " << (loose ? loose->pagein_count + loose->pageout_count : 0)
     << ", integrated " << (loose ? format_rational(loose->energy) : "-") << " vs remat-only "
     << (remat ? format_rational(remat->energy) : "-");
  std::optional<Rational> flip;
  for (const Rational frac : {Rational(1), Rational(101, 100), Rational(51, 50), Rational(21, 20)}) {
    const auto [rs, rm] = solve(frac, RestrictMode::kRematOnly);
    const auto [is, im] = solve(frac, RestrictMode::kNone);
    if (rs == SolveStatus::kInfeasible && is == SolveStatus::kOptimal && im->pagein_count > 0) {
      flip = frac;
      os << "; tight deadline " << format_rational(frac) << "x: remat-only infeasible, integrated "
         << format_rational(im->energy) << " with " << im->pagein_count << " page-ins";
      break;
    }
  }
  if (!flip) os << "; no tight deadline flips the regime";
  out.pass = loose_ok && flip.has_value();
  out.detail = os.str();
  return out;
}

// 9 -------------------------------------------------------------------------
Outcome chen_sqrt_check() {
  Outcome out;
  int optimal = 0, runs = 0;
  for (int d = 4; d <= 16; ++d) {
    for (const char* regime : {"mixed", "conv-like"}) {
      const TrainingGraph g = chain(d);
      const CostedGraph open = attach(g, synth_profile(g, regime, static_cast<std::uint64_t>(d)), Budget{});
      const CostedGraph cg = open.with_budget(Budget{chen_sqrt_budget(open), std::nullopt});
      const BaselineResult chen = chen_sqrt(cg);
      ++runs;
      const std::string at = " depth " + std::to_string(d) + "/" + regime;
      if (!chen.feasible() || !verify(*chen.schedule, cg).ok) {
        out.pass = false;
        out.detail += at + ": chen schedule infeasible at its own budget;";
        continue;
      }
      if (chen.metrics->pagein_count + chen.metrics->pageout_count != 0) {
        out.pass = false;
        out.detail += at + ": chen schedule pages;";
      }
      SolveLimits limits;
      limits.time_limit = kTimeLimit;
      const BaselineResult remat = solve_restricted(cg, RestrictMode::kRematOnly, limits, {*chen.schedule});
      optimal += remat.status == SolveStatus::kOptimal;
      if (!remat.feasible() || remat.metrics->energy > chen.metrics->energy) {
        out.pass = false;
        out.detail += at + ": chen beats the remat-only solver;";
      }
    }
  }
  out.detail = std::to_string(runs) + " chains, remat-only proven optimal on " + std::to_string(optimal) +
               " (the rest bounded by the Chen warm start)" + out.detail;
  return out;
}

// 10 ------------------------------------------------------------------------
bool external_solver_available() {
  return std::system("python3 -c 'import highspy' >/dev/null 2>&1") == 0;
}

Outcome lp_round_trip() {
  Outcome out;
  const bool external = external_solver_available();
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "poet_acceptance_lp";
  std::filesystem::create_directories(dir);
  struct Inst {
    int depth;
    const char* tags;
    const char* regime;
    Rational ram;
    std::optional<Rational> deadline;
  } insts[] = {{2, "", "mixed", Rational(1), std::nullopt},
               {3, "", "conv-like", Rational(9, 10), std::nullopt},
               {4, "", "mixed", Rational(19, 20), std::nullopt},
               {4, "chcc", "tradeoff", Rational(4, 5), std::nullopt},
               {4, "", "conv-like", Rational(4, 5), Rational(11, 10)},
               {5, "", "conv-like", Rational(17, 20), std::nullopt},
               {6, "chhccc", "tradeoff", Rational(4, 5), std::nullopt},
               {6, "chhccc", "tradeoff", Rational(9, 10), Rational(1)},
               {3, "", "uniform", Rational(1, 2), std::nullopt},
               {5, "", "tradeoff", Rational(9, 10), Rational(6, 5)}};
  int external_checked = 0, k = 0;
  for (const Inst& in : insts) {
    ++k;
    const TrainingGraph g = chain(in.depth, in.tags);
    const CostedGraph open = attach(g, synth_profile(g, in.regime, 3), Budget{});
    Budget b{ram_frac(open, in.ram), std::nullopt};
    if (in.deadline) b.deadline = *in.deadline * open.compute_time_floor();
    const CostedGraph cg = open.with_budget(b);
    const MilpInstance inst = build_milp(cg);
    const std::string lp = write_lp(inst);
    const MilpInstance back = parse_lp(lp);
    const SolveResult a = checked_solve(cg, inst, label_of("lp original", cg));
    const SolveResult c = checked_solve(cg, back, label_of("lp parsed", cg));
    const std::string at = " instance " + std::to_string(k);
    if (a.status != c.status || (a.assignment && a.assignment->objective != c.assignment->objective)) {
      out.pass = false;
      out.detail += at + ": parsed instance optimum differs;";
    }
    if (a.status != SolveStatus::kOptimal && a.status != SolveStatus::kInfeasible) {
      out.pass = false;
      out.detail += at + ": not solved to optimality;";
    }
    if (!external) continue;
    const auto lp_path = dir / ("m" + std::to_string(k) + ".lp");
    const auto sol_path = dir / ("m" + std::to_string(k) + ".sol");
    std::ofstream(lp_path) << lp;
    const std::string cmd = "python3 '" POET_SOURCE_DIR "/tools/lp_highs.py' '" + lp_path.string() + "' '" +
                            sol_path.string() + "' >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      out.pass = false;
      out.detail += at + ": external solver failed to run;";
      continue;
    }
    std::ifstream in_sol(sol_path);
    std::stringstream buf;
    buf << in_sol.rdbuf();
    const std::string sol = buf.str();
    ++external_checked;
    if (a.status == SolveStatus::kInfeasible) {
      if (sol.rfind("# status infeasible", 0) != 0) {
        out.pass = false;
        out.detail += at + ": external solver did not report infeasible;";
      }
      continue;
    }
    try {
      const Assignment ext = parse_solution(sol, back);
      const double want = to_double(a.assignment->objective);
      const double got = to_double(ext.objective);
      if (std::abs(got - want) > kExternalRelTol * std::max(1.0, std::abs(want))) {
        out.pass = false;
        out.detail += at + ": external objective " + std::to_string(got) + " vs " + std::to_string(want) + ";";
      }
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail += at + ": external solution unreadable: " + e.what() + ";";
    }
  }
  std::filesystem::remove_all(dir);
  out.detail = "10 instances round-tripped; external solver " +
               (external ? "checked " + std::to_string(external_checked) + " within relative " +
                               std::to_string(kExternalRelTol)
                         : std::string("not available, skipped")) +
               out.detail;
  return out;
}

// 6 -------------------------------------------------------------------------
Outcome cross_verification() {
  Outcome out;
  out.pass = g_cross.failed == 0 && g_cross.checked > 0;
  out.detail = std::to_string(g_cross.checked) + " solver assignments verified, " + std::to_string(g_cross.failed) +
               " failed";
  if (g_cross.failed) out.detail += "; first: " + g_cross.first_failure;
  return out;
}

}  // namespace
}  // namespace poet

int main(int argc, char** argv) {
  using namespace poet;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Cross-verification runs last so that it covers every solve above it.
  const std::vector<Criterion> criteria = {
      {1, "oracle-equivalence", oracle_equivalence}, {2, "full-memory-floor", full_memory_floor},
      {3, "dominance", dominance},                   {4, "capuchin-direction", capuchin_direction},
      {5, "monotonicity", monotonicity},             {7, "planner-soundness", planner_soundness},
      {8, "deadline-flip", deadline_flip},           {9, "chen-sqrt", chen_sqrt_check},
      {10, "lp-round-trip", lp_round_trip},          {6, "cross-verification", cross_verification},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s criterion %d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
