#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poet/costmodel.hpp"
#include "poet/graph.hpp"
#include "poet/solver.hpp"

namespace poet {

struct BenchInstance {
  GraphSpec spec;
  std::string regime;
  std::uint64_t seed = 0;

  /// "<kind>-<depth>[-<tags>]-<regime>-s<seed>".
  std::string id() const;
};

enum class Strategy { kPoet, kRematOnly, kPagingOnly, kChenSqrt, kCapuchin };

/// "poet", "remat-only", "paging-only", "chen-sqrt", "capuchin-greedy".
const char* to_string(Strategy s);
/// Also accepts "integrated", "remat", "paging", "chen", "capuchin".
Strategy parse_strategy(const std::string& text);

struct BenchConfig {
  std::vector<BenchInstance> instances;
  /// RAM budgets as fractions of the diagonal schedule's peak.
  std::vector<Rational> budget_fracs;
  /// Deadlines as fractions of the summed compute time; nullopt = none.
  std::vector<std::optional<Rational>> deadline_fracs = {std::nullopt};
  std::vector<Strategy> strategies;
  SolveLimits limits;
  /// Worker threads; 0 reads POET_THREADS, falling back to the core count.
  int threads = 0;
};

struct BenchRow {
  std::string instance;
  std::string kind;
  int depth = 0;
  std::string regime;
  std::uint64_t seed = 0;
  Rational budget_frac;
  std::uint64_t mu_ram = 0;
  std::optional<Rational> deadline_frac;
  std::optional<Rational> mu_deadline;
  std::string strategy;
  std::string status;  // optimal, feasible, infeasible, timed-out, heuristic, error
  bool feasible = false;
  std::optional<Rational> energy;
  /// energy / (sum of phi_compute).
  std::optional<Rational> rel_energy;
  std::uint64_t peak_ram = 0;
  std::size_t pagein = 0;
  std::size_t pageout = 0;
  std::size_t remat = 0;
  double solve_seconds = 0.0;
  double gap = 0.0;
  std::string error;
};

/// Parses "lo:hi:steps" into `steps` evenly spaced values from hi down to
/// lo (a single value when steps is 1). Throws Error(kInvalidSpec).
std::vector<Rational> parse_sweep(const std::string& text);

/// Parses "<kind>:<depth>[:<tags>]". Throws Error(kInvalidSpec).
GraphSpec parse_graph_spec(const std::string& text);

/// Runs every (instance, budget, deadline, strategy) cell. Rows come back in
/// that nesting order whatever the completion order; a failing cell yields
/// a row with status "error" and the sweep goes on.
std::vector<BenchRow> run_bench(const BenchConfig& config);

/// Header plus one line per row. Columns: instance, kind, depth, regime,
/// seed, budget_frac, mu_ram, deadline_frac, mu_deadline, strategy, status,
/// feasible, energy, rel_energy, peak_ram, pagein, pageout, remat,
/// solve_seconds, gap, error.
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Worker count from POET_THREADS, else the hardware concurrency (>= 1).
int default_threads();

}  // namespace poet
