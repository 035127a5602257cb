#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poet/milp.hpp"
#include "poet/numeric.hpp"

namespace poet {

struct SolveLimits {
  double time_limit = 60.0;  // seconds
  std::uint64_t node_limit = UINT64_MAX;
  double required_gap = 0.0;  // relative; 0 asks for a proof of optimality
};

/// One value per instance variable, in instance order.
struct Assignment {
  std::vector<Rational> values;
  Rational objective;

  bool bit(int var) const { return values.at(var) != 0; }
};

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kTimedOut };
const char* to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::kTimedOut;
  /// Present for kOptimal and kFeasible.
  std::optional<Assignment> assignment;
  /// Proven lower bound on the optimum (when the instance is not infeasible).
  std::optional<Rational> lower_bound;
  /// (objective - lower_bound) / objective, 0 when proven optimal.
  double gap = 0.0;
  std::uint64_t nodes = 0;
  double seconds = 0.0;
};

/// Depth-first branch and bound over the binaries of `inst`. Continuous
/// variables must each be defined by an equality row; they are substituted
/// out before search. Every returned assignment is re-checked exactly
/// against the original rows. `warm_starts` are full value vectors whose
/// continuous entries are recomputed; infeasible ones are ignored.
SolveResult solve_exact(const MilpInstance& inst, const SolveLimits& limits,
                        const std::vector<std::vector<Rational>>& warm_starts = {});

/// Exact objective of `values`.
Rational objective_value(const MilpInstance& inst, const std::vector<Rational>& values);

/// Indices of constraints violated by `values`, in instance order.
std::vector<int> violated_constraints(const MilpInstance& inst, const std::vector<Rational>& values);

/// True when `values` respects every bound, binary integrality and every row.
bool is_feasible(const MilpInstance& inst, const std::vector<Rational>& values);

/// Recomputes every continuous variable from its defining equality, given
/// the binary entries of `values`. Throws Error(kUnsupported) if some
/// continuous variable has no defining equality.
std::vector<Rational> complete_continuous(const MilpInstance& inst, std::vector<Rational> values);

/// Writes the instance in CPLEX LP format. Each row is named <tag>_<seq>.
std::string write_lp(const MilpInstance& inst);

/// Reads the LP subset write_lp emits. Variable names must follow the
/// instance naming scheme so that schedule metadata can be recovered.
MilpInstance parse_lp(const std::string& text);

/// Reads `<name> <value>` lines (blank lines and lines starting with '#'
/// ignored). Binaries within 1e-6 of 0 or 1 are rounded; anything else is a
/// parse error, as are unknown names. Unlisted variables default to 0 and
/// continuous variables are recomputed from their definitions.
Assignment parse_solution(const std::string& text, const MilpInstance& inst);

/// `<name> <value>` lines for every variable, exact values.
std::string write_solution(const Assignment& a, const MilpInstance& inst);

}  // namespace poet
