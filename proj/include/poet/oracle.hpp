#pragma once

#include <cstdint>
#include <optional>

#include "poet/costmodel.hpp"
#include "poet/schedule.hpp"

namespace poet {

struct OracleResult {
  /// nullopt when no schedule satisfies the budget.
  std::optional<Rational> optimal_energy;
  std::optional<Schedule> witness;
  /// Row transitions examined.
  std::uint64_t explored = 0;

  bool feasible() const { return optimal_energy.has_value(); }
};

/// Exhaustive search over schedules, one timestep row at a time. A row
/// choice is a compute set, a page-out set and the set kept in RAM for the
/// next row; rows that break a dependency, the RAM budget or the deadline
/// are cut. Flash residency is taken maximal, page-ins minimal, page-outs
/// of tensors already on flash are skipped and no node is computed before
/// its own timestep, since each of these choices is never worse. Throws Error(kCapExceeded) once more than `cap`
/// transitions would be examined, and Error(kUnsupported) above 20 nodes.
OracleResult brute_force(const CostedGraph& cg, std::uint64_t cap);

}  // namespace poet
