#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poet/costmodel.hpp"
#include "poet/milp.hpp"
#include "poet/schedule.hpp"
#include "poet/solver.hpp"

namespace poet {

struct BaselineResult {
  std::string name;
  /// nullopt marks an infeasible result.
  std::optional<Schedule> schedule;
  std::optional<Metrics> metrics;
  /// Set for solver-backed strategies.
  std::optional<SolveStatus> status;
  double gap = 0.0;
  double seconds = 0.0;

  bool feasible() const { return schedule.has_value(); }
};

/// Forward layers kept by the square-root checkpointing rule: every
/// ceil(sqrt(depth))-th layer, as node indices in layer order. Throws
/// Error(kUnsupported) unless the graph is a plain chain.
std::vector<int> chen_checkpoints(const CostedGraph& cg);

/// Checkpoint every ceil(sqrt(depth))-th forward activation and recompute
/// each remaining segment once, at the first backward step that needs it.
/// No paging. Infeasible when the schedule breaks the budget.
BaselineResult chen_sqrt(const CostedGraph& cg);

/// RAM the square-root schedule needs by construction: static memory, all
/// checkpoints, the largest recomputed segment and the largest pair of
/// adjacent gradients (the loss counting as the first one).
std::uint64_t chen_sqrt_budget(const CostedGraph& cg);

/// Page-first greedy. Starting from the diagonal schedule, repeatedly pages
/// the tensor with the highest mem_out / (psi_pagein + psi_pageout) around an
/// idle interval that covers an over-budget step; once no page-out helps,
/// recomputes over-budget tensors cheapest-compute first, together with any
/// inputs no longer resident. Infeasible when neither move reduces the
/// overflow any further.
BaselineResult capuchin_greedy(const CostedGraph& cg);

/// Solves the MILP under the given restriction.
BaselineResult solve_restricted(const CostedGraph& cg, RestrictMode mode,
                                const SolveLimits& limits = {},
                                const std::vector<Schedule>& warm_starts = {});

}  // namespace poet
