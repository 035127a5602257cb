#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poet/costmodel.hpp"
#include "poet/schedule.hpp"

namespace poet {

enum class OpCode { kPageIn, kCompute, kPageOut, kDealloc };

const char* to_string(OpCode op);

struct Instruction {
  OpCode op = OpCode::kCompute;
  int t = 0;     // issue timestep, 0-based
  int node = 0;  // node index, 0-based
  /// Start time in seconds from the beginning of the epoch; set by
  /// hide_latency.
  std::optional<Rational> start;

  bool operator==(const Instruction&) const = default;
};

struct ExecutionPlan {
  std::vector<Instruction> instructions;
  /// Set by hide_latency when some page-in still delays a compute.
  bool transfers_exposed = false;

  bool operator==(const ExecutionPlan&) const = default;
};

struct SimOptions {
  /// Transfers block the compute unit instead of overlapping it.
  bool sync_paging = false;
};

struct SimReport {
  bool ok = true;
  std::uint64_t peak_ram = 0;
  Rational wall_clock;
  Rational compute_time;
  /// Transfer time that overlapped compute.
  Rational hidden_transfer;
  std::optional<std::size_t> first_violation;
  std::string violation;
  /// Start time of every instruction, parallel to the plan.
  std::vector<Rational> starts;
};

/// Walks timesteps, and within each timestep nodes in index order, emitting
/// PageIn, Compute and PageOut per the matrices followed by the greedy
/// deallocations after each compute. Anything still resident at the end of
/// a timestep that is not kept for the next one is deallocated there.
/// Throws Error(kUnverifiedSchedule) unless verify(s, cg) passes.
ExecutionPlan emit_plan(const Schedule& s, const CostedGraph& cg);

/// One compute unit and one shared transfer bus. The controller issues
/// instructions in order: a compute starts once the unit is free and its
/// inputs have arrived; a transfer starts once the bus is free and its
/// source is ready; a deallocation waits for the running compute and any
/// page-out of the same tensor. RAM is accounted in plan order and checked
/// against the budget once the deallocations following each step are done,
/// which is where the verifier measures it.
SimReport simulate(const ExecutionPlan& p, const CostedGraph& cg, SimOptions opts = {});

/// Moves page-ins to earlier slots, one at a time, keeping a move only when
/// the simulated wall clock strictly drops and the plan stays valid. A
/// page-in never crosses another instruction on the same node. Start times
/// of the result are filled in from simulation.
ExecutionPlan hide_latency(const ExecutionPlan& p, const CostedGraph& cg, SimOptions opts = {});

/// Instructions executed per node and kind; reproduces the column sums of
/// R, M_in and M_out.
struct PlanCounts {
  std::vector<std::size_t> compute;
  std::vector<std::size_t> pagein;
  std::vector<std::size_t> pageout;
  std::vector<std::size_t> dealloc;
};
PlanCounts count_instructions(const ExecutionPlan& p, int n);

/// One line per instruction: `t <timestep> <OP> <node-id> [start=<seconds>]`
/// with 1-based timesteps and graph node ids.
std::string plan_to_text(const ExecutionPlan& p, const Topology& topo);
/// Throws Error(kParse) on malformed lines or unknown node ids.
ExecutionPlan plan_from_text(const std::string& text, const Topology& topo);

}  // namespace poet
