#include "poet/planner.hpp"

#include <algorithm>
#include <sstream>

#include "poet/error.hpp"

namespace poet {

const char* to_string(OpCode op) {
  switch (op) {
    case OpCode::kPageIn:
      return "PAGEIN";
    case OpCode::kCompute:
      return "COMPUTE";
    case OpCode::kPageOut:
      return "PAGEOUT";
    case OpCode::kDealloc:
      return "DEALLOC";
  }
  return "?";
}

ExecutionPlan emit_plan(const Schedule& s, const CostedGraph& cg) {
  const VerifyReport rep = verify(s, cg);
  if (!rep.ok) throw Error(ErrorKind::kUnverifiedSchedule, rep.summary());
  const int n = cg.size();
  ExecutionPlan plan;
  auto emit = [&](OpCode op, int t, int node) { plan.instructions.push_back({op, t, node, {}}); };
  // Resident set at the start of row t equals S_RAM[t].
  std::vector<bool> resident(n, false);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      if (s.m_in(t, k)) {
        emit(OpCode::kPageIn, t, k);
        resident[k] = true;
      }
      if (s.r(t, k)) {
        emit(OpCode::kCompute, t, k);
        resident[k] = true;
      }
      if (s.m_out(t, k)) emit(OpCode::kPageOut, t, k);
      if (!s.r(t, k)) continue;
      auto release = [&](int i) {
        if (resident[i] && greedy_free(s, cg, t, i, k)) {
          emit(OpCode::kDealloc, t, i);
          resident[i] = false;
        }
      };
      for (int i : cg.deps(k)) release(i);
      release(k);
    }
    for (int i = 0; i < n; ++i) {
      if (resident[i] && !(t + 1 < n && s.s_ram(t + 1, i))) {
        emit(OpCode::kDealloc, t, i);
        resident[i] = false;
      }
    }
  }
  return plan;
}

namespace {

/// Costs in integer ticks of a common time quantum.
struct Ticks {
  BigInt scale;
  std::vector<std::int64_t> compute;
  std::vector<std::int64_t> pagein;
  std::vector<std::int64_t> pageout;

  explicit Ticks(const CostedGraph& cg) {
    std::vector<Rational> all;
    for (const NodeCost& c : cg.costs()) {
      all.insert(all.end(), {c.psi_compute, c.psi_pagein, c.psi_pageout});
    }
    scale = common_denominator(all);
    for (const NodeCost& c : cg.costs()) {
      compute.push_back(convert(c.psi_compute));
      pagein.push_back(convert(c.psi_pagein));
      pageout.push_back(convert(c.psi_pageout));
    }
  }

  std::int64_t convert(const Rational& x) const {
    const Rational y = x * Rational(scale);
    return to_int64_checked(boost::multiprecision::numerator(y), "simulated duration");
  }
  Rational seconds(std::int64_t ticks) const { return Rational(BigInt(ticks)) / Rational(scale); }
};

struct RawSim {
  bool ok = true;
  std::uint64_t peak_ram = 0;
  std::int64_t wall = 0;
  std::int64_t compute_total = 0;
  std::int64_t transfer_total = 0;
  std::optional<std::size_t> first_violation;
  std::string violation;
  std::vector<std::int64_t> starts;
};

RawSim run(const std::vector<Instruction>& code, const CostedGraph& cg, const Ticks& ticks,
           SimOptions opts) {
  const int n = cg.size();
  RawSim sim;
  std::vector<bool> resident(n, false);
  std::vector<bool> on_flash(n, false);
  std::vector<std::int64_t> ready(n, 0);        // data valid in RAM
  std::vector<std::int64_t> flash_ready(n, 0);  // data valid on flash
  std::vector<std::int64_t> busy_until(n, 0);   // last reader or writer of the RAM copy
  std::int64_t issue = 0;
  std::int64_t compute_free = 0;
  std::int64_t bus_free = 0;
  std::uint64_t mem = cg.mu_static();
  sim.peak_ram = mem;
  const auto label = [&](int i) { return std::to_string(cg.topology().id(i)); };

  for (std::size_t pc = 0; pc < code.size(); ++pc) {
    const Instruction& ins = code[pc];
    auto fail = [&](std::string why) {
      sim.ok = false;
      sim.first_violation = pc;
      sim.violation = std::move(why);
    };
    if (ins.node < 0 || ins.node >= n || ins.t < 0 || ins.t >= n) {
      fail("instruction out of range");
      break;
    }
    const int i = ins.node;
    const std::uint64_t size = cg.cost(i).mem_out;
    auto allocate = [&]() {
      if (resident[i]) return;
      mem += size;
      resident[i] = true;
    };
    std::int64_t start = 0;
    switch (ins.op) {
      case OpCode::kPageIn: {
        if (!on_flash[i]) {
          fail("page-in of node " + label(i) + " which is not on flash");
          break;
        }
        start = std::max({issue, bus_free, flash_ready[i]});
        if (opts.sync_paging) start = std::max(start, compute_free);
        const std::int64_t end = start + ticks.pagein[i];
        bus_free = end;
        if (opts.sync_paging) compute_free = issue = end;
        sim.transfer_total += ticks.pagein[i];
        if (!resident[i]) {
          allocate();
          ready[i] = end;
        }
        busy_until[i] = std::max(busy_until[i], end);
        break;
      }
      case OpCode::kCompute: {
        start = std::max(issue, compute_free);
        if (opts.sync_paging) start = std::max(start, bus_free);
        for (int d : cg.deps(i)) {
          if (!resident[d]) {
            fail("node " + label(i) + " consumes node " + label(d) + " which is not resident");
            break;
          }
          start = std::max(start, ready[d]);
        }
        if (!sim.ok) break;
        const std::int64_t end = start + ticks.compute[i];
        compute_free = end;
        issue = opts.sync_paging ? end : start;
        if (opts.sync_paging) bus_free = end;
        sim.compute_total += ticks.compute[i];
        allocate();
        ready[i] = end;
        busy_until[i] = std::max(busy_until[i], end);
        for (int d : cg.deps(i)) busy_until[d] = std::max(busy_until[d], end);
        break;
      }
      case OpCode::kPageOut: {
        if (!resident[i]) {
          fail("page-out of node " + label(i) + " which is not resident");
          break;
        }
        start = std::max({issue, bus_free, ready[i]});
        if (opts.sync_paging) start = std::max(start, compute_free);
        const std::int64_t end = start + ticks.pageout[i];
        bus_free = end;
        if (opts.sync_paging) compute_free = issue = end;
        sim.transfer_total += ticks.pageout[i];
        on_flash[i] = true;
        flash_ready[i] = end;
        busy_until[i] = std::max(busy_until[i], end);
        break;
      }
      case OpCode::kDealloc: {
        if (!resident[i]) {
          fail("deallocation of node " + label(i) + " which is not resident");
          break;
        }
        start = std::max(issue, busy_until[i]);
        issue = start;
        mem -= size;
        resident[i] = false;
        break;
      }
    }
    if (!sim.ok) break;
    sim.starts.push_back(start);
    // Usage is measured once the deallocations following a step are done.
    if (pc + 1 == code.size() || code[pc + 1].op != OpCode::kDealloc) {
      sim.peak_ram = std::max(sim.peak_ram, mem);
      if (cg.budget().ram && mem > *cg.budget().ram) {
        fail("RAM use " + std::to_string(mem) + " exceeds budget " +
             std::to_string(*cg.budget().ram));
        break;
      }
    }
  }
  sim.wall = std::max({issue, compute_free, bus_free});
  return sim;
}

SimReport to_report(const RawSim& raw, const Ticks& ticks) {
  SimReport rep;
  rep.ok = raw.ok;
  rep.peak_ram = raw.peak_ram;
  rep.wall_clock = ticks.seconds(raw.wall);
  rep.compute_time = ticks.seconds(raw.compute_total);
  const std::int64_t exposed = raw.wall - raw.compute_total;
  rep.hidden_transfer = ticks.seconds(std::max<std::int64_t>(0, raw.transfer_total - exposed));
  rep.first_violation = raw.first_violation;
  rep.violation = raw.violation;
  for (std::int64_t s : raw.starts) rep.starts.push_back(ticks.seconds(s));
  return rep;
}

}  // namespace

SimReport simulate(const ExecutionPlan& p, const CostedGraph& cg, SimOptions opts) {
  const Ticks ticks(cg);
  return to_report(run(p.instructions, cg, ticks, opts), ticks);
}

ExecutionPlan hide_latency(const ExecutionPlan& p, const CostedGraph& cg, SimOptions opts) {
  const Ticks ticks(cg);
  std::vector<Instruction> code = p.instructions;
  for (Instruction& ins : code) ins.start.reset();
  RawSim best = run(code, cg, ticks, opts);
  if (!best.ok) {
    throw Error(ErrorKind::kUnverifiedSchedule, "plan does not simulate cleanly: " + best.violation);
  }
  for (std::size_t j = 0; j < code.size(); ++j) {
    if (code[j].op != OpCode::kPageIn) continue;
    const int node = code[j].node;
    std::optional<std::size_t> best_slot;
    std::vector<Instruction> trial;
    for (std::size_t q = j; q-- > 0 && code[q].node != node;) {
      trial = code;
      Instruction moved = trial[j];
      moved.t = trial[q].t;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(j));
      trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(q), moved);
      RawSim sim = run(trial, cg, ticks, opts);
      if (sim.ok && sim.wall < best.wall) {
        best = std::move(sim);
        best_slot = q;
      }
    }
    if (best_slot) {
      Instruction moved = code[j];
      moved.t = code[*best_slot].t;
      code.erase(code.begin() + static_cast<std::ptrdiff_t>(j));
      code.insert(code.begin() + static_cast<std::ptrdiff_t>(*best_slot), moved);
    }
  }
  ExecutionPlan out;
  out.instructions = std::move(code);
  for (std::size_t k = 0; k < out.instructions.size(); ++k) {
    out.instructions[k].start = ticks.seconds(best.starts[k]);
  }
  out.transfers_exposed = best.wall > best.compute_total;
  return out;
}

PlanCounts count_instructions(const ExecutionPlan& p, int n) {
  PlanCounts c{std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, 0),
               std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, 0)};
  for (const Instruction& ins : p.instructions) {
    if (ins.node < 0 || ins.node >= n) continue;
    switch (ins.op) {
      case OpCode::kCompute:
        ++c.compute[ins.node];
        break;
      case OpCode::kPageIn:
        ++c.pagein[ins.node];
        break;
      case OpCode::kPageOut:
        ++c.pageout[ins.node];
        break;
      case OpCode::kDealloc:
        ++c.dealloc[ins.node];
        break;
    }
  }
  return c;
}

std::string plan_to_text(const ExecutionPlan& p, const Topology& topo) {
  std::ostringstream out;
  for (const Instruction& ins : p.instructions) {
    out << "t " << ins.t + 1 << ' ' << to_string(ins.op) << ' ' << topo.id(ins.node);
    if (ins.start) out << " start=" << format_rational(*ins.start);
    out << '\n';
  }
  return out.str();
}

ExecutionPlan plan_from_text(const std::string& text, const Topology& topo) {
  ExecutionPlan plan;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto bad = [&](const std::string& why) {
      return Error(ErrorKind::kParse, "plan line " + std::to_string(line_no) + ": " + why);
    };
    std::istringstream fields(line);
    std::string tag, op_text, id_text, extra;
    long long t = 0;
    if (!(fields >> tag >> t >> op_text >> id_text) || tag != "t") {
      throw bad("expected 't <timestep> <OP> <node-id>'");
    }
    if (t < 1 || t > topo.size()) throw bad("timestep out of range");
    Instruction ins;
    ins.t = static_cast<int>(t - 1);
    if (op_text == "PAGEIN") {
      ins.op = OpCode::kPageIn;
    } else if (op_text == "COMPUTE") {
      ins.op = OpCode::kCompute;
    } else if (op_text == "PAGEOUT") {
      ins.op = OpCode::kPageOut;
    } else if (op_text == "DEALLOC") {
      ins.op = OpCode::kDealloc;
    } else {
      throw bad("unknown instruction '" + op_text + "'");
    }
    NodeId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoll(id_text, &used);
      if (used != id_text.size()) throw bad("bad node id '" + id_text + "'");
    } catch (const std::logic_error&) {
      throw bad("bad node id '" + id_text + "'");
    }
    try {
      ins.node = topo.index_of(id);
    } catch (const Error&) {
      throw bad("unknown node id " + id_text);
    }
    if (fields >> extra) {
      if (extra.rfind("start=", 0) != 0) throw bad("unexpected field '" + extra + "'");
      ins.start = parse_rational(extra.substr(6));
      if (fields >> extra) throw bad("trailing field '" + extra + "'");
    }
    plan.instructions.push_back(ins);
  }
  return plan;
}

}  // namespace poet
