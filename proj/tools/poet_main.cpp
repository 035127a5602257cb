#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poet/baselines.hpp"
#include "poet/bench.hpp"
#include "poet/costmodel.hpp"
#include "poet/error.hpp"
#include "poet/graph.hpp"
#include "poet/milp.hpp"
#include "poet/numeric.hpp"
#include "poet/planner.hpp"
#include "poet/schedule.hpp"
#include "poet/solver.hpp"

namespace {

using namespace poet;

// Exit codes.
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInfeasible = 2;  // also: verify or simulation found violations
constexpr int kNoIncumbent = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorKind::kIo, "cannot write " + path);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string show(const Rational& r) {
  std::ostringstream os;
  os.precision(10);
  os << format_rational(r) << " (" << to_double(r) << ")";
  return os.str();
}

struct BudgetArgs {
  std::string ram;
  std::string deadline;

  void add(CLI::App* app) {
    app->add_option("--ram", ram, "RAM budget in bytes");
    app->add_option("--deadline", deadline, "Per-epoch compute-time budget in seconds");
  }
  Budget resolve(const Budget& fallback = {}) const {
    Budget b = fallback;
    if (!ram.empty()) {
      const Rational v = parse_rational(ram);
      if (v < 0 || boost::multiprecision::denominator(v) != 1) {
        throw Error(ErrorKind::kInvalidSpec, "--ram must be a whole number of bytes");
      }
      b.ram = boost::multiprecision::numerator(v).convert_to<std::uint64_t>();
    }
    if (!deadline.empty()) b.deadline = parse_rational(deadline);
    return b;
  }
};

CostedGraph load_costed(const std::string& graph_path, const std::string& profile_path,
                        const Budget& budget) {
  const TrainingGraph g = load_graph(graph_path);
  const LoadedProfile lp = load_profile_file(profile_path);
  for (const std::string& w : lp.warnings) std::cerr << "warning: " << w << "\n";
  return attach(g, lp.profile, budget);
}

void print_metrics(const Metrics& m) {
  std::cout << "energy: " << show(m.energy) << "\n"
            << "compute_time: " << show(m.compute_time) << "\n"
            << "peak_ram: " << m.peak_ram << "\n"
            << "remat: " << m.remat_count << "\n"
            << "pagein: " << m.pagein_count << "\n"
            << "pageout: " << m.pageout_count << "\n";
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string kind = "chain";
  int depth = 4;
  std::string regime = "mixed";
  std::uint64_t seed = 0;
  std::string tags;
  std::vector<std::string> skips;
  std::string graph_out = "graph.json";
  std::string profile_out = "profile.json";
};

int cmd_gen(const GenArgs& a) {
  GraphSpec spec;
  spec.kind = parse_graph_kind(a.kind);
  spec.depth = a.depth;
  if (!a.tags.empty()) spec.tags = parse_tags(a.tags);
  for (const std::string& s : a.skips) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::kInvalidSpec, "skip must be from:to, got " + s);
    spec.skips.emplace_back(std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1)));
  }
  const TrainingGraph g = build_training_graph(spec);
  const CostProfile p = synth_profile(g, a.regime, a.seed);
  save_graph(g, a.graph_out);
  save_profile(p, a.profile_out);
  std::cout << "nodes: " << g.nodes.size() << "\n"
            << "graph: " << a.graph_out << "\n"
            << "profile: " << a.profile_out << "\n";
  return kOk;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string graph;
  std::string profile;
  BudgetArgs budget;
  std::string mode = "integrated";
  std::string solver = "builtin";
  double time_limit = 60.0;
  std::string out;
  std::string lp_out;
  std::string solution;
  std::string lp_command;
};

int finish_solve(const CostedGraph& cg, const std::string& name, const Schedule& s,
                 const SolveArgs& a, SolveStatus status, double gap) {
  const VerifyReport rep = verify(s, cg);
  if (!rep.ok) throw Error(ErrorKind::kUnverifiedSchedule, rep.summary());
  const Metrics m = evaluate(s, cg);
  std::cout << "status: " << to_string(status) << "\n"
            << "objective: " << show(m.energy) << "\n"
            << "gap: " << gap << "\n";
  print_metrics(m);
  if (!a.out.empty()) {
    save_schedule(ScheduleFile{s, name, graph_hash(cg.graph()), cg.budget(), m.energy}, a.out);
    std::cout << "schedule: " << a.out << "\n";
  }
  return kOk;
}

int cmd_solve(const SolveArgs& a) {
  std::optional<CostedGraph> cg;
  try {
    cg = load_costed(a.graph, a.profile, a.budget.resolve());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kInfeasibleBudget) throw;
    std::cout << "status: infeasible\n" << e.what() << "\n";
    return kInfeasible;
  }
  const RestrictMode mode = parse_restrict_mode(a.mode);

  if (a.solver == "builtin") {
    SolveLimits limits;
    limits.time_limit = a.time_limit;
    const BaselineResult res = solve_restricted(*cg, mode, limits);
    if (!res.feasible()) {
      std::cout << "status: " << to_string(*res.status) << "\n"
                << "seconds: " << res.seconds << "\n";
      return *res.status == SolveStatus::kInfeasible ? kInfeasible : kNoIncumbent;
    }
    if (!a.lp_out.empty()) write_file(a.lp_out, write_lp(restrict(build_milp(*cg), mode)));
    const int code = finish_solve(*cg, res.name, *res.schedule, a, *res.status, res.gap);
    std::cout << "seconds: " << res.seconds << "\n";
    return code;
  }
  if (a.solver != "lpfile") throw Error(ErrorKind::kInvalidSpec, "--solver must be builtin or lpfile");

  const MilpInstance inst = restrict(build_milp(*cg), mode);
  if (a.lp_out.empty()) throw Error(ErrorKind::kInvalidSpec, "--solver lpfile needs --lp-out");
  write_file(a.lp_out, write_lp(inst));
  std::cout << "lp: " << a.lp_out << "\n";
  std::string sol_path = a.solution;
  if (!a.lp_command.empty()) {
    if (sol_path.empty()) sol_path = a.lp_out + ".sol";
    std::string cmd = a.lp_command;
    for (const auto& [key, value] : {std::pair<std::string, std::string>{"{lp}", a.lp_out},
                                     {"{sol}", sol_path}}) {
      for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
        cmd.replace(pos, key.size(), value);
      }
    }
    const int rc = std::system(cmd.c_str());
    if (rc != 0) throw Error(ErrorKind::kIo, "LP command failed: " + cmd);
  }
  if (sol_path.empty()) return kOk;

  const std::string text = read_file(sol_path);
  if (text.rfind("# status infeasible", 0) == 0) {
    std::cout << "status: infeasible\n";
    return kInfeasible;
  }
  if (text.rfind("# status timed-out", 0) == 0) {
    std::cout << "status: timed-out\n";
    return kNoIncumbent;
  }
  const Assignment asg = parse_solution(text, inst);
  if (!is_feasible(inst, asg.values)) {
    throw Error(ErrorKind::kUnverifiedSchedule, "external solution violates the model");
  }
  const SolveStatus status = text.rfind("# status optimal", 0) == 0 ? SolveStatus::kOptimal
                                                                   : SolveStatus::kFeasible;
  return finish_solve(*cg, to_string(mode), from_assignment(asg, inst), a, status, 0.0);
}

// ---- verify ----------------------------------------------------------------

struct CheckArgs {
  std::string graph;
  std::string profile;
  std::string schedule;
  BudgetArgs budget;
};

CostedGraph load_for_schedule(const CheckArgs& a, ScheduleFile& file) {
  file = load_schedule(a.schedule);
  CostedGraph cg = load_costed(a.graph, a.profile, a.budget.resolve(file.budget));
  if (!file.graph_hash.empty() && file.graph_hash != graph_hash(cg.graph())) {
    std::cerr << "warning: schedule was produced for a different graph\n";
  }
  return cg;
}

int cmd_verify(const CheckArgs& a) {
  ScheduleFile file;
  const CostedGraph cg = load_for_schedule(a, file);
  const VerifyReport rep = verify(file.schedule, cg);
  if (!rep.ok) {
    std::cout << "violations: " << rep.violations.size() << "\n" << rep.summary() << "\n";
    return kInfeasible;
  }
  std::cout << "ok\n";
  print_metrics(evaluate(file.schedule, cg));
  return kOk;
}

// ---- plan ------------------------------------------------------------------

struct PlanArgs {
  CheckArgs check;
  std::string out;
  bool hide = false;
  bool sync = false;
};

int cmd_plan(const PlanArgs& a) {
  ScheduleFile file;
  const CostedGraph cg = load_for_schedule(a.check, file);
  const SimOptions opts{a.sync};
  ExecutionPlan plan = emit_plan(file.schedule, cg);
  if (a.hide) plan = hide_latency(plan, cg, opts);
  const SimReport rep = simulate(plan, cg, opts);
  if (!a.out.empty()) write_file(a.out, plan_to_text(plan, cg.topology()));
  std::cout << "ok: " << (rep.ok ? "true" : "false") << "\n"
            << "instructions: " << plan.instructions.size() << "\n"
            << "peak_ram: " << rep.peak_ram << "\n"
            << "wall_clock: " << show(rep.wall_clock) << "\n"
            << "compute_time: " << show(rep.compute_time) << "\n"
            << "hidden_transfer: " << show(rep.hidden_transfer) << "\n"
            << "transfers_exposed: " << (plan.transfers_exposed ? "true" : "false") << "\n";
  if (!rep.ok) {
    std::cout << "violation: instruction " << *rep.first_violation << ": " << rep.violation << "\n";
    return kInfeasible;
  }
  return kOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string spec = "chain:4,chain:6";
  std::string regimes = "mixed";
  std::string seeds = "1";
  std::string budget_sweep = "0.5:1:6";
  std::string deadline_sweep;
  std::string strategies = "poet,remat-only,paging-only,chen-sqrt,capuchin-greedy";
  std::string out;
  double time_limit = 30.0;
  int threads = 0;
};

int cmd_bench(const BenchArgs& a) {
  BenchConfig cfg;
  for (const std::string& spec_text : split_list(a.spec)) {
    const GraphSpec spec = parse_graph_spec(spec_text);
    for (const std::string& regime : split_list(a.regimes)) {
      for (const std::string& seed : split_list(a.seeds)) {
        cfg.instances.push_back({spec, regime, std::stoull(seed)});
      }
    }
  }
  cfg.budget_fracs = parse_sweep(a.budget_sweep);
  if (!a.deadline_sweep.empty()) {
    cfg.deadline_fracs.clear();
    for (const Rational& f : parse_sweep(a.deadline_sweep)) cfg.deadline_fracs.emplace_back(f);
  }
  for (const std::string& s : split_list(a.strategies)) cfg.strategies.push_back(parse_strategy(s));
  cfg.limits.time_limit = a.time_limit;
  cfg.threads = a.threads;
  const std::string csv = bench_csv(run_bench(cfg));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_file(a.out, csv);
    std::cerr << "wrote " << a.out << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-optimal training schedules with rematerialization and paging"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* g = app.add_subcommand("gen", "Generate a training graph and a synthetic cost profile");
  g->add_option("kind,--kind", gen.kind, "chain, skip-chain or attention-block");
  g->add_option("depth,--depth", gen.depth, "Number of forward layers");
  g->add_option("regime,--regime", gen.regime, "uniform, conv-like, mixed, tradeoff or device:<name>");
  g->add_option("seed,--seed", gen.seed, "Profile seed");
  g->add_option("--tags", gen.tags, "Per-layer classes, e.g. hcchcc");
  g->add_option("--skip", gen.skips, "Skip edge from:to (skip-chain)");
  g->add_option("--graph-out", gen.graph_out);
  g->add_option("--profile-out", gen.profile_out);

  SolveArgs solve;
  CLI::App* s = app.add_subcommand("solve", "Compute an energy-optimal schedule");
  s->add_option("--graph", solve.graph)->required();
  s->add_option("--profile", solve.profile)->required();
  solve.budget.add(s);
  s->add_option("--mode", solve.mode, "integrated, remat or paging");
  s->add_option("--solver", solve.solver, "builtin or lpfile");
  s->add_option("--time-limit", solve.time_limit, "Seconds");
  s->add_option("--out", solve.out, "Schedule file (.json or .psch)");
  s->add_option("--lp-out", solve.lp_out, "Also write the model in LP format");
  s->add_option("--solution", solve.solution, "lpfile: read `<name> <value>` lines from here");
  s->add_option("--lp-command", solve.lp_command,
                "lpfile: external solver command; {lp} and {sol} are substituted");

  CheckArgs check;
  CLI::App* v = app.add_subcommand("verify", "Check a schedule against every constraint");
  v->add_option("--graph", check.graph)->required();
  v->add_option("--profile", check.profile)->required();
  v->add_option("--schedule", check.schedule)->required();
  check.budget.add(v);

  PlanArgs plan;
  CLI::App* p = app.add_subcommand("plan", "Lower a schedule to an instruction stream and simulate it");
  p->add_option("--graph", plan.check.graph)->required();
  p->add_option("--profile", plan.check.profile)->required();
  p->add_option("--schedule", plan.check.schedule)->required();
  plan.check.budget.add(p);
  p->add_option("--out", plan.out, "Plan text file");
  p->add_flag("--hide-latency", plan.hide, "Issue page-ins early to overlap compute");
  p->add_flag("--sync-paging", plan.sync, "Transfers block the compute unit");

  BenchArgs bench;
  CLI::App* b = app.add_subcommand("bench", "Sweep budgets and strategies, emit CSV");
  b->add_option("--spec", bench.spec, "Comma-separated kind:depth[:tags] list");
  b->add_option("--regimes", bench.regimes, "Comma-separated regimes");
  b->add_option("--seeds", bench.seeds, "Comma-separated seeds");
  b->add_option("--budget-sweep", bench.budget_sweep, "lo:hi:steps, fractions of the full-memory peak");
  b->add_option("--deadline-sweep", bench.deadline_sweep, "lo:hi:steps, fractions of total compute time");
  b->add_option("--strategies", bench.strategies, "poet, remat-only, paging-only, chen-sqrt, capuchin-greedy");
  b->add_option("--out", bench.out, "CSV path (default stdout)");
  b->add_option("--time-limit", bench.time_limit, "Seconds per solve");
  b->add_option("--threads", bench.threads, "Worker threads (default POET_THREADS or core count)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFailure;
  }
  try {
    if (g->parsed()) return cmd_gen(gen);
    if (s->parsed()) return cmd_solve(solve);
    if (v->parsed()) return cmd_verify(check);
    if (p->parsed()) return cmd_plan(plan);
    if (b->parsed()) return cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
