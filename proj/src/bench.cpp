#include "poet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "poet/baselines.hpp"
#include "poet/error.hpp"
#include "poet/schedule.hpp"

namespace poet {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string decimal(const Rational& r) {
  std::ostringstream os;
  os.precision(12);
  os << to_double(r);
  return os.str();
}

std::string decimal(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// One (instance, budget, deadline) cell; strategies share the instance.
struct Cell {
  std::size_t instance = 0;
  std::size_t budget = 0;
  std::size_t deadline = 0;
};

BenchRow blank_row(const BenchInstance& inst, const Rational& bfrac,
                   const std::optional<Rational>& dfrac, Strategy s) {
  BenchRow row;
  row.instance = inst.id();
  row.kind = to_string(inst.spec.kind);
  row.depth = inst.spec.depth;
  row.regime = inst.regime;
  row.seed = inst.seed;
  row.budget_frac = bfrac;
  row.deadline_frac = dfrac;
  row.strategy = to_string(s);
  return row;
}

void fill_from(BenchRow& row, const BaselineResult& res, const Rational& floor) {
  row.gap = res.gap;
  if (res.status) {
    row.status = to_string(*res.status);
  } else {
    row.status = res.feasible() ? "heuristic" : "infeasible";
  }
  row.feasible = res.feasible();
  if (res.metrics) {
    row.energy = res.metrics->energy;
    row.rel_energy = res.metrics->energy / floor;
    row.peak_ram = res.metrics->peak_ram;
    row.pagein = res.metrics->pagein_count;
    row.pageout = res.metrics->pageout_count;
    row.remat = res.metrics->remat_count;
  }
}

/// Heuristics run before the solver strategies so that each solve can start
/// from every schedule already found for the cell.
int run_order(Strategy s) {
  switch (s) {
    case Strategy::kChenSqrt: return 0;
    case Strategy::kCapuchin: return 1;
    case Strategy::kRematOnly: return 2;
    case Strategy::kPagingOnly: return 3;
    case Strategy::kPoet: return 4;
  }
  return 5;
}

std::vector<BenchRow> run_cell(const BenchConfig& cfg, const Cell& cell) {
  const BenchInstance& inst = cfg.instances[cell.instance];
  const Rational& bfrac = cfg.budget_fracs[cell.budget];
  const std::optional<Rational>& dfrac = cfg.deadline_fracs[cell.deadline];

  std::vector<BenchRow> rows;
  for (Strategy s : cfg.strategies) rows.push_back(blank_row(inst, bfrac, dfrac, s));

  std::optional<CostedGraph> cg;
  try {
    const TrainingGraph g = build_training_graph(inst.spec);
    const CostProfile p = synth_profile(g, inst.regime, inst.seed);
    const CostedGraph open = attach(g, p, Budget{});
    const std::uint64_t peak = evaluate(diagonal_schedule(open), open).peak_ram;
    const Rational raw = bfrac * Rational(peak);
    const std::uint64_t mu_ram = BigInt(boost::multiprecision::numerator(raw) /
                                        boost::multiprecision::denominator(raw))
                                     .convert_to<std::uint64_t>();
    std::optional<Rational> mu_deadline;
    if (dfrac) mu_deadline = *dfrac * open.compute_time_floor();
    for (BenchRow& row : rows) {
      row.mu_ram = mu_ram;
      row.mu_deadline = mu_deadline;
    }
    if (mu_ram <= open.mu_static() || (mu_deadline && *mu_deadline <= 0)) {
      for (BenchRow& row : rows) row.status = "infeasible";
      return rows;
    }
    cg = open.with_budget(Budget{mu_ram, mu_deadline});
  } catch (const std::exception& e) {
    for (BenchRow& row : rows) {
      row.status = "error";
      row.error = e.what();
    }
    return rows;
  }

  std::vector<std::size_t> order(cfg.strategies.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return run_order(cfg.strategies[a]) < run_order(cfg.strategies[b]);
  });

  const Rational floor = cg->energy_floor();
  std::vector<Schedule> found;
  for (std::size_t idx : order) {
    BenchRow& row = rows[idx];
    try {
      const auto start = std::chrono::steady_clock::now();
      BaselineResult res;
      switch (cfg.strategies[idx]) {
        case Strategy::kChenSqrt: res = chen_sqrt(*cg); break;
        case Strategy::kCapuchin: res = capuchin_greedy(*cg); break;
        case Strategy::kRematOnly:
          res = solve_restricted(*cg, RestrictMode::kRematOnly, cfg.limits, found);
          break;
        case Strategy::kPagingOnly:
          res = solve_restricted(*cg, RestrictMode::kPagingOnly, cfg.limits, found);
          break;
        case Strategy::kPoet:
          res = solve_restricted(*cg, RestrictMode::kNone, cfg.limits, found);
          break;
      }
      fill_from(row, res, floor);
      row.solve_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (res.schedule) found.push_back(*res.schedule);
    } catch (const std::exception& e) {
      row.status = "error";
      row.error = e.what();
    }
  }
  return rows;
}

}  // namespace

std::string BenchInstance::id() const {
  std::string out = to_string(spec.kind) + "-" + std::to_string(spec.depth);
  if (!spec.tags.empty()) {
    out += '-';
    for (OpClass c : spec.tags) out += c == OpClass::kHeavy ? 'h' : 'c';
  }
  return out + "-" + regime + "-s" + std::to_string(seed);
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kPoet: return "poet";
    case Strategy::kRematOnly: return "remat-only";
    case Strategy::kPagingOnly: return "paging-only";
    case Strategy::kChenSqrt: return "chen-sqrt";
    case Strategy::kCapuchin: return "capuchin-greedy";
  }
  return "?";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "poet" || text == "integrated") return Strategy::kPoet;
  if (text == "remat-only" || text == "remat") return Strategy::kRematOnly;
  if (text == "paging-only" || text == "paging") return Strategy::kPagingOnly;
  if (text == "chen-sqrt" || text == "chen") return Strategy::kChenSqrt;
  if (text == "capuchin-greedy" || text == "capuchin") return Strategy::kCapuchin;
  throw Error(ErrorKind::kInvalidSpec, "unknown strategy '" + text + "'");
}

std::vector<Rational> parse_sweep(const std::string& text) {
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() != 3) throw Error(ErrorKind::kInvalidSpec, "sweep must be lo:hi:steps, got '" + text + "'");
  Rational lo, hi;
  long steps = 0;
  try {
    lo = parse_rational(parts[0]);
    hi = parse_rational(parts[1]);
    std::size_t used = 0;
    steps = std::stol(parts[2], &used);
    if (used != parts[2].size()) throw Error(ErrorKind::kParse, parts[2]);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInvalidSpec, "malformed sweep '" + text + "'");
  }
  if (steps < 1 || lo > hi || lo <= 0) {
    throw Error(ErrorKind::kInvalidSpec, "sweep needs 0 < lo <= hi and steps >= 1: '" + text + "'");
  }
  std::vector<Rational> out;
  if (steps == 1) return {hi};
  for (long k = 0; k < steps; ++k) out.push_back(hi - (hi - lo) * Rational(k) / Rational(steps - 1));
  return out;
}

GraphSpec parse_graph_spec(const std::string& text) {
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) {
    throw Error(ErrorKind::kInvalidSpec, "graph spec must be kind:depth[:tags], got '" + text + "'");
  }
  GraphSpec spec;
  spec.kind = parse_graph_kind(parts[0]);
  try {
    std::size_t used = 0;
    spec.depth = std::stoi(parts[1], &used);
    if (used != parts[1].size()) throw Error(ErrorKind::kParse, parts[1]);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInvalidSpec, "bad depth in '" + text + "'");
  }
  if (parts.size() == 3 && !parts[2].empty()) spec.tags = parse_tags(parts[2]);
  return spec;
}

int default_threads() {
  if (const char* env = std::getenv("POET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < config.instances.size(); ++i) {
    for (std::size_t b = 0; b < config.budget_fracs.size(); ++b) {
      for (std::size_t d = 0; d < config.deadline_fracs.size(); ++d) cells.push_back({i, b, d});
    }
  }
  std::vector<std::vector<BenchRow>> results(cells.size());
  const int threads =
      std::max(1, std::min<int>(config.threads > 0 ? config.threads : default_threads(),
                                static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) results[c] = run_cell(config, cells[c]);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  std::vector<BenchRow> rows;
  for (auto& part : results) {
    for (BenchRow& row : part) rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "instance,kind,depth,regime,seed,budget_frac,mu_ram,deadline_frac,mu_deadline,strategy,"
        "status,feasible,energy,rel_energy,peak_ram,pagein,pageout,remat,solve_seconds,gap,error\n";
  for (const BenchRow& r : rows) {
    os << csv_field(r.instance) << ',' << r.kind << ',' << r.depth << ',' << csv_field(r.regime)
       << ',' << r.seed << ',' << decimal(r.budget_frac) << ',' << r.mu_ram << ','
       << (r.deadline_frac ? decimal(*r.deadline_frac) : "") << ','
       << (r.mu_deadline ? decimal(*r.mu_deadline) : "") << ',' << r.strategy << ',' << r.status
       << ',' << (r.feasible ? 1 : 0) << ',' << (r.energy ? decimal(*r.energy) : "") << ','
       << (r.rel_energy ? decimal(*r.rel_energy) : "") << ',';
    if (r.feasible) {
      os << r.peak_ram << ',' << r.pagein << ',' << r.pageout << ',' << r.remat;
    } else {
      os << ",,,";
    }
    os << ',' << decimal(r.solve_seconds) << ',' << decimal(r.gap) << ',' << csv_field(r.error)
       << '\n';
  }
  return os.str();
}

}  // namespace poet
