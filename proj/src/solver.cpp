#include "poet/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "poet/error.hpp"

namespace poet {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kTimedOut: return "timed-out";
  }
  return "timed-out";
}

Rational objective_value(const MilpInstance& inst, const std::vector<Rational>& values) {
  Rational total = 0;
  for (const Term& term : inst.objective()) total += term.coef * values.at(term.var);
  return total;
}

std::vector<int> violated_constraints(const MilpInstance& inst,
                                      const std::vector<Rational>& values) {
  std::vector<int> bad;
  const auto& rows = inst.constraints();
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    Rational lhs = 0;
    for (const Term& term : rows[r].terms) lhs += term.coef * values.at(term.var);
    const bool ok = rows[r].sense == Sense::kLe   ? lhs <= rows[r].rhs
                    : rows[r].sense == Sense::kGe ? lhs >= rows[r].rhs
                                                  : lhs == rows[r].rhs;
    if (!ok) bad.push_back(r);
  }
  return bad;
}

bool is_feasible(const MilpInstance& inst, const std::vector<Rational>& values) {
  if (values.size() != inst.vars().size()) return false;
  for (std::size_t v = 0; v < values.size(); ++v) {
    const VarInfo& info = inst.vars()[v];
    if (values[v] < info.lb) return false;
    if (info.ub && values[v] > *info.ub) return false;
    if (info.is_binary() && values[v] != 0 && values[v] != 1) return false;
  }
  return violated_constraints(inst, values).empty();
}

namespace {

/// Affine expression over binaries.
struct LinExpr {
  std::map<int, Rational> terms;
  Rational constant = 0;

  void add(int var, const Rational& coef) {
    auto [it, inserted] = terms.emplace(var, coef);
    if (!inserted) {
      it->second += coef;
      if (it->second == 0) terms.erase(it);
    }
  }
  void add(const LinExpr& other, const Rational& factor) {
    for (const auto& [v, c] : other.terms) add(v, c * factor);
    constant += other.constant * factor;
  }
};

/// Continuous variables expressed over binaries, plus the rows consumed as
/// their definitions.
struct Elimination {
  std::vector<std::optional<LinExpr>> defs;  // per variable; set for continuous ones
  std::vector<bool> consumed;                // per constraint
};

Elimination eliminate_continuous(const MilpInstance& inst) {
  const auto& vars = inst.vars();
  const auto& rows = inst.constraints();
  Elimination e;
  e.defs.resize(vars.size());
  e.consumed.assign(rows.size(), false);
  std::size_t pending = 0;
  for (const VarInfo& info : vars) pending += info.is_binary() ? 0 : 1;

  bool progress = true;
  while (pending > 0 && progress) {
    progress = false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (e.consumed[r] || rows[r].sense != Sense::kEq) continue;
      int unknown = -1;
      int unknown_count = 0;
      bool has_continuous = false;
      for (const Term& term : rows[r].terms) {
        if (vars[term.var].is_binary() || term.coef == 0) continue;
        has_continuous = true;
        if (!e.defs[term.var]) {
          if (unknown != term.var) ++unknown_count;
          unknown = term.var;
        }
      }
      if (!has_continuous || unknown_count != 1) continue;
      // coef * x + rest = rhs  =>  x = (rhs - rest) / coef
      Rational coef = 0;
      LinExpr rest;
      for (const Term& term : rows[r].terms) {
        if (term.var == unknown) {
          coef += term.coef;
        } else if (vars[term.var].is_binary()) {
          rest.add(term.var, term.coef);
        } else {
          rest.add(*e.defs[term.var], term.coef);
        }
      }
      if (coef == 0) continue;
      LinExpr def;
      def.constant = rows[r].rhs / coef;
      def.add(rest, Rational(-1) / coef);
      e.defs[unknown] = std::move(def);
      e.consumed[r] = true;
      --pending;
      progress = true;
    }
  }
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (!vars[v].is_binary() && !e.defs[v]) {
      throw Error(ErrorKind::kUnsupported,
                  "continuous variable " + inst.name(static_cast<int>(v)) +
                      " is not defined by an equality row");
    }
  }
  return e;
}

LinExpr substitute(const std::vector<Term>& terms, const MilpInstance& inst,
                   const Elimination& e) {
  LinExpr out;
  for (const Term& term : terms) {
    if (inst.vars()[term.var].is_binary()) {
      out.add(term.var, term.coef);
    } else {
      out.add(*e.defs[term.var], term.coef);
    }
  }
  return out;
}

std::vector<Rational> apply_definitions(const MilpInstance& inst, const Elimination& e,
                                        std::vector<Rational> values) {
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (!e.defs[v]) continue;
    Rational x = e.defs[v]->constant;
    for (const auto& [b, c] : e.defs[v]->terms) x += c * values[b];
    values[v] = x;
  }
  (void)inst;
  return values;
}

BigInt floor_div(const BigInt& a, const BigInt& b) {
  // b > 0
  BigInt q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

/// sum coef * x <= rhs over binaries, integer data.
struct IntRow {
  std::vector<int> vars;
  std::vector<std::int64_t> coefs;
  std::int64_t rhs = 0;
  std::int64_t max_abs = 0;
};

constexpr std::int64_t kIntLimit = std::numeric_limits<std::int64_t>::max() / 4;

/// Scales `expr <= rhs` to coprime integers. Sets *infeasible when the row
/// has no terms and a negative rhs.
std::optional<IntRow> to_int_row(const LinExpr& expr, Rational rhs, bool* infeasible) {
  rhs -= expr.constant;
  if (expr.terms.empty()) {
    if (rhs < 0) *infeasible = true;
    return std::nullopt;
  }
  BigInt l = boost::multiprecision::denominator(rhs);
  for (const auto& [v, c] : expr.terms) l = boost::multiprecision::lcm(l, boost::multiprecision::denominator(c));
  BigInt g = 0;
  std::vector<BigInt> nums;
  for (const auto& [v, c] : expr.terms) {
    const BigInt a = boost::multiprecision::numerator(c) * (l / boost::multiprecision::denominator(c));
    nums.push_back(a);
    g = boost::multiprecision::gcd(g, a);
  }
  if (g < 0) g = -g;
  const BigInt b_scaled = boost::multiprecision::numerator(rhs) * (l / boost::multiprecision::denominator(rhs));
  IntRow row;
  BigInt total = 0;
  std::size_t p = 0;
  for (const auto& [v, c] : expr.terms) {
    const BigInt a = nums[p++] / g;
    row.vars.push_back(v);
    row.coefs.push_back(to_int64_checked(a, "scaled coefficient"));
    total += a < 0 ? BigInt(-a) : a;
  }
  const BigInt b = floor_div(b_scaled, g);
  total += b < 0 ? BigInt(-b) : b;
  if (total > kIntLimit) throw Error(ErrorKind::kModel, "row magnitude exceeds 64-bit range");
  row.rhs = to_int64_checked(b, "scaled rhs");
  for (std::int64_t a : row.coefs) row.max_abs = std::max(row.max_abs, a < 0 ? -a : a);
  return row;
}

int kind_rank(VarKind kind) {
  switch (kind) {
    case VarKind::kR: return 0;
    case VarKind::kMOut: return 1;
    case VarKind::kMIn: return 2;
    case VarKind::kSRam: return 3;
    case VarKind::kSAux: return 4;
    case VarKind::kFree: return 5;
    case VarKind::kU: return 6;
  }
  return 6;
}

class BranchAndBound {
 public:
  /// With `lazy_bounds`, bounds of substituted continuous variables are left
  /// out of the search and only checked at leaves; run() then reports
  /// lazy_violation() instead of a result if a leaf breaks one of them.
  BranchAndBound(const MilpInstance& inst, const SolveLimits& limits, bool lazy_bounds)
      : inst_(inst), limits_(limits), elim_(eliminate_continuous(inst)), lazy_bounds_(lazy_bounds) {}

  bool lazy_violation() const { return lazy_violation_; }

  SolveResult run(const std::vector<std::vector<Rational>>& warm_starts);

 private:
  bool build();
  void assign(int var, std::int8_t value);
  void undo_to(std::size_t trail_size);
  bool propagate();
  void enqueue(int row);
  void clear_queue();
  Assignment make_assignment() const;
  void offer(const Assignment& a);
  std::int64_t scaled_objective(const std::vector<Rational>& values) const;
  Rational unscale(std::int64_t v) const {
    return Rational(BigInt(v)) / Rational(obj_scale_) + obj_const_;
  }

  /// 0 or 1 when that value is at least as good as the other for every
  /// completion (all rows the other value would help are already
  /// redundant); -1 otherwise.
  int dominant_value(int var) const;

  const MilpInstance& inst_;
  SolveLimits limits_;
  Elimination elim_;
  bool lazy_bounds_ = true;
  bool lazy_violation_ = false;

  std::vector<IntRow> rows_;
  std::vector<std::int64_t> minact_;
  std::vector<std::int64_t> maxact_;
  std::vector<std::vector<std::pair<int, std::int64_t>>> cols_;  // var -> (row, coef)
  std::vector<std::int8_t> val_;
  std::vector<int> trail_;
  std::vector<int> queue_;
  std::vector<bool> queued_;
  std::vector<int> order_;

  int obj_row_ = -1;
  BigInt obj_scale_ = 1;
  Rational obj_const_ = 0;
  std::vector<std::int64_t> obj_coef_;  // per var, scaled

  std::optional<Assignment> incumbent_;
  std::int64_t incumbent_scaled_ = 0;

  // Row-boundary memo. Below a timestep boundary t the remaining problem
  // depends only on the interface variables at t+1 and on the slack left in
  // rows spanning more than two timesteps; a subtree exhausted with budgets
  // b proves every budget vector <= b hopeless for the same interface.
  std::string boundary_key(int t) const;
  std::vector<std::int64_t> high_contribution(int t) const;
  bool dominated(const std::string& key, const std::vector<std::int64_t>& budget) const;
  void record(const std::string& key, std::vector<std::int64_t> budget);

  std::vector<int> var_time_;
  std::vector<int> global_rows_;
  std::vector<std::vector<int>> interface_;
  std::unordered_map<std::string, std::vector<std::vector<std::int64_t>>> nogoods_;
};

std::string BranchAndBound::boundary_key(int t) const {
  std::string key(sizeof(int), '\0');
  std::memcpy(key.data(), &t, sizeof(int));
  key.reserve(key.size() + interface_[t].size());
  for (int v : interface_[t]) key.push_back(static_cast<char>('0' + val_[v]));
  return key;
}

std::vector<std::int64_t> BranchAndBound::high_contribution(int t) const {
  std::vector<std::int64_t> high;
  high.reserve(global_rows_.size());
  for (int r : global_rows_) {
    std::int64_t sum = 0;
    const IntRow& row = rows_[r];
    for (std::size_t p = 0; p < row.vars.size(); ++p) {
      if (var_time_[row.vars[p]] > t && val_[row.vars[p]] == 1) sum += row.coefs[p];
    }
    high.push_back(sum);
  }
  return high;
}

bool BranchAndBound::dominated(const std::string& key,
                               const std::vector<std::int64_t>& budget) const {
  const auto it = nogoods_.find(key);
  if (it == nogoods_.end()) return false;
  for (const auto& b : it->second) {
    bool covers = true;
    for (std::size_t g = 0; g < b.size() && covers; ++g) covers = budget[g] <= b[g];
    if (covers) return true;
  }
  return false;
}

void BranchAndBound::record(const std::string& key, std::vector<std::int64_t> budget) {
  auto& list = nogoods_[key];
  std::erase_if(list, [&](const std::vector<std::int64_t>& b) {
    for (std::size_t g = 0; g < b.size(); ++g) {
      if (b[g] > budget[g]) return false;
    }
    return true;
  });
  list.push_back(std::move(budget));
}

bool BranchAndBound::build() {
  const auto& vars = inst_.vars();
  const int nv = static_cast<int>(vars.size());
  bool infeasible = false;

  auto add_le = [&](const LinExpr& expr, const Rational& rhs) {
    if (auto row = to_int_row(expr, rhs, &infeasible)) rows_.push_back(std::move(*row));
  };
  auto add_ge = [&](const LinExpr& expr, const Rational& rhs) {
    LinExpr neg;
    neg.add(expr, Rational(-1));
    add_le(neg, -rhs);
  };

  const auto& cons = inst_.constraints();
  for (std::size_t r = 0; r < cons.size(); ++r) {
    if (elim_.consumed[r]) continue;
    const LinExpr expr = substitute(cons[r].terms, inst_, elim_);
    if (cons[r].sense != Sense::kGe) add_le(expr, cons[r].rhs);
    if (cons[r].sense != Sense::kLe) add_ge(expr, cons[r].rhs);
  }
  for (int v = 0; v < nv && !lazy_bounds_; ++v) {
    if (vars[v].is_binary()) continue;
    add_ge(*elim_.defs[v], vars[v].lb);
    if (vars[v].ub) add_le(*elim_.defs[v], *vars[v].ub);
  }

  val_.assign(nv, -1);
  cols_.assign(nv, {});
  // Objective as a row whose rhs tracks the incumbent.
  const LinExpr obj = substitute(inst_.objective(), inst_, elim_);
  obj_const_ = obj.constant;
  obj_scale_ = 1;
  for (const auto& [v, c] : obj.terms) {
    obj_scale_ = boost::multiprecision::lcm(obj_scale_, boost::multiprecision::denominator(c));
  }
  obj_coef_.assign(nv, 0);
  IntRow orow;
  BigInt total = 0;
  for (const auto& [v, c] : obj.terms) {
    const BigInt a = boost::multiprecision::numerator(c) * (obj_scale_ / boost::multiprecision::denominator(c));
    obj_coef_[v] = to_int64_checked(a, "scaled objective");
    orow.vars.push_back(v);
    orow.coefs.push_back(obj_coef_[v]);
    orow.max_abs = std::max(orow.max_abs, obj_coef_[v] < 0 ? -obj_coef_[v] : obj_coef_[v]);
    total += a < 0 ? BigInt(-a) : a;
  }
  if (total > kIntLimit) throw Error(ErrorKind::kModel, "objective magnitude exceeds 64-bit range");
  orow.rhs = kIntLimit;
  obj_row_ = static_cast<int>(rows_.size());
  rows_.push_back(std::move(orow));

  minact_.assign(rows_.size(), 0);
  maxact_.assign(rows_.size(), 0);
  queued_.assign(rows_.size(), false);
  for (int r = 0; r < static_cast<int>(rows_.size()); ++r) {
    for (std::size_t p = 0; p < rows_[r].vars.size(); ++p) {
      const std::int64_t a = rows_[r].coefs[p];
      cols_[rows_[r].vars[p]].push_back({r, a});
      if (a < 0) minact_[r] += a;
      if (a > 0) maxact_[r] += a;
    }
  }

  // Branching order: latest timestep first, then R, M_out, M_in, S_RAM,
  // S_AUX, FREE, then node index.
  for (int v = 0; v < nv; ++v) {
    if (vars[v].is_binary()) order_.push_back(v);
  }
  std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
    const VarInfo& x = vars[a];
    const VarInfo& y = vars[b];
    // Within R, consumers before producers so that unused inputs are
    // recognised as dominated.
    const int xi = x.kind == VarKind::kR ? -x.i : x.i;
    const int yi = y.kind == VarKind::kR ? -y.i : y.i;
    return std::make_tuple(-x.t, kind_rank(x.kind), xi, x.k) <
           std::make_tuple(-y.t, kind_rank(y.kind), yi, y.k);
  });

  var_time_.assign(nv, 0);
  int max_time = 0;
  for (int v = 0; v < nv; ++v) {
    var_time_[v] = vars[v].t;
    max_time = std::max(max_time, vars[v].t);
  }
  std::vector<std::set<int>> iface(max_time + 1);
  for (int r = 0; r < static_cast<int>(rows_.size()); ++r) {
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    for (int v : rows_[r].vars) {
      lo = std::min(lo, var_time_[v]);
      hi = std::max(hi, var_time_[v]);
    }
    if (r == obj_row_ || hi - lo > 1) {
      global_rows_.push_back(r);
    } else if (hi == lo + 1) {
      for (int v : rows_[r].vars) {
        if (var_time_[v] == hi) iface[lo].insert(v);
      }
    }
  }
  interface_.clear();
  for (const auto& set : iface) interface_.emplace_back(set.begin(), set.end());
  return !infeasible;
}

void BranchAndBound::enqueue(int row) {
  if (!queued_[row]) {
    queued_[row] = true;
    queue_.push_back(row);
  }
}

void BranchAndBound::clear_queue() {
  for (int r : queue_) queued_[r] = false;
  queue_.clear();
}

void BranchAndBound::assign(int var, std::int8_t value) {
  val_[var] = value;
  trail_.push_back(var);
  for (const auto& [r, a] : cols_[var]) {
    if (a > 0 && value == 1) {
      minact_[r] += a;
      enqueue(r);
    } else if (a < 0 && value == 0) {
      minact_[r] -= a;
      enqueue(r);
    } else if (a > 0) {
      maxact_[r] -= a;
    } else {
      maxact_[r] += a;
    }
  }
}

int BranchAndBound::dominant_value(int var) const {
  const std::int64_t c = obj_coef_[var];
  auto redundant_where = [&](bool positive) {
    for (const auto& [r, a] : cols_[var]) {
      if (r == obj_row_ || (a > 0) != positive) continue;
      if (maxact_[r] > rows_[r].rhs) return false;
    }
    return true;
  };
  if (c >= 0 && redundant_where(false)) return 0;
  if (c <= 0 && redundant_where(true)) return 1;
  return -1;
}

void BranchAndBound::undo_to(std::size_t trail_size) {
  while (trail_.size() > trail_size) {
    const int var = trail_.back();
    trail_.pop_back();
    const std::int8_t value = val_[var];
    for (const auto& [r, a] : cols_[var]) {
      if (a > 0 && value == 1) {
        minact_[r] -= a;
      } else if (a < 0 && value == 0) {
        minact_[r] += a;
      } else if (a > 0) {
        maxact_[r] += a;
      } else {
        maxact_[r] -= a;
      }
    }
    val_[var] = -1;
  }
}

bool BranchAndBound::propagate() {
  std::size_t head = 0;
  while (head < queue_.size()) {
    const int r = queue_[head++];
    queued_[r] = false;
    const IntRow& row = rows_[r];
    const std::int64_t slack = row.rhs - minact_[r];
    if (slack < 0) {
      for (std::size_t q = head; q < queue_.size(); ++q) queued_[queue_[q]] = false;
      queue_.clear();
      return false;
    }
    if (row.max_abs <= slack) continue;
    for (std::size_t p = 0; p < row.vars.size(); ++p) {
      const int v = row.vars[p];
      if (val_[v] >= 0) continue;
      const std::int64_t a = row.coefs[p];
      if (a > slack) {
        assign(v, 0);
      } else if (-a > slack) {
        assign(v, 1);
      }
    }
  }
  queue_.clear();
  return true;
}

Assignment BranchAndBound::make_assignment() const {
  std::vector<Rational> values(inst_.vars().size(), Rational(0));
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (inst_.vars()[v].is_binary()) values[v] = val_[v] == 1 ? 1 : 0;
  }
  values = apply_definitions(inst_, elim_, std::move(values));
  Assignment a;
  a.objective = objective_value(inst_, values);
  a.values = std::move(values);
  return a;
}

std::int64_t BranchAndBound::scaled_objective(const std::vector<Rational>& values) const {
  std::int64_t total = 0;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (obj_coef_[v] != 0 && values[v] != 0) total += obj_coef_[v];
  }
  return total;
}

void BranchAndBound::offer(const Assignment& a) {
  const std::int64_t s = scaled_objective(a.values);
  if (incumbent_ && s >= incumbent_scaled_) return;
  incumbent_ = a;
  incumbent_scaled_ = s;
  rows_[obj_row_].rhs = s - 1;
}

SolveResult BranchAndBound::run(const std::vector<std::vector<Rational>>& warm_starts) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  SolveResult result;
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  auto finish = [&](SolveStatus status, std::optional<std::int64_t> bound) {
    result.status = status;
    result.seconds = elapsed();
    if (incumbent_) {
      result.assignment = incumbent_;
      if (!bound || *bound > incumbent_scaled_) bound = incumbent_scaled_;
    }
    if (bound) result.lower_bound = unscale(*bound);
    if (incumbent_ && result.lower_bound) {
      const Rational obj = incumbent_->objective;
      result.gap = obj == 0 ? 0.0 : to_double((obj - *result.lower_bound) / obj);
    }
    return result;
  };

  if (!build()) return finish(SolveStatus::kInfeasible, std::nullopt);

  for (const auto& start_values : warm_starts) {
    if (start_values.size() != inst_.vars().size()) continue;
    std::vector<Rational> values = apply_definitions(inst_, elim_, start_values);
    if (!is_feasible(inst_, values)) continue;
    Assignment a;
    a.objective = objective_value(inst_, values);
    a.values = std::move(values);
    offer(a);
  }

  const auto& vars = inst_.vars();
  for (int v = 0; v < static_cast<int>(vars.size()); ++v) {
    if (!vars[v].is_binary()) continue;
    const bool fix0 = vars[v].ub && *vars[v].ub < 1;
    const bool fix1 = vars[v].lb > 0;
    if (fix0 && fix1) return finish(SolveStatus::kInfeasible, std::nullopt);
    if (fix0) assign(v, 0);
    if (fix1) assign(v, 1);
  }
  for (int r = 0; r < static_cast<int>(rows_.size()); ++r) enqueue(r);
  if (!propagate()) {
    clear_queue();
    return finish(incumbent_ ? SolveStatus::kOptimal : SolveStatus::kInfeasible,
                  incumbent_ ? std::optional<std::int64_t>(incumbent_scaled_) : std::nullopt);
  }
  const std::int64_t root_bound = minact_[obj_row_];

  struct Frame {
    int var;
    std::size_t pos;
    std::size_t trail_size;
    std::int8_t first;
    bool flipped;
    std::int64_t bound;
  };
  std::vector<Frame> stack;
  struct Boundary {
    std::string key;
    std::vector<std::int64_t> high;
    std::size_t depth;  // stack size when the boundary was entered
    int level;
  };
  std::vector<Boundary> boundaries;
  std::size_t pos = 0;
  std::uint64_t nodes = 0;

  auto open_bound = [&]() {
    std::int64_t lb = std::numeric_limits<std::int64_t>::max();
    lb = std::min(lb, minact_[obj_row_]);
    for (const Frame& f : stack) {
      if (!f.flipped) lb = std::min(lb, f.bound);
    }
    return std::max(lb, root_bound);
  };

  // Returns false when the tree is exhausted.
  auto backtrack = [&]() {
    while (!stack.empty()) {
      while (!boundaries.empty() && boundaries.back().depth >= stack.size()) {
        Boundary& b = boundaries.back();
        std::vector<std::int64_t> budget(global_rows_.size());
        for (std::size_t g = 0; g < budget.size(); ++g) budget[g] = rows_[global_rows_[g]].rhs - b.high[g];
        record(b.key, std::move(budget));
        boundaries.pop_back();
      }
      Frame& f = stack.back();
      undo_to(f.trail_size);
      clear_queue();
      if (!f.flipped) {
        f.flipped = true;
        ++nodes;
        assign(f.var, static_cast<std::int8_t>(1 - f.first));
        enqueue(obj_row_);
        if (propagate()) {
          pos = f.pos + 1;
          return true;
        }
        continue;
      }
      stack.pop_back();
    }
    return false;
  };

  bool timed_out = false;
  std::uint64_t next_check = 0;
  while (true) {
    if (nodes >= next_check) {
      next_check = nodes + 256;
      if (elapsed() > limits_.time_limit || nodes >= limits_.node_limit) {
        timed_out = true;
        break;
      }
      if (incumbent_ && limits_.required_gap > 0) {
        const Rational lb = unscale(open_bound());
        const Rational obj = incumbent_->objective;
        if (obj > 0 && to_double((obj - lb) / obj) <= limits_.required_gap) {
          timed_out = true;
          break;
        }
      }
    }
    while (pos < order_.size() && val_[order_[pos]] >= 0) ++pos;
    if (pos == order_.size()) {
      const Assignment a = make_assignment();
      if (!is_feasible(inst_, a.values)) {
        if (lazy_bounds_) {
          lazy_violation_ = true;
          return result;
        }
        throw Error(ErrorKind::kModel, "search produced an assignment that fails exact re-check");
      }
      offer(a);
      if (!backtrack()) break;
      continue;
    }
    const int v = order_[pos];
    const int tv = var_time_[v];
    const bool entered = !boundaries.empty() && boundaries.back().level == tv &&
                         boundaries.back().depth == stack.size();
    if (!entered && tv + 1 < static_cast<int>(interface_.size()) &&
        (stack.empty() || var_time_[stack.back().var] > tv)) {
      std::string key = boundary_key(tv);
      std::vector<std::int64_t> high = high_contribution(tv);
      std::vector<std::int64_t> budget(global_rows_.size());
      for (std::size_t g = 0; g < budget.size(); ++g) budget[g] = rows_[global_rows_[g]].rhs - high[g];
      if (dominated(key, budget)) {
        if (!backtrack()) break;
        continue;
      }
      boundaries.push_back({std::move(key), std::move(high), stack.size(), tv});
    }
    if (const int d = dominant_value(v); d >= 0) {
      assign(v, static_cast<std::int8_t>(d));
      if (!propagate() && !backtrack()) break;
      continue;
    }
    const std::int8_t first = vars[v].kind == VarKind::kFree ? 1 : 0;
    stack.push_back({v, pos, trail_.size(), first, false, minact_[obj_row_]});
    ++nodes;
    assign(v, first);
    if (propagate()) {
      ++pos;
      continue;
    }
    if (!backtrack()) break;
  }
  result.nodes = nodes;
  if (timed_out) {
    const std::int64_t lb = open_bound();
    undo_to(0);
    clear_queue();
    return finish(incumbent_ ? SolveStatus::kFeasible : SolveStatus::kTimedOut, lb);
  }
  return finish(incumbent_ ? SolveStatus::kOptimal : SolveStatus::kInfeasible,
                incumbent_ ? std::optional<std::int64_t>(incumbent_scaled_) : std::nullopt);
}

}  // namespace

SolveResult solve_exact(const MilpInstance& inst, const SolveLimits& limits,
                        const std::vector<std::vector<Rational>>& warm_starts) {
  if (!(limits.time_limit > 0) || limits.node_limit == 0 || limits.required_gap < 0 ||
      limits.required_gap >= 1) {
    throw Error(ErrorKind::kInvalidSpec, "solve limits must be positive with gap in [0, 1)");
  }
  BranchAndBound lazy(inst, limits, true);
  SolveResult result = lazy.run(warm_starts);
  if (!lazy.lazy_violation()) return result;
  BranchAndBound eager(inst, limits, false);
  return eager.run(warm_starts);
}

std::vector<Rational> complete_continuous(const MilpInstance& inst, std::vector<Rational> values) {
  if (values.size() != inst.vars().size()) {
    throw Error(ErrorKind::kShapeMismatch, "value vector does not match the instance");
  }
  const Elimination e = eliminate_continuous(inst);
  return apply_definitions(inst, e, std::move(values));
}

}  // namespace poet
