#include "poet/milp.hpp"

#include <numeric>
#include <sstream>

#include "poet/error.hpp"

namespace poet {

namespace {

constexpr const char* kTagNames[kTagCount] = {"dep",  "c1c",      "c1d",  "c1e",
                                              "c1f",  "mem",      "deadline", "init",
                                              "diag", "freedef",  "udef"};

constexpr const char* kMatrixPrefix[] = {"R", "SRAM", "SAUX", "MIN", "MOUT"};

}  // namespace

const char* to_string(Tag tag) { return kTagNames[static_cast<int>(tag)]; }

std::optional<Tag> parse_tag(const std::string& name) {
  for (int t = 0; t < kTagCount; ++t) {
    if (name == kTagNames[t]) return static_cast<Tag>(t);
  }
  return std::nullopt;
}

const char* to_string(RestrictMode mode) {
  switch (mode) {
    case RestrictMode::kNone: return "integrated";
    case RestrictMode::kRematOnly: return "remat";
    case RestrictMode::kPagingOnly: return "paging";
  }
  return "integrated";
}

RestrictMode parse_restrict_mode(const std::string& text) {
  if (text == "integrated" || text == "none") return RestrictMode::kNone;
  if (text == "remat" || text == "remat-only") return RestrictMode::kRematOnly;
  if (text == "paging" || text == "paging-only") return RestrictMode::kPagingOnly;
  throw Error(ErrorKind::kUnsupported, "unknown restriction mode '" + text + "'");
}

int MilpInstance::num_binaries() const {
  int count = 0;
  for (const VarInfo& v : vars_) count += v.is_binary() ? 1 : 0;
  return count;
}

int MilpInstance::num_continuous() const {
  return static_cast<int>(vars_.size()) - num_binaries();
}

std::array<std::size_t, kTagCount> MilpInstance::tag_counts() const {
  std::array<std::size_t, kTagCount> counts{};
  for (const Constraint& c : constraints_) ++counts[static_cast<int>(c.tag)];
  return counts;
}

std::string MilpInstance::name(int v) const {
  const VarInfo& info = vars_.at(v);
  std::ostringstream ss;
  switch (info.kind) {
    case VarKind::kFree:
      ss << "FREE_" << info.t + 1 << '_' << info.i + 1 << '_' << info.k + 1;
      break;
    case VarKind::kU:
      ss << "U_" << info.t + 1 << '_' << info.i + 1;
      break;
    default:
      ss << kMatrixPrefix[static_cast<int>(info.kind)] << '_' << info.t + 1 << '_' << info.i + 1;
  }
  return ss.str();
}

int MilpInstance::find(const std::string& name) const {
  const auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int MilpInstance::add_var(VarInfo info) {
  const int v = static_cast<int>(vars_.size());
  vars_.push_back(std::move(info));
  const std::string key = name(v);
  if (!by_name_.emplace(key, v).second) {
    vars_.pop_back();
    throw Error(ErrorKind::kModel, "duplicate variable " + key);
  }
  return v;
}

void MilpInstance::add_constraint(Constraint c) {
  for (const Term& term : c.terms) {
    if (term.var < 0 || term.var >= static_cast<int>(vars_.size())) {
      throw Error(ErrorKind::kModel, "constraint references unknown variable");
    }
  }
  constraints_.push_back(std::move(c));
}

int MilpInstance::var(VarKind kind, int t, int i) const {
  std::ostringstream ss;
  ss << kMatrixPrefix[static_cast<int>(kind)] << '_' << t + 1 << '_' << i + 1;
  return find(ss.str());
}

int MilpInstance::free_var(int t, int i, int k) const {
  return find("FREE_" + std::to_string(t + 1) + "_" + std::to_string(i + 1) + "_" +
              std::to_string(k + 1));
}

int MilpInstance::u_var(int t, int k) const {
  return find("U_" + std::to_string(t + 1) + "_" + std::to_string(k + 1));
}

namespace {

// Indices of the five n x n matrices in build order, avoiding name lookups.
struct Layout {
  int n;
  int at(VarKind kind, int t, int i) const { return (static_cast<int>(kind) * n + t) * n + i; }
};

std::vector<int> freeable(const CostedGraph& cg, int k) {
  std::vector<int> out = cg.deps(k);
  out.push_back(k);
  return out;  // deps are all < k, so this stays sorted
}

}  // namespace

MilpInstance build_milp(const CostedGraph& cg) {
  const int n = cg.size();
  const Budget& budget = cg.budget();

  std::uint64_t unit = cg.mu_static();
  for (int i = 0; i < n; ++i) unit = std::gcd(unit, cg.cost(i).mem_out);
  if (budget.ram) unit = std::gcd(unit, *budget.ram - cg.mu_static());
  if (unit == 0) unit = 1;
  auto bytes = [unit](std::uint64_t b) { return Rational(BigInt(b / unit)); };

  MilpInstance m;
  m.set_shape(n, unit);
  const Layout layout{n};
  for (int kind = 0; kind < 5; ++kind) {
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < n; ++i) {
        m.add_var({static_cast<VarKind>(kind), t, i, -1, 0, Rational(1)});
      }
    }
  }
  auto X = [&](VarKind kind, int t, int i) { return layout.at(kind, t, i); };

  // FREE[t, i, k] for i in DEPS(k) u {k}.
  std::vector<std::vector<std::vector<int>>> free_idx(n, std::vector<std::vector<int>>(n));
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      for (int i : freeable(cg, k)) {
        free_idx[t][k].push_back(m.add_var({VarKind::kFree, t, i, k, 0, Rational(1)}));
      }
    }
  }
  std::vector<std::vector<int>> u_idx(n, std::vector<int>(n));
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) u_idx[t][k] = m.add_var({VarKind::kU, t, k, -1, 0, std::nullopt});
  }

  using VK = VarKind;
  const Rational one = 1;
  const Rational minus_one = -1;

  // dep: R[t,i] + S[t,i] >= R[t,j] for every edge (i, j).
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < n; ++j) {
      for (int i : cg.deps(j)) {
        m.add_constraint({{{X(VK::kR, t, i), one}, {X(VK::kSRam, t, i), one},
                           {X(VK::kR, t, j), minus_one}},
                          Sense::kGe, 0, Tag::kDep});
      }
    }
  }
  for (int t = 1; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      m.add_constraint({{{X(VK::kR, t - 1, i), one}, {X(VK::kSRam, t - 1, i), one},
                         {X(VK::kMIn, t - 1, i), one}, {X(VK::kSRam, t, i), minus_one}},
                        Sense::kGe, 0, Tag::k1c});
    }
  }
  for (int t = 1; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      m.add_constraint({{{X(VK::kSAux, t - 1, i), one}, {X(VK::kMOut, t - 1, i), one},
                         {X(VK::kSAux, t, i), minus_one}},
                        Sense::kGe, 0, Tag::k1d});
    }
  }
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      m.add_constraint({{{X(VK::kSAux, t, i), one}, {X(VK::kMIn, t, i), minus_one}},
                        Sense::kGe, 0, Tag::k1e});
    }
  }
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      m.add_constraint({{{X(VK::kSRam, t, i), one}, {X(VK::kMOut, t, i), minus_one}},
                        Sense::kGe, 0, Tag::k1f});
    }
  }
  if (budget.ram) {
    const Rational cap = bytes(*budget.ram);
    for (int t = 0; t < n; ++t) {
      for (int k = 0; k < n; ++k) {
        m.add_constraint({{{u_idx[t][k], one}}, Sense::kLe, cap, Tag::kMem});
      }
    }
  }
  if (budget.deadline) {
    Constraint c{{}, Sense::kLe, *budget.deadline, Tag::kDeadline};
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < n; ++i) {
        if (cg.cost(i).psi_compute != 0) c.terms.push_back({X(VK::kR, t, i), cg.cost(i).psi_compute});
      }
    }
    m.add_constraint(std::move(c));
  }
  for (int i = 0; i < n; ++i) {
    m.add_constraint({{{X(VK::kSRam, 0, i), one}}, Sense::kEq, 0, Tag::kInit});
    m.add_constraint({{{X(VK::kSAux, 0, i), one}}, Sense::kEq, 0, Tag::kInit});
  }
  for (int v = 0; v < n; ++v) {
    m.add_constraint({{{X(VK::kR, v, v), one}}, Sense::kEq, 1, Tag::kDiag});
  }

  // U[t,0] = mu_static + resident + in-flight page-ins + output of 0 - frees;
  // U[t,k] = U[t,k-1] + output of k - frees at k.
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      Constraint c{{{u_idx[t][k], one}}, Sense::kEq, 0, Tag::kUDef};
      if (k == 0) {
        c.rhs = Rational(BigInt(cg.mu_static())) / Rational(BigInt(unit));
        for (int i = 0; i < n; ++i) {
          const Rational mi = bytes(cg.cost(i).mem_out);
          if (mi == 0) continue;
          c.terms.push_back({X(VK::kSRam, t, i), -mi});
          c.terms.push_back({X(VK::kMIn, t, i), -mi});
        }
      } else {
        c.terms.push_back({u_idx[t][k - 1], minus_one});
      }
      const Rational mk = bytes(cg.cost(k).mem_out);
      if (mk != 0) c.terms.push_back({X(VK::kR, t, k), -mk});
      const std::vector<int> fi = freeable(cg, k);
      for (std::size_t p = 0; p < fi.size(); ++p) {
        const Rational m_i = bytes(cg.cost(fi[p]).mem_out);
        if (m_i != 0) c.terms.push_back({free_idx[t][k][p], m_i});
      }
      m.add_constraint(std::move(c));
    }
  }

  // FREE[t,i,k] <= R[t,k]; hazards <= H (1 - FREE).
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      const std::vector<int> fi = freeable(cg, k);
      for (std::size_t p = 0; p < fi.size(); ++p) {
        const int i = fi[p];
        const int f = free_idx[t][k][p];
        m.add_constraint({{{f, one}, {X(VK::kR, t, k), minus_one}}, Sense::kLe, 0, Tag::kFreeDef});
        Constraint hazard{{}, Sense::kLe, 0, Tag::kFreeDef};
        if (t + 1 < n) hazard.terms.push_back({X(VK::kSRam, t + 1, i), one});
        hazard.terms.push_back({X(VK::kMOut, t, i), one});
        for (int j : cg.users(i)) {
          if (j > k) hazard.terms.push_back({X(VK::kR, t, j), one});
        }
        const Rational big = static_cast<int>(hazard.terms.size()) + 1;
        hazard.terms.push_back({f, big});
        hazard.rhs = big;
        m.add_constraint(std::move(hazard));
      }
    }
  }

  std::vector<Term> objective;
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      const NodeCost& c = cg.cost(i);
      if (c.phi_compute != 0) objective.push_back({X(VK::kR, t, i), c.phi_compute});
      if (c.phi_pagein != 0) objective.push_back({X(VK::kMIn, t, i), c.phi_pagein});
      if (c.phi_pageout != 0) objective.push_back({X(VK::kMOut, t, i), c.phi_pageout});
    }
  }
  m.set_objective(std::move(objective));
  return m;
}

MilpInstance restrict(const MilpInstance& instance, RestrictMode mode) {
  MilpInstance out = instance;
  out.set_mode(mode);
  for (int v = 0; v < static_cast<int>(out.vars().size()); ++v) {
    VarInfo& info = out.var_info(v);
    const bool fix = (mode == RestrictMode::kRematOnly &&
                      (info.kind == VarKind::kMIn || info.kind == VarKind::kMOut)) ||
                     (mode == RestrictMode::kPagingOnly && info.kind == VarKind::kR &&
                      info.t != info.i);
    if (fix) info.ub = Rational(0);
  }
  return out;
}

std::array<std::size_t, kTagCount> expected_tag_counts(const CostedGraph& cg) {
  const std::size_t n = cg.size();
  const std::size_t e = cg.topology().edge_count();
  std::size_t freeable_total = 0;
  for (int k = 0; k < cg.size(); ++k) freeable_total += cg.deps(k).size() + 1;
  std::array<std::size_t, kTagCount> c{};
  c[static_cast<int>(Tag::kDep)] = n * e;
  c[static_cast<int>(Tag::k1c)] = n * (n - 1);
  c[static_cast<int>(Tag::k1d)] = n * (n - 1);
  c[static_cast<int>(Tag::k1e)] = n * n;
  c[static_cast<int>(Tag::k1f)] = n * n;
  c[static_cast<int>(Tag::kMem)] = cg.budget().ram ? n * n : 0;
  c[static_cast<int>(Tag::kDeadline)] = cg.budget().deadline ? 1 : 0;
  c[static_cast<int>(Tag::kInit)] = 2 * n;
  c[static_cast<int>(Tag::kDiag)] = n;
  c[static_cast<int>(Tag::kFreeDef)] = 2 * n * freeable_total;
  c[static_cast<int>(Tag::kUDef)] = n * n;
  return c;
}

}  // namespace poet
