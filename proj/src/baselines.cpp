#include "poet/baselines.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "poet/error.hpp"

namespace poet {

namespace {

struct ChainShape {
  std::vector<int> forward;  // node index per layer, layer 1 first
  int loss = -1;
  std::vector<NodeRole> role;
};

ChainShape chain_shape(const CostedGraph& cg) {
  const int n = cg.size();
  std::map<NodeId, const Node*> by_id;
  for (const Node& node : cg.graph().nodes) by_id[node.id] = &node;
  ChainShape shape;
  shape.role.resize(n);
  std::map<int, int> layer_to_index;
  for (int k = 0; k < n; ++k) {
    const Node& node = *by_id.at(cg.topology().id(k));
    shape.role[k] = node.role;
    if (node.role == NodeRole::kForward) {
      if (!layer_to_index.emplace(node.layer, k).second) {
        throw Error(ErrorKind::kUnsupported, "two forward nodes share a layer");
      }
    } else if (node.role == NodeRole::kLoss) {
      if (shape.loss >= 0) throw Error(ErrorKind::kUnsupported, "more than one loss node");
      shape.loss = k;
    } else if (node.role != NodeRole::kBackward) {
      throw Error(ErrorKind::kUnsupported, "graph has nodes outside the training chain");
    }
  }
  const int depth = static_cast<int>(layer_to_index.size());
  for (int l = 1; l <= depth; ++l) {
    const auto it = layer_to_index.find(l);
    if (it == layer_to_index.end()) throw Error(ErrorKind::kUnsupported, "forward layers are not 1..d");
    shape.forward.push_back(it->second);
  }
  if (depth == 0 || shape.loss < 0) throw Error(ErrorKind::kUnsupported, "not a training chain");
  for (int l = 0; l < depth; ++l) {
    const std::vector<int> expect =
        l == 0 ? std::vector<int>{} : std::vector<int>{shape.forward[l - 1]};
    if (cg.deps(shape.forward[l]) != expect) {
      throw Error(ErrorKind::kUnsupported, "forward pass is not a simple chain");
    }
  }
  if (cg.deps(shape.loss) != std::vector<int>{shape.forward.back()}) {
    throw Error(ErrorKind::kUnsupported, "loss does not follow the last forward layer");
  }
  return shape;
}

int sqrt_stride(int depth) {
  int s = 1;
  while (s * s < depth) ++s;
  return s;
}

BaselineResult finish(std::string name, Schedule s, const CostedGraph& cg) {
  BaselineResult res;
  res.name = std::move(name);
  if (verify(s, cg).ok) {
    res.metrics = evaluate(s, cg);
    res.schedule = std::move(s);
  }
  return res;
}

/// Total RAM overflow summed over every measured step, and which timesteps
/// overflow.
struct Overflow {
  __int128 total = 0;
  std::vector<bool> row;
};

Overflow overflow(const Schedule& s, const CostedGraph& cg) {
  const int n = cg.size();
  Overflow o;
  o.row.assign(n, false);
  const std::uint64_t ram = *cg.budget().ram;
  const auto usage = memory_usage(s, cg);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      if (usage[t][k] > ram) {
        o.total += usage[t][k] - ram;
        o.row[t] = true;
      }
    }
  }
  return o;
}

/// Rows at which tensor i is produced, consumed or transferred, ascending.
std::vector<int> use_rows(const Schedule& s, const CostedGraph& cg, int i) {
  std::vector<int> rows;
  for (int t = 0; t < s.n(); ++t) {
    bool used = s.r(t, i) || s.m_in(t, i) || s.m_out(t, i);
    for (int j : cg.users(i)) used = used || s.r(t, j);
    if (used) rows.push_back(t);
  }
  return rows;
}

bool resident_throughout(const Schedule& s, int i, int from, int to) {
  for (int t = from; t <= to; ++t) {
    if (!s.s_ram(t, i)) return false;
  }
  return true;
}

bool any_row(const std::vector<bool>& rows, int from, int to) {
  for (int t = std::max(from, 0); t <= to && t < static_cast<int>(rows.size()); ++t) {
    if (rows[t]) return true;
  }
  return false;
}

/// Computes i at row t, along with every input that row would otherwise
/// lack.
void recompute_with_inputs(Schedule& s, const CostedGraph& cg, int t, int i) {
  if (s.r(t, i)) return;
  s.r.set(t, i);
  for (int d : cg.deps(i)) {
    if (!s.s_ram(t, d)) recompute_with_inputs(s, cg, t, d);
  }
}

/// Clears page-outs of i that no later page-in reads.
void drop_unused_pageouts(Schedule& s, int i) {
  bool read_later = false;
  for (int t = s.n() - 1; t >= 0; --t) {
    if (s.m_out(t, i) && !read_later) s.m_out.set(t, i, false);
    read_later = read_later || s.m_in(t, i);
  }
}

struct Gap {
  int node;
  int from;  // last use before the idle interval
  int to;    // next use after it
};

}  // namespace

std::vector<int> chen_checkpoints(const CostedGraph& cg) {
  const ChainShape shape = chain_shape(cg);
  const int depth = static_cast<int>(shape.forward.size());
  const int stride = sqrt_stride(depth);
  std::vector<int> out;
  for (int l = stride; l <= depth; l += stride) out.push_back(shape.forward[l - 1]);
  return out;
}

BaselineResult chen_sqrt(const CostedGraph& cg) {
  const ChainShape shape = chain_shape(cg);
  const int n = cg.size();
  const int depth = static_cast<int>(shape.forward.size());
  const int stride = sqrt_stride(depth);
  // Segment of each forward node (0-based); checkpoints get -1.
  std::vector<int> segment(n, -1);
  for (int l = 1; l <= depth; ++l) {
    if (l % stride != 0) segment[shape.forward[l - 1]] = (l - 1) / stride;
  }
  const int segments = (depth + stride - 1) / stride;
  std::vector<bool> recomputed(segments, false);
  BitMatrix r(n);
  for (int t = 0; t < n; ++t) {
    r.set(t, t);
    if (shape.role[t] != NodeRole::kBackward) continue;
    for (int d : cg.deps(t)) {
      const int seg = segment[d];
      if (seg < 0 || recomputed[seg]) continue;
      recomputed[seg] = true;
      for (int k : shape.forward) {
        if (segment[k] == seg) r.set(t, k);
      }
    }
  }
  return finish("chen-sqrt", complete_storage(r, BitMatrix(n), BitMatrix(n), cg), cg);
}

std::uint64_t chen_sqrt_budget(const CostedGraph& cg) {
  const ChainShape shape = chain_shape(cg);
  const int depth = static_cast<int>(shape.forward.size());
  const int stride = sqrt_stride(depth);
  std::uint64_t checkpoints = 0;
  std::uint64_t widest_segment = 0;
  std::uint64_t segment = 0;
  for (int l = 1; l <= depth; ++l) {
    const std::uint64_t m = cg.cost(shape.forward[l - 1]).mem_out;
    if (l % stride == 0) {
      checkpoints += m;
      segment = 0;
    } else {
      segment += m;
      widest_segment = std::max(widest_segment, segment);
    }
  }
  std::uint64_t gradients = 0;
  for (int k = 0; k < cg.size(); ++k) {
    if (shape.role[k] != NodeRole::kBackward) continue;
    std::uint64_t pair = cg.cost(k).mem_out;
    for (int d : cg.deps(k)) {
      if (shape.role[d] != NodeRole::kForward) pair += cg.cost(d).mem_out;
    }
    gradients = std::max(gradients, pair);
  }
  return cg.mu_static() + checkpoints + widest_segment + gradients;
}

BaselineResult capuchin_greedy(const CostedGraph& cg) {
  const int n = cg.size();
  Schedule cur = diagonal_schedule(cg);
  if (!cg.budget().ram) return finish("capuchin-greedy", std::move(cur), cg);

  auto rebuild = [&](const Schedule& s) { return complete_storage(s.r, s.m_in, s.m_out, cg); };
  // Idle intervals of tensors held in RAM throughout.
  auto gaps = [&](const Schedule& s, int min_len) {
    std::vector<Gap> out;
    for (int i = 0; i < n; ++i) {
      const std::vector<int> rows = use_rows(s, cg, i);
      for (std::size_t u = 0; u + 1 < rows.size(); ++u) {
        if (rows[u + 1] - rows[u] >= min_len && resident_throughout(s, i, rows[u] + 1, rows[u + 1])) {
          out.push_back({i, rows[u], rows[u + 1]});
        }
      }
    }
    return out;
  };

  Overflow over = overflow(cur, cg);
  while (over.total > 0) {
    bool moved = false;

    // Page-out right after the last use, page-in right before the next one;
    // RAM is saved on the rows strictly between the two transfers.
    std::vector<Gap> paging;
    for (const Gap& g : gaps(cur, 4)) {
      if (any_row(over.row, g.from + 2, g.to - 2)) paging.push_back(g);
    }
    // Memory saved per second of transfer; free transfers rank first.
    auto rank = [&](const Gap& g) {
      const NodeCost& c = cg.cost(g.node);
      const Rational transfer = c.psi_pagein + c.psi_pageout;
      const Rational rate = transfer == 0 ? Rational(0) : Rational(BigInt(c.mem_out)) / transfer;
      return std::make_tuple(transfer != 0, -rate, g.from - g.to, g.node, g.from);
    };
    std::stable_sort(paging.begin(), paging.end(),
                     [&](const Gap& a, const Gap& b) { return rank(a) < rank(b); });
    for (const Gap& g : paging) {
      Schedule trial = cur;
      trial.m_out.set(g.from + 1, g.node);
      trial.m_in.set(g.to - 1, g.node);
      trial = rebuild(trial);
      Overflow o = overflow(trial, cg);
      if (o.total < over.total) {
        cur = std::move(trial);
        over = std::move(o);
        moved = true;
        break;
      }
    }
    if (moved) continue;

    // Recompute at a consuming row instead of holding or paging in; a
    // page-in made redundant by this is dropped.
    std::vector<Gap> remat;
    for (int i = 0; i < n; ++i) {
      std::vector<int> rows;
      for (int t = 0; t < n; ++t) {
        bool used = cur.r(t, i);
        for (int j : cg.users(i)) used = used || cur.r(t, j);
        if (used) rows.push_back(t);
      }
      for (std::size_t u = 0; u + 1 < rows.size(); ++u) {
        const Gap g{i, rows[u], rows[u + 1]};
        if (g.to - g.from < 2 || cur.r(g.to, i)) continue;
        if (any_row(over.row, g.from + 1, g.to - 1)) remat.push_back(g);
      }
    }
    std::stable_sort(remat.begin(), remat.end(), [&](const Gap& a, const Gap& b) {
      const Rational& ca = cg.cost(a.node).phi_compute;
      const Rational& cb = cg.cost(b.node).phi_compute;
      if (ca != cb) return ca < cb;
      return std::tie(a.node, a.from) < std::tie(b.node, b.from);
    });
    for (const Gap& g : remat) {
      Schedule trial = cur;
      for (int t = g.from; t < g.to; ++t) trial.m_in.set(t, g.node, false);
      drop_unused_pageouts(trial, g.node);
      recompute_with_inputs(trial, cg, g.to, g.node);
      trial = rebuild(trial);
      Overflow o = overflow(trial, cg);
      if (o.total < over.total) {
        cur = std::move(trial);
        over = std::move(o);
        moved = true;
        break;
      }
    }
    if (!moved) {
      BaselineResult res;
      res.name = "capuchin-greedy";
      return res;
    }
  }
  return finish("capuchin-greedy", std::move(cur), cg);
}

BaselineResult solve_restricted(const CostedGraph& cg, RestrictMode mode, const SolveLimits& limits,
                                const std::vector<Schedule>& warm_starts) {
  const MilpInstance inst = restrict(build_milp(cg), mode);
  std::vector<std::vector<Rational>> starts;
  for (const Schedule& s : warm_starts) starts.push_back(to_assignment(s, cg, inst));
  const SolveResult sol = solve_exact(inst, limits, starts);
  BaselineResult res;
  res.name = to_string(mode);
  res.status = sol.status;
  res.gap = sol.gap;
  res.seconds = sol.seconds;
  if (sol.assignment) {
    Schedule s = from_assignment(*sol.assignment, inst);
    const VerifyReport rep = verify(s, cg);
    if (!rep.ok) throw Error(ErrorKind::kUnverifiedSchedule, rep.summary());
    res.metrics = evaluate(s, cg);
    res.schedule = std::move(s);
  }
  return res;
}

}  // namespace poet
