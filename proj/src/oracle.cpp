#include "poet/oracle.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poet/error.hpp"

namespace poet {

namespace {

using Mask = std::uint32_t;

bool has(Mask m, int i) { return ((m >> i) & 1u) != 0; }

std::int64_t scaled(const Rational& x, const BigInt& scale) {
  const Rational y = x * Rational(scale);
  return to_int64_checked(boost::multiprecision::numerator(y) / boost::multiprecision::denominator(y),
                          "oracle cost");
}

struct Entry {
  std::int64_t energy;
  std::int64_t time;
  int parent_state;
  int parent_entry;
  Mask r;
  Mask m_out;
  Mask m_in;
};

struct State {
  Mask ram;    // resident in RAM at the start of the row
  Mask flash;  // resident on flash at the start of the row
  std::vector<Entry> front;
};

/// Adds (energy, time) to a Pareto front; returns false if dominated.
bool insert(std::vector<Entry>& front, const Entry& e) {
  for (const Entry& f : front) {
    if (f.energy <= e.energy && f.time <= e.time) return false;
  }
  std::erase_if(front, [&](const Entry& f) { return e.energy <= f.energy && e.time <= f.time; });
  front.push_back(e);
  return true;
}

}  // namespace

OracleResult brute_force(const CostedGraph& cg, std::uint64_t cap) {
  const int n = cg.size();
  if (n > 20) throw Error(ErrorKind::kUnsupported, "exhaustive search is limited to 20 nodes");

  std::vector<Mask> dep_mask(n, 0);
  for (int k = 0; k < n; ++k) {
    for (int i : cg.deps(k)) dep_mask[k] |= 1u << i;
  }
  std::vector<Rational> energies;
  std::vector<Rational> times;
  for (int i = 0; i < n; ++i) {
    const NodeCost& c = cg.cost(i);
    energies.insert(energies.end(), {c.phi_compute, c.phi_pagein, c.phi_pageout});
    times.push_back(c.psi_compute);
  }
  const BigInt e_scale = common_denominator(energies);
  const BigInt t_scale = common_denominator(times);
  std::vector<std::int64_t> e_comp(n), e_in(n), e_out(n), t_comp(n);
  for (int i = 0; i < n; ++i) {
    e_comp[i] = scaled(cg.cost(i).phi_compute, e_scale);
    e_in[i] = scaled(cg.cost(i).phi_pagein, e_scale);
    e_out[i] = scaled(cg.cost(i).phi_pageout, e_scale);
    t_comp[i] = cg.budget().deadline ? scaled(cg.cost(i).psi_compute, t_scale) : 0;
  }
  std::optional<std::int64_t> deadline;
  if (cg.budget().deadline) {
    const Rational d = *cg.budget().deadline * Rational(t_scale);
    const BigInt q = boost::multiprecision::numerator(d) / boost::multiprecision::denominator(d);
    deadline = to_int64_checked(q, "oracle deadline");
  }
  const std::optional<std::uint64_t> ram = cg.budget().ram;

  // Peak RAM of one row, releasing each tensor right after its last use.
  auto row_fits = [&](Mask r, Mask ram_in, Mask m_in, Mask m_out, Mask keep) {
    if (!ram) return true;
    std::uint64_t live = cg.mu_static();
    for (int i = 0; i < n; ++i) {
      if (has(ram_in, i)) live += cg.cost(i).mem_out;
      if (has(m_in, i)) live += cg.cost(i).mem_out;
    }
    for (int k = 0; k < n; ++k) {
      if (!has(r, k)) continue;
      live += cg.cost(k).mem_out;
      const Mask later_users = r & ~((2u << k) - 1u);
      for (int i = 0; i <= k; ++i) {
        if (i != k && !has(dep_mask[k], i)) continue;
        if (has(keep, i) || has(m_out, i)) continue;
        bool used_later = false;
        for (int j : cg.users(i)) used_later = used_later || has(later_users, j);
        if (!used_later) live -= cg.cost(i).mem_out;
      }
      if (live > *ram) return false;
    }
    // Steps where nothing runs hold the row's opening usage.
    std::uint64_t opening = cg.mu_static();
    for (int i = 0; i < n; ++i) {
      if (has(ram_in, i)) opening += cg.cost(i).mem_out;
      if (has(m_in, i)) opening += cg.cost(i).mem_out;
    }
    return opening <= *ram;
  };

  OracleResult result;
  std::vector<std::vector<State>> layers(n + 1);
  layers[0].push_back({0, 0, {{0, 0, -1, -1, 0, 0, 0}}});

  for (int t = 0; t < n; ++t) {
    std::map<std::uint64_t, int> index;
    auto& next = layers[t + 1];
    const auto& current = layers[t];
    for (int s = 0; s < static_cast<int>(current.size()); ++s) {
      const Mask ram_in = current[s].ram;
      const Mask flash = current[s].flash;
      const Mask earlier = (1u << t) - 1u;
      // Every compute set containing t, via subset enumeration of the rest.
      for (Mask sub = earlier;; sub = (sub - 1) & earlier) {
        const Mask r = sub | (1u << t);
        bool deps_ok = true;
        for (int k = 0; k <= t && deps_ok; ++k) {
          if (has(r, k) && (dep_mask[k] & ~(r | ram_in)) != 0) deps_ok = false;
        }
        if (deps_ok) {
          std::int64_t row_e = 0;
          std::int64_t row_t = 0;
          for (int k = 0; k <= t; ++k) {
            if (has(r, k)) {
              row_e += e_comp[k];
              row_t += t_comp[k];
            }
          }
          // Page-out candidates first, then tensors that may stay in RAM.
          std::vector<std::pair<int, bool>> choices;
          for (int i = 0; i <= t; ++i) {
            if (has(ram_in & ~flash, i)) choices.emplace_back(i, true);
          }
          if (t + 1 < n) {
            for (int i = 0; i <= t; ++i) {
              if (has(r | ram_in | flash, i)) choices.emplace_back(i, false);
            }
          }
          // RAM use only grows as either set grows, so a failing partial
          // choice prunes all of its extensions.
          auto visit = [&](auto&& self, std::size_t pos, Mask m_out, Mask keep) -> void {
            if (++result.explored > cap) {
              throw Error(ErrorKind::kCapExceeded,
                          "exhaustive search exceeded " + std::to_string(cap) + " transitions");
            }
            const Mask m_in = keep & ~(r | ram_in);
            if (!row_fits(r, ram_in, m_in, m_out, keep)) return;
            if (pos < choices.size()) {
              const auto [i, is_out] = choices[pos];
              self(self, pos + 1, m_out, keep);
              if (is_out) {
                self(self, pos + 1, m_out | (1u << i), keep);
              } else {
                self(self, pos + 1, m_out, keep | (1u << i));
              }
              return;
            }
            std::int64_t energy = row_e;
            for (int i = 0; i <= t; ++i) {
              if (has(m_out, i)) energy += e_out[i];
              if (has(m_in, i)) energy += e_in[i];
            }
            const Mask flash_next = flash | m_out;
            const std::uint64_t key =
                static_cast<std::uint64_t>(keep) | (static_cast<std::uint64_t>(flash_next) << 32);
            int target = -1;
            for (int e = 0; e < static_cast<int>(current[s].front.size()); ++e) {
              const Entry& from = current[s].front[e];
              const std::int64_t time = from.time + row_t;
              if (deadline && time > *deadline) continue;
              if (target < 0) {
                auto [it, inserted] = index.emplace(key, static_cast<int>(next.size()));
                if (inserted) next.push_back({keep, flash_next, {}});
                target = it->second;
              }
              insert(next[target].front,
                     {from.energy + energy, time, s, e, r, m_out, m_in});
            }
          };
          visit(visit, 0, 0, 0);
        }
        if (sub == 0) break;
      }
    }
  }

  int best_state = -1;
  int best_entry = -1;
  const auto& last = layers[n];
  for (int s = 0; s < static_cast<int>(last.size()); ++s) {
    for (int e = 0; e < static_cast<int>(last[s].front.size()); ++e) {
      if (best_state < 0 || last[s].front[e].energy < last[best_state].front[best_entry].energy) {
        best_state = s;
        best_entry = e;
      }
    }
  }
  if (best_state < 0) return result;

  const Entry& best = last[best_state].front[best_entry];
  result.optimal_energy = Rational(BigInt(best.energy)) / Rational(e_scale);
  Schedule w(n);
  int s = best_state;
  int e = best_entry;
  for (int t = n; t > 0; --t) {
    const Entry& entry = layers[t][s].front[e];
    const State& from = layers[t - 1][entry.parent_state];
    for (int i = 0; i < n; ++i) {
      w.r.set(t - 1, i, has(entry.r, i));
      w.m_in.set(t - 1, i, has(entry.m_in, i));
      w.m_out.set(t - 1, i, has(entry.m_out, i));
      w.s_ram.set(t - 1, i, has(from.ram, i));
      w.s_aux.set(t - 1, i, has(from.flash, i));
    }
    s = entry.parent_state;
    e = entry.parent_entry;
  }
  result.witness = std::move(w);
  return result;
}

}  // namespace poet
