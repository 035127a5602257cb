#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "poet/costmodel.hpp"
#include "poet/graph.hpp"
#include "poet/schedule.hpp"

namespace poet::test {

inline TrainingGraph chain(int depth, const std::string& tags = "") {
  GraphSpec spec;
  spec.depth = depth;
  if (!tags.empty()) spec.tags = parse_tags(tags);
  return build_training_graph(spec);
}

/// Every cost 1 (joule or second), every tensor `mem` bytes.
inline CostProfile unit_profile(const TrainingGraph& g, std::uint64_t mem = 1,
                                std::uint64_t mu_static = 0) {
  CostProfile p;
  p.mu_static = mu_static;
  p.device_label = "unit";
  for (const Node& n : g.nodes) {
    p.ids.push_back(n.id);
    p.costs.push_back(NodeCost{1, 1, 1, 1, 1, 1, mem});
  }
  return p;
}

inline std::uint64_t diagonal_peak(const CostedGraph& cg) {
  const CostedGraph open = cg.with_budget(Budget{});
  return evaluate(diagonal_schedule(open), open).peak_ram;
}

/// mu_static + frac * (diagonal peak - mu_static), rounded down.
inline std::uint64_t ram_between(const CostedGraph& cg, const Rational& frac) {
  const std::uint64_t ms = cg.mu_static();
  const Rational v = Rational(ms) + frac * Rational(diagonal_peak(cg) - ms);
  return BigInt(boost::multiprecision::numerator(v) / boost::multiprecision::denominator(v))
      .convert_to<std::uint64_t>();
}

/// Synthetic instance whose RAM budget sits at `ram_frac` of the way from
/// static memory to the diagonal peak and whose deadline, when given, is
/// `deadline_frac` times the total compute time.
inline CostedGraph synth_instance(const GraphSpec& spec, const std::string& regime,
                                  std::uint64_t seed, const Rational& ram_frac,
                                  std::optional<Rational> deadline_frac = std::nullopt) {
  const TrainingGraph g = build_training_graph(spec);
  const CostedGraph open = attach(g, synth_profile(g, regime, seed), Budget{});
  Budget b;
  b.ram = ram_between(open, ram_frac);
  if (deadline_frac) b.deadline = *deadline_frac * open.compute_time_floor();
  return open.with_budget(b);
}

inline GraphSpec chain_spec(int depth, const std::string& tags = "") {
  GraphSpec spec;
  spec.depth = depth;
  if (!tags.empty()) spec.tags = parse_tags(tags);
  return spec;
}

/// The six-layer chain whose cheap layers are far cheaper to recompute than
/// to page and whose heavy layers are the reverse.
inline CostedGraph tradeoff_instance(Budget budget) {
  const TrainingGraph g = chain(6, "chhccc");
  return attach(g, synth_profile(g, "tradeoff", 0), budget);
}

}  // namespace poet::test
