#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "poet/graph.hpp"
#include "poet/numeric.hpp"

namespace poet {

/// Energy in joules, time in seconds, sizes in bytes.
struct NodeCost {
  Rational phi_compute;
  Rational phi_pagein;
  Rational phi_pageout;
  Rational psi_compute;
  Rational psi_pagein;
  Rational psi_pageout;
  std::uint64_t mem_out = 0;

  bool operator==(const NodeCost&) const = default;
};

struct CostProfile {
  std::vector<NodeId> ids;
  std::vector<NodeCost> costs;  // parallel to ids
  std::uint64_t mu_static = 0;
  std::string device_label;

  const NodeCost* find(NodeId id) const;
  bool operator==(const CostProfile&) const = default;
};

struct LoadedProfile {
  CostProfile profile;
  std::vector<std::string> warnings;
};

/// Field names a profile document must carry.
inline constexpr const char* kProfileFields[] = {"phi_compute", "phi_pagein",  "phi_pageout",
                                                 "psi_compute", "psi_pagein",  "psi_pageout",
                                                 "mem_out"};

/// Validates and ingests a profile document. Throws Error(kInvalidProfile)
/// naming the offending field; unknown top-level fields become warnings.
LoadedProfile load_profile(const nlohmann::json& doc);
LoadedProfile load_profile_file(const std::filesystem::path& path);
nlohmann::json profile_to_json(const CostProfile& p);
void save_profile(const CostProfile& p, const std::filesystem::path& path);

/// RAM and deadline budgets; nullopt means unbounded.
struct Budget {
  std::optional<std::uint64_t> ram;
  std::optional<Rational> deadline;
};

/// A validated graph joined with per-node costs (indexed by execution order)
/// and a budget.
class CostedGraph {
 public:
  CostedGraph(TrainingGraph graph, Topology topology, std::vector<NodeCost> costs,
              std::uint64_t mu_static, Budget budget, std::string device_label);

  int size() const { return topology_.size(); }
  const TrainingGraph& graph() const { return graph_; }
  const Topology& topology() const { return topology_; }
  const std::vector<int>& deps(int k) const { return topology_.deps(k); }
  const std::vector<int>& users(int i) const { return topology_.users(i); }
  const NodeCost& cost(int k) const { return costs_[k]; }
  const std::vector<NodeCost>& costs() const { return costs_; }
  std::uint64_t mu_static() const { return mu_static_; }
  const Budget& budget() const { return budget_; }
  const std::string& device_label() const { return device_label_; }

  /// Same graph and costs under a different budget (checked like attach).
  CostedGraph with_budget(Budget budget) const;

  /// Sum of phi_compute: the energy of computing every node exactly once.
  Rational energy_floor() const;
  /// Sum of psi_compute over all nodes.
  Rational compute_time_floor() const;
  /// mu_static plus every output size: always enough RAM for the diagonal
  /// schedule.
  std::uint64_t full_memory() const;

  /// Cost profile keyed by node id, in execution order.
  CostProfile profile() const;

 private:
  TrainingGraph graph_;
  Topology topology_;
  std::vector<NodeCost> costs_;
  std::uint64_t mu_static_;
  Budget budget_;
  std::string device_label_;
};

/// Throws Error(kInvalidGraph) if validate(g) fails, Error(kCoverage) listing
/// nodes the profile lacks, Error(kInfeasibleBudget) when ram <= mu_static or
/// deadline <= 0.
CostedGraph attach(const TrainingGraph& g, const CostProfile& p, Budget budget);

/// Synthetic regimes: "uniform", "conv-like", "mixed" (alias
/// "mixed-cheap-expensive"), "device:M0|M4|A72|TX2" and "tradeoff". The
/// last one ignores the seed: cheap layers cost far less to recompute than
/// to page and heavy layers the reverse, so good schedules need both.
CostProfile synth_profile(const TrainingGraph& g, const std::string& regime, std::uint64_t seed);

}  // namespace poet
