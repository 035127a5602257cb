#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace poet {

using NodeId = std::int64_t;

enum class NodeRole { kForward, kLoss, kBackward, kOther };

/// Operator cost class used by synthetic profile generation.
enum class OpClass { kHeavy, kCheap };

struct Node {
  NodeId id = 0;
  std::string label;
  NodeRole role = NodeRole::kOther;
  int layer = 0;  // 1-based forward layer for forward/backward nodes, 0 otherwise
  std::optional<OpClass> op_class;

  bool operator==(const Node&) const = default;
};

/// Raw training graph as loaded or generated. Nothing is enforced on
/// construction; call validate() before handing it to anything downstream.
struct TrainingGraph {
  std::vector<Node> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;  // (producer, consumer)
  std::vector<NodeId> order;                     // execution order of node ids

  bool operator==(const TrainingGraph&) const = default;
};

enum class GraphKind { kChain, kSkipChain, kAttentionBlock };

struct GraphSpec {
  GraphKind kind = GraphKind::kChain;
  /// Layer count for chains, block count for attention graphs.
  int depth = 1;
  /// One tag per forward layer; empty selects the default pattern for the kind.
  std::vector<OpClass> tags;
  /// Skip connections (from_layer, to_layer), 1-based. Only for skip-chains;
  /// empty selects (i, i+2) for odd i.
  std::vector<std::pair<int, int>> skips;
};

enum class Issue {
  kEmpty,
  kDuplicateId,
  kUnknownNode,
  kOrderNotPermutation,
  kOrderViolation,
  kCycle,
  kSinkCount,
  kSelfLoop,
};

struct ValidationIssue {
  Issue issue;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  bool has(Issue issue) const;
  std::string summary() const;
};

ValidationReport validate(const TrainingGraph& g);

/// Index-based view of a validated graph. Index k is the node's position in
/// the execution order (0-based); deps and users are sorted ascending.
class Topology {
 public:
  /// Throws Error(kInvalidGraph) when validate(g) fails.
  explicit Topology(const TrainingGraph& g);

  int size() const { return static_cast<int>(ids_.size()); }
  NodeId id(int k) const { return ids_[k]; }
  const std::string& label(int k) const { return labels_[k]; }
  const std::vector<int>& deps(int k) const { return deps_[k]; }
  const std::vector<int>& users(int i) const { return users_[i]; }
  int index_of(NodeId id) const;
  std::size_t edge_count() const { return edge_count_; }

 private:
  std::vector<NodeId> ids_;
  std::vector<std::string> labels_;
  std::vector<std::vector<int>> deps_;
  std::vector<std::vector<int>> users_;
  std::size_t edge_count_ = 0;
};

/// Forward nodes per layer, one loss node, and one backward node per layer,
/// ordered forward, loss, backward (reverse layer order).
TrainingGraph build_training_graph(const GraphSpec& spec);

GraphKind parse_graph_kind(const std::string& text);
std::string to_string(GraphKind kind);
/// Parses a tag string such as "hcchhh" ('h' heavy, 'c' cheap).
std::vector<OpClass> parse_tags(const std::string& text);
std::vector<OpClass> default_tags(GraphKind kind, int depth);

nlohmann::json graph_to_json(const TrainingGraph& g);
TrainingGraph graph_from_json(const nlohmann::json& doc);
void save_graph(const TrainingGraph& g, const std::filesystem::path& path);
TrainingGraph load_graph(const std::filesystem::path& path);

/// 64-bit FNV-1a over the canonical JSON form, as 16 hex digits.
std::string graph_hash(const TrainingGraph& g);

}  // namespace poet
