#include "poet/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "io_util.hpp"
#include "poet/error.hpp"

namespace poet {

bool ValidationReport::has(Issue issue) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& v) { return v.issue == issue; });
}

std::string ValidationReport::summary() const {
  if (ok) return "ok";
  std::ostringstream ss;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i) ss << "; ";
    ss << issues[i].message;
  }
  return ss.str();
}

ValidationReport validate(const TrainingGraph& g) {
  ValidationReport report;
  auto fail = [&](Issue issue, std::string message) {
    report.ok = false;
    report.issues.push_back({issue, std::move(message)});
  };

  if (g.nodes.empty()) {
    fail(Issue::kEmpty, "graph has no nodes");
    return report;
  }

  std::unordered_map<NodeId, int> known;
  for (const Node& node : g.nodes) {
    if (!known.emplace(node.id, 0).second) {
      fail(Issue::kDuplicateId, "duplicate node id " + std::to_string(node.id));
    }
  }

  // Order must be a bijection onto the node set.
  std::unordered_map<NodeId, int> position;
  bool order_ok = g.order.size() == known.size();
  for (std::size_t p = 0; p < g.order.size(); ++p) {
    const NodeId id = g.order[p];
    if (!known.count(id)) {
      fail(Issue::kUnknownNode, "order names unknown node " + std::to_string(id));
      order_ok = false;
    } else if (!position.emplace(id, static_cast<int>(p)).second) {
      fail(Issue::kOrderNotPermutation, "order repeats node " + std::to_string(id));
      order_ok = false;
    }
  }
  if (!order_ok && !report.has(Issue::kOrderNotPermutation)) {
    fail(Issue::kOrderNotPermutation, "order is not a permutation of the node ids");
  }

  bool edges_known = true;
  for (const auto& [from, to] : g.edges) {
    if (!known.count(from) || !known.count(to)) {
      fail(Issue::kUnknownNode, "edge " + std::to_string(from) + "->" + std::to_string(to) +
                                    " references an unknown node");
      edges_known = false;
      continue;
    }
    if (from == to) {
      fail(Issue::kSelfLoop, "self loop on node " + std::to_string(from));
      continue;
    }
    if (order_ok && position[from] >= position[to]) {
      fail(Issue::kOrderViolation,
           "edge " + std::to_string(from) + "->" + std::to_string(to) + " goes from index " +
               std::to_string(position[from] + 1) + " to index " +
               std::to_string(position[to] + 1));
    }
  }
  if (!edges_known) return report;

  // Kahn's algorithm, independent of the declared order.
  std::unordered_map<NodeId, int> indegree;
  std::unordered_map<NodeId, std::vector<NodeId>> out;
  for (const auto& [id, unused] : known) indegree[id] = 0;
  for (const auto& [from, to] : g.edges) {
    if (from == to) continue;
    ++indegree[to];
    out[from].push_back(to);
  }
  std::queue<NodeId> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push(id);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const NodeId id = ready.front();
    ready.pop();
    ++visited;
    for (NodeId next : out[id]) {
      if (--indegree[next] == 0) ready.push(next);
    }
  }
  if (visited != known.size()) fail(Issue::kCycle, "graph contains a cycle");

  std::size_t sinks = 0;
  for (const auto& [id, unused] : known) {
    if (out[id].empty()) ++sinks;
  }
  if (sinks != 1) {
    fail(Issue::kSinkCount, "expected exactly one node without outgoing edges, found " +
                                std::to_string(sinks));
  }
  return report;
}

Topology::Topology(const TrainingGraph& g) {
  const ValidationReport report = validate(g);
  if (!report.ok) throw Error(ErrorKind::kInvalidGraph, report.summary());

  const int n = static_cast<int>(g.order.size());
  std::unordered_map<NodeId, const Node*> by_id;
  for (const Node& node : g.nodes) by_id[node.id] = &node;
  ids_ = g.order;
  labels_.resize(n);
  deps_.resize(n);
  users_.resize(n);
  for (int k = 0; k < n; ++k) labels_[k] = by_id[ids_[k]]->label;

  std::set<std::pair<int, int>> unique_edges;
  for (const auto& [from, to] : g.edges) unique_edges.emplace(index_of(from), index_of(to));
  for (const auto& [i, j] : unique_edges) {
    deps_[j].push_back(i);
    users_[i].push_back(j);
  }
  for (auto& d : deps_) std::sort(d.begin(), d.end());
  for (auto& u : users_) std::sort(u.begin(), u.end());
  edge_count_ = unique_edges.size();
}

int Topology::index_of(NodeId id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw Error(ErrorKind::kInvalidGraph, "unknown node " + std::to_string(id));
  return static_cast<int>(it - ids_.begin());
}

GraphKind parse_graph_kind(const std::string& text) {
  if (text == "chain") return GraphKind::kChain;
  if (text == "skip-chain") return GraphKind::kSkipChain;
  if (text == "attention-block" || text == "attention") return GraphKind::kAttentionBlock;
  throw Error(ErrorKind::kInvalidSpec, "unknown graph kind '" + text + "'");
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::kChain: return "chain";
    case GraphKind::kSkipChain: return "skip-chain";
    case GraphKind::kAttentionBlock: return "attention-block";
  }
  return "chain";
}

std::vector<OpClass> parse_tags(const std::string& text) {
  std::vector<OpClass> tags;
  for (char c : text) {
    if (c == 'h' || c == 'H') {
      tags.push_back(OpClass::kHeavy);
    } else if (c == 'c' || c == 'C') {
      tags.push_back(OpClass::kCheap);
    } else {
      throw Error(ErrorKind::kInvalidSpec, std::string("unknown layer tag '") + c + "'");
    }
  }
  return tags;
}

namespace {

struct ForwardOp {
  std::string label;
  std::vector<int> inputs;  // indices into the forward list
};

constexpr const char* kAttentionOps[] = {"q", "k", "v", "scores", "softmax", "context", "out"};

int forward_count(GraphKind kind, int depth) {
  return kind == GraphKind::kAttentionBlock ? 1 + 7 * depth : depth;
}

std::vector<ForwardOp> forward_ops(const GraphSpec& spec) {
  std::vector<ForwardOp> ops;
  const int d = spec.depth;
  switch (spec.kind) {
    case GraphKind::kChain:
    case GraphKind::kSkipChain: {
      for (int i = 0; i < d; ++i) {
        ForwardOp op{"f" + std::to_string(i + 1), {}};
        if (i > 0) op.inputs.push_back(i - 1);
        ops.push_back(op);
      }
      if (spec.kind == GraphKind::kSkipChain) {
        std::vector<std::pair<int, int>> skips = spec.skips;
        if (skips.empty()) {
          for (int a = 1; a + 2 <= d; a += 2) skips.emplace_back(a, a + 2);
        }
        for (const auto& [from, to] : skips) {
          if (from < 1 || to > d || to < from + 2) {
            throw Error(ErrorKind::kInvalidSpec, "skip " + std::to_string(from) + "->" +
                                                     std::to_string(to) + " is not a skip");
          }
          auto& inputs = ops[to - 1].inputs;
          if (std::find(inputs.begin(), inputs.end(), from - 1) == inputs.end()) {
            inputs.push_back(from - 1);
          }
        }
        for (auto& op : ops) std::sort(op.inputs.begin(), op.inputs.end());
      }
      break;
    }
    case GraphKind::kAttentionBlock: {
      ops.push_back({"embed", {}});
      int x = 0;
      for (int b = 1; b <= d; ++b) {
        const std::string s = std::to_string(b);
        const int base = static_cast<int>(ops.size());
        ops.push_back({std::string(kAttentionOps[0]) + s, {x}});
        ops.push_back({std::string(kAttentionOps[1]) + s, {x}});
        ops.push_back({std::string(kAttentionOps[2]) + s, {x}});
        ops.push_back({std::string(kAttentionOps[3]) + s, {base, base + 1}});
        ops.push_back({std::string(kAttentionOps[4]) + s, {base + 3}});
        ops.push_back({std::string(kAttentionOps[5]) + s, {base + 2, base + 4}});
        ops.push_back({std::string(kAttentionOps[6]) + s, {x, base + 5}});
        x = base + 6;
      }
      break;
    }
  }
  return ops;
}

}  // namespace

std::vector<OpClass> default_tags(GraphKind kind, int depth) {
  std::vector<OpClass> tags;
  if (kind == GraphKind::kAttentionBlock) {
    tags.push_back(OpClass::kHeavy);
    for (int b = 0; b < depth; ++b) {
      for (const char* op : kAttentionOps) {
        tags.push_back(std::string(op) == "softmax" ? OpClass::kCheap : OpClass::kHeavy);
      }
    }
    return tags;
  }
  // Period-six pattern: layers 2 and 3 cheap, 5 and 6 heavy in every window.
  static constexpr char kPattern[] = "hcchhh";
  for (int i = 0; i < depth; ++i) {
    tags.push_back(kPattern[i % 6] == 'c' ? OpClass::kCheap : OpClass::kHeavy);
  }
  return tags;
}

TrainingGraph build_training_graph(const GraphSpec& spec) {
  if (spec.depth < 1) throw Error(ErrorKind::kInvalidSpec, "depth must be at least 1");
  if (spec.kind != GraphKind::kSkipChain && !spec.skips.empty()) {
    throw Error(ErrorKind::kInvalidSpec, "skips are only valid for skip-chain graphs");
  }
  const int layers = forward_count(spec.kind, spec.depth);
  std::vector<OpClass> tags = spec.tags.empty() ? default_tags(spec.kind, spec.depth) : spec.tags;
  if (static_cast<int>(tags.size()) != layers) {
    throw Error(ErrorKind::kInvalidSpec, "expected " + std::to_string(layers) + " layer tags, got " +
                                             std::to_string(tags.size()));
  }

  const std::vector<ForwardOp> ops = forward_ops(spec);
  const int f = static_cast<int>(ops.size());
  // Ids follow execution order: forwards 1..f, loss f+1, backward of forward
  // layer i at 2f+2-i.
  auto fwd_id = [](int i) { return static_cast<NodeId>(i + 1); };
  const NodeId loss_id = f + 1;
  auto bwd_id = [f](int i) { return static_cast<NodeId>(2 * f + 1 - i); };

  std::vector<std::vector<int>> consumers(f);
  for (int v = 0; v < f; ++v) {
    for (int u : ops[v].inputs) consumers[u].push_back(v);
  }
  std::vector<bool> feeds_loss(f, false);
  for (int v = 0; v < f; ++v) feeds_loss[v] = consumers[v].empty();

  TrainingGraph g;
  for (int v = 0; v < f; ++v) {
    g.nodes.push_back({fwd_id(v), ops[v].label, NodeRole::kForward, v + 1, tags[v]});
  }
  g.nodes.push_back({loss_id, "loss", NodeRole::kLoss, 0, std::nullopt});
  for (int v = f - 1; v >= 0; --v) {
    const std::string label = spec.kind == GraphKind::kAttentionBlock
                                  ? "grad_" + ops[v].label
                                  : "b" + std::to_string(v + 1);
    g.nodes.push_back({bwd_id(v), label, NodeRole::kBackward, v + 1, tags[v]});
  }
  for (const Node& node : g.nodes) g.order.push_back(node.id);

  std::set<std::pair<NodeId, NodeId>> edges;
  for (int v = 0; v < f; ++v) {
    for (int u : ops[v].inputs) edges.emplace(fwd_id(u), fwd_id(v));
    if (feeds_loss[v]) edges.emplace(fwd_id(v), loss_id);
  }
  // Gradient of layer v: incoming gradients, the layer's inputs, its output.
  for (int v = 0; v < f; ++v) {
    if (feeds_loss[v]) edges.emplace(loss_id, bwd_id(v));
    for (int c : consumers[v]) edges.emplace(bwd_id(c), bwd_id(v));
    for (int u : ops[v].inputs) edges.emplace(fwd_id(u), bwd_id(v));
    edges.emplace(fwd_id(v), bwd_id(v));
  }
  // Consumer-major listing keeps files readable: edges grouped by target.
  std::vector<std::pair<NodeId, NodeId>> listed(edges.begin(), edges.end());
  std::stable_sort(listed.begin(), listed.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  g.edges = std::move(listed);
  return g;
}

namespace {

const char* role_name(NodeRole role) {
  switch (role) {
    case NodeRole::kForward: return "forward";
    case NodeRole::kLoss: return "loss";
    case NodeRole::kBackward: return "backward";
    case NodeRole::kOther: return "other";
  }
  return "other";
}

NodeRole parse_role(const std::string& s) {
  if (s == "forward") return NodeRole::kForward;
  if (s == "loss") return NodeRole::kLoss;
  if (s == "backward") return NodeRole::kBackward;
  if (s == "other") return NodeRole::kOther;
  throw Error(ErrorKind::kParse, "unknown node role '" + s + "'");
}

}  // namespace

nlohmann::json graph_to_json(const TrainingGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& node : g.nodes) {
    nlohmann::json j = {{"id", node.id}, {"label", node.label}};
    if (node.role != NodeRole::kOther) j["role"] = role_name(node.role);
    if (node.layer != 0) j["layer"] = node.layer;
    if (node.op_class) j["class"] = *node.op_class == OpClass::kHeavy ? "heavy" : "cheap";
    nodes.push_back(j);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [from, to] : g.edges) edges.push_back({from, to});
  return {{"nodes", nodes}, {"edges", edges}, {"order", g.order}};
}

TrainingGraph graph_from_json(const nlohmann::json& doc) {
  try {
    TrainingGraph g;
    for (const auto& j : doc.at("nodes")) {
      Node node;
      node.id = j.at("id").get<NodeId>();
      node.label = j.value("label", std::to_string(node.id));
      if (j.contains("role")) node.role = parse_role(j.at("role").get<std::string>());
      node.layer = j.value("layer", 0);
      if (j.contains("class")) {
        const std::string c = j.at("class").get<std::string>();
        if (c == "heavy") {
          node.op_class = OpClass::kHeavy;
        } else if (c == "cheap") {
          node.op_class = OpClass::kCheap;
        } else {
          throw Error(ErrorKind::kParse, "unknown op class '" + c + "'");
        }
      }
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorKind::kParse, "edge must be [from, to]");
      g.edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    }
    g.order = doc.at("order").get<std::vector<NodeId>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("graph document: ") + e.what());
  }
}

void save_graph(const TrainingGraph& g, const std::filesystem::path& path) {
  detail::write_text_file(path, graph_to_json(g).dump(2) + "\n");
}

TrainingGraph load_graph(const std::filesystem::path& path) {
  return graph_from_json(detail::parse_json_text(detail::read_text_file(path), path.string()));
}

std::string graph_hash(const TrainingGraph& g) {
  const std::string canonical = graph_to_json(g).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace poet
