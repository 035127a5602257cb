#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "poet/error.hpp"
#include "poet/graph.hpp"
#include "support.hpp"

namespace poet {
namespace {

using Edge = std::pair<NodeId, NodeId>;

std::set<Edge> edge_set(const TrainingGraph& g) { return {g.edges.begin(), g.edges.end()}; }

NodeId id_of(const TrainingGraph& g, const std::string& label) {
  for (const Node& n : g.nodes) {
    if (n.label == label) return n.id;
  }
  ADD_FAILURE() << "no node " << label;
  return -1;
}

TEST(Graph, ChainDepthTwoMatchesGradientRule) {
  const TrainingGraph g = test::chain(2);
  ASSERT_EQ(g.nodes.size(), 5u);
  std::vector<std::string> labels;
  for (NodeId id : g.order) {
    for (const Node& n : g.nodes) {
      if (n.id == id) labels.push_back(n.label);
    }
  }
  EXPECT_EQ(labels, (std::vector<std::string>{"f1", "f2", "loss", "b2", "b1"}));
  auto e = [&](const char* a, const char* b) { return Edge{id_of(g, a), id_of(g, b)}; };
  const std::set<Edge> expected = {e("f1", "f2"), e("f2", "loss"), e("loss", "b2"), e("f2", "b2"),
                                   e("f1", "b2"), e("b2", "b1"),   e("f1", "b1")};
  EXPECT_EQ(edge_set(g), expected);
}

TEST(Graph, ChainDepthOne) {
  const TrainingGraph g = test::chain(1);
  ASSERT_EQ(g.nodes.size(), 3u);
  EXPECT_EQ(g.order, (std::vector<NodeId>{1, 2, 3}));
  EXPECT_TRUE(validate(g).ok);
}

TEST(Graph, ChainCountsMatchIndependentRecount) {
  for (int d = 1; d <= 24; ++d) {
    const TrainingGraph g = test::chain(d);
    EXPECT_EQ(g.nodes.size(), static_cast<std::size_t>(2 * d + 1));
    // Forward links d-1, f_d->loss, loss->b_d, gradient links d-1, own
    // output d, layer input d-1.
    const std::size_t expected = (d - 1) + 1 + 1 + (d - 1) + d + (d - 1);
    EXPECT_EQ(g.edges.size(), expected) << "depth " << d;
    EXPECT_TRUE(validate(g).ok);
    std::vector<NodeId> sorted = g.order;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 2 * d + 1; ++k) EXPECT_EQ(sorted[k], k + 1);
  }
}

TEST(Graph, SkipChainMirrorsSkipEdge) {
  GraphSpec spec;
  spec.kind = GraphKind::kSkipChain;
  spec.depth = 4;
  spec.skips = {{1, 3}};
  const TrainingGraph g = build_training_graph(spec);
  const TrainingGraph plain = test::chain(4);
  const std::set<Edge> skip = edge_set(g);
  std::set<Edge> extra;
  for (const Edge& e : skip) {
    if (!edge_set(plain).count(e)) extra.insert(e);
  }
  EXPECT_TRUE(extra.count({id_of(g, "f1"), id_of(g, "f3")}));
  EXPECT_TRUE(extra.count({id_of(g, "f1"), id_of(g, "b3")}));
  EXPECT_TRUE(validate(g).ok);
}

TEST(Graph, AttentionBlockIsValid) {
  for (int blocks = 1; blocks <= 3; ++blocks) {
    GraphSpec spec;
    spec.kind = GraphKind::kAttentionBlock;
    spec.depth = blocks;
    const TrainingGraph g = build_training_graph(spec);
    EXPECT_TRUE(validate(g).ok) << validate(g).summary();
  }
}

TEST(Graph, ZeroDepthRejected) {
  GraphSpec spec;
  spec.depth = 0;
  try {
    build_training_graph(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidSpec);
  }
}

TEST(Graph, OrderViolationFlagged) {
  TrainingGraph g = test::chain(2);
  g.edges.push_back({5, 2});
  const ValidationReport r = validate(g);
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(r.has(Issue::kOrderViolation));
}

TEST(Graph, TwoCycleFlagged) {
  TrainingGraph g = test::chain(2);
  g.edges.push_back({2, 1});
  const ValidationReport r = validate(g);
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(r.has(Issue::kCycle));
}

TEST(Graph, BrokenOrderFlagged) {
  TrainingGraph g = test::chain(2);
  g.order.pop_back();
  EXPECT_TRUE(validate(g).has(Issue::kOrderNotPermutation));
  TrainingGraph h = test::chain(2);
  h.edges.push_back({1, 99});
  EXPECT_TRUE(validate(h).has(Issue::kUnknownNode));
}

TEST(Graph, JsonRoundTripIsLossless) {
  GraphSpec spec;
  spec.kind = GraphKind::kSkipChain;
  spec.depth = 5;
  const TrainingGraph g = build_training_graph(spec);
  EXPECT_EQ(graph_from_json(graph_to_json(g)), g);
  const auto path = std::filesystem::temp_directory_path() / "poet_graph_rt.json";
  save_graph(g, path);
  EXPECT_EQ(load_graph(path), g);
  EXPECT_EQ(graph_hash(load_graph(path)), graph_hash(g));
  std::filesystem::remove(path);
}

TEST(Graph, TopologyIndexesByOrder) {
  const TrainingGraph g = test::chain(3);
  const Topology topo(g);
  ASSERT_EQ(topo.size(), 7);
  EXPECT_EQ(topo.label(3), "loss");
  // b3 consumes loss, f3 and f2.
  EXPECT_EQ(topo.deps(4), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(topo.users(0), (std::vector<int>{1, 5, 6}));
  EXPECT_THROW(topo.index_of(1234), Error);
}

TEST(Graph, TagParsing) {
  EXPECT_EQ(parse_tags("hc"), (std::vector<OpClass>{OpClass::kHeavy, OpClass::kCheap}));
  EXPECT_THROW(parse_tags("hx"), Error);
  EXPECT_EQ(parse_graph_kind("attention"), GraphKind::kAttentionBlock);
  EXPECT_EQ(to_string(GraphKind::kSkipChain), "skip-chain");
}

}  // namespace
}  // namespace poet
