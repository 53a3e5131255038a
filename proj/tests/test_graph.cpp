#include <gtest/gtest.h>

#include <random>

#include "chainid/errors.hpp"
#include "chainid/graph.hpp"
#include "chainid/sem.hpp"
#include "support.hpp"

using namespace chainid;

namespace {

// {0,1} -> {2}, {0,1} -> {3}, {2} -> {4}
ChainGraph diamond() {
  return ChainGraph::checked(5, {{0, 1}, {2}, {3}, {4}}, {{0, 2}, {1, 3}, {2, 4}}, {{0, 1}});
}

}  // namespace

TEST(ChainGraph, NormalizesEdges) {
  ChainGraph g(3, {{1, 0}, {2}}, {{1, 2}, {1, 2}}, {{1, 0}});
  EXPECT_EQ(g.components()[0], (VertexSet{0, 1}));
  EXPECT_EQ(g.undirected_edges(), (std::vector<VertexPair>{{0, 1}}));
  EXPECT_EQ(g.directed_edges().size(), 1u);
  EXPECT_TRUE(g.has_undirected(1, 0));
  EXPECT_TRUE(g.has_directed(1, 2));
  EXPECT_FALSE(g.has_directed(2, 1));
}

TEST(ChainGraph, ValidGraphsPass) {
  EXPECT_TRUE(validate(diamond()));
  EXPECT_TRUE(validate(ChainGraph(1, {{0}}, {}, {})));
}

TEST(ChainGraph, RejectsBadPartitions) {
  EXPECT_FALSE(validate(ChainGraph(3, {{0, 1}}, {}, {{0, 1}})));          // vertex 2 uncovered
  EXPECT_FALSE(validate(ChainGraph(2, {{0, 1}, {1}}, {}, {{0, 1}})));     // overlap
  EXPECT_FALSE(validate(ChainGraph(2, {{0}, {}, {1}}, {}, {})));          // empty component
  EXPECT_FALSE(validate(ChainGraph(2, {{0, 5}}, {}, {})));                // out of range
}

TEST(ChainGraph, RejectsBadEdges) {
  EXPECT_FALSE(validate(ChainGraph(2, {{0}, {1}}, {}, {{0, 1}})));        // undirected across components
  EXPECT_FALSE(validate(ChainGraph(2, {{0, 1}}, {{0, 1}}, {{0, 1}})));    // directed inside a component
  EXPECT_FALSE(validate(ChainGraph(2, {{0, 1}}, {}, {})));                // component not connected
  EXPECT_FALSE(validate(ChainGraph(2, {{0}, {1}}, {{0, 1}, {1, 0}}, {}))); // directed cycle
  EXPECT_FALSE(validate(ChainGraph(1, {{0}}, {}, {{0, 0}})));             // self loop
}

TEST(ChainGraph, SemiDirectedCycleThroughComponentIsRejected) {
  // 0 -> 2, 2 -> 1 with 0 - 1 is a semi-directed cycle.
  EXPECT_FALSE(validate(ChainGraph(3, {{0, 1}, {2}}, {{0, 2}, {2, 1}}, {{0, 1}})));
}

TEST(ChainGraph, CheckedThrows) {
  EXPECT_THROW(ChainGraph::checked(2, {{0}, {1}}, {{0, 1}, {1, 0}}, {}), ArgumentError);
}

TEST(ChainGraph, FromEdgesDerivesComponents) {
  const auto g = ChainGraph::from_edges(5, {{1, 3}}, {{0, 1}, {3, 4}});
  ASSERT_EQ(g.n_components(), 3);
  EXPECT_EQ(g.component(0), (VertexSet{0, 1}));
  EXPECT_EQ(g.component(1), (VertexSet{2}));
  EXPECT_EQ(g.component(2), (VertexSet{3, 4}));
  EXPECT_EQ(g.component_of(4), 2);
  EXPECT_TRUE(validate(g));
}

TEST(ChainGraph, ParentsAndAncestral) {
  const auto g = diamond();
  EXPECT_EQ(parents_of(g, 1), (VertexSet{0}));
  EXPECT_EQ(parent_components(g, 3), (std::vector<int>{1}));
  EXPECT_TRUE(is_ancestral(g, std::vector<int>{0, 1}));
  EXPECT_FALSE(is_ancestral(g, std::vector<int>{1}));
  EXPECT_TRUE(is_ancestral(g, std::vector<int>{}));
}

TEST(ChainGraph, TopologicalOrderChecks) {
  const auto g = diamond();
  EXPECT_TRUE(is_topological(g, {{0, 1, 2, 3}}));
  EXPECT_TRUE(is_topological(g, {{0, 2, 1, 3}}));
  EXPECT_FALSE(is_topological(g, {{1, 0, 2, 3}}));
  EXPECT_FALSE(is_topological(g, {{0, 1, 2}}));        // not a permutation
  EXPECT_FALSE(is_topological(g, {{0, 1, 1, 3}}));
  EXPECT_EQ(topological_order(g).sequence, (std::vector<int>{0, 1, 2, 3}));
}

TEST(ChainGraph, AllOrdersMatchPermutationFilter) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 6);
    const int c = 1 + static_cast<int>(gen() % n);
    const auto g = generate_chain_graph(n, c, 1.5, gen());
    ASSERT_TRUE(validate(g)) << validate(g).violation;
    std::vector<std::vector<int>> listed;
    for (const auto& o : topological_orders(g)) listed.push_back(o.sequence);
    EXPECT_EQ(listed, testsupport::permutation_orders(g));
    for (const auto& o : topological_orders(g)) EXPECT_TRUE(is_topological(g, o));
  }
}

TEST(ChainGraph, OrderEnumerationLimit) {
  std::vector<VertexSet> comps;
  for (int i = 0; i < 9; ++i) comps.push_back({i});
  const ChainGraph empty(9, comps, {}, {});
  EXPECT_THROW(topological_orders(empty, 100), CapabilityError);
  EXPECT_EQ(topological_orders(empty).size(), 362880u);
}

TEST(ChainGraph, ShdBasics) {
  const auto g = diamond();
  EXPECT_EQ(shd(g, g), 0);
  // Reversed edge counts once, missing edge once, undirected vs directed once.
  const auto h = ChainGraph::from_edges(5, {{2, 0}, {2, 4}}, {{0, 1}, {1, 3}});
  EXPECT_EQ(shd(g, h), 2);
  EXPECT_EQ(shd(g, h), testsupport::matrix_shd(g, h));
  EXPECT_THROW(shd(g, ChainGraph(4, {{0, 1, 2, 3}}, {}, {})), ArgumentError);
}

TEST(ChainGraph, ShdMatchesMatrixOracle) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 10);
    const auto a = generate_chain_graph(n, 1 + static_cast<int>(gen() % n), 2.0, gen());
    const auto b = generate_chain_graph(n, 1 + static_cast<int>(gen() % n), 2.0, gen());
    EXPECT_EQ(shd(a, b), testsupport::matrix_shd(a, b));
    EXPECT_EQ(shd(a, b), shd(b, a));
  }
}

TEST(ChainGraph, SamePartitionIgnoresOrder) {
  const std::vector<VertexSet> a{{0, 1}, {2}};
  const std::vector<VertexSet> b{{2}, {0, 1}};
  const std::vector<VertexSet> c{{0}, {1, 2}};
  EXPECT_TRUE(same_partition(a, b));
  EXPECT_FALSE(same_partition(a, c));
}
