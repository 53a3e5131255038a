#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chainid {

using VertexSet = std::vector<int>;
using VertexPair = std::pair<int, int>;

// AMP chain graph over vertices 0..n-1.
//
// Components are stored as sorted vertex lists and a component's index is its
// position in `components()`. Directed edges are (from, to) pairs; undirected
// edges are stored normalized as (min, max). Edge lists are kept sorted and
// deduplicated. The constructor does not check the chain-graph invariants, use
// `validate` or the `checked` factory for that.
class ChainGraph {
 public:
  ChainGraph() = default;
  ChainGraph(int n_vertices, std::vector<VertexSet> components, std::vector<VertexPair> directed_edges,
             std::vector<VertexPair> undirected_edges);

  // Builds the graph and throws ArgumentError if any invariant fails, including
  // a declared partition that disagrees with the undirected connectivity.
  static ChainGraph checked(int n_vertices, std::vector<VertexSet> components,
                            std::vector<VertexPair> directed_edges, std::vector<VertexPair> undirected_edges);

  // Derives the (maximal) chain components from undirected connectivity.
  // Components are ordered by their smallest vertex.
  static ChainGraph from_edges(int n_vertices, std::vector<VertexPair> directed_edges,
                               std::vector<VertexPair> undirected_edges);

  int n_vertices() const { return n_vertices_; }
  int n_components() const { return static_cast<int>(components_.size()); }
  const std::vector<VertexSet>& components() const { return components_; }
  const VertexSet& component(int index) const;
  const std::vector<VertexPair>& directed_edges() const { return directed_; }
  const std::vector<VertexPair>& undirected_edges() const { return undirected_; }

  // Component index holding v, or -1 when v is not covered.
  int component_of(int v) const;

  bool has_directed(int from, int to) const;
  bool has_undirected(int u, int v) const;

  // Directed edges between components (deduplicated, sorted).
  std::vector<VertexPair> component_edges() const;

  friend bool operator==(const ChainGraph&, const ChainGraph&) = default;

 private:
  int n_vertices_ = 0;
  std::vector<VertexSet> components_;
  std::vector<VertexPair> directed_;
  std::vector<VertexPair> undirected_;
  std::vector<int> component_of_;
};

struct TopologicalOrder {
  std::vector<int> sequence;  // component indices

  friend bool operator==(const TopologicalOrder&, const TopologicalOrder&) = default;
};

// Empty `violation` means the graph is a valid chain graph.
struct ValidationResult {
  std::string violation;

  bool ok() const { return violation.empty(); }
  explicit operator bool() const { return ok(); }
};

ValidationResult validate(const ChainGraph& graph);

// Vertices outside component `component_index` with a directed edge into it.
VertexSet parents_of(const ChainGraph& graph, int component_index);

// Component indices holding at least one parent vertex of the component.
std::vector<int> parent_components(const ChainGraph& graph, int component_index);

bool is_topological(const ChainGraph& graph, const TopologicalOrder& order);

// One topological order; ties resolved by lowest component index.
TopologicalOrder topological_order(const ChainGraph& graph);

// Every topological order, in lexicographic order. Throws CapabilityError if
// more than `limit` orders exist.
std::vector<TopologicalOrder> topological_orders(const ChainGraph& graph, std::size_t limit = 1'000'000);

bool is_ancestral(const ChainGraph& graph, std::span<const int> component_set);

// Structural Hamming distance: number of vertex pairs whose edge status
// (none, u->v, v->u, undirected) differs. Each differing pair costs 1.
int shd(const ChainGraph& a, const ChainGraph& b);

// True when both hold the same components, ignoring component order.
bool same_partition(std::span<const VertexSet> a, std::span<const VertexSet> b);

}  // namespace chainid
