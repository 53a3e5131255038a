#include "chainid/graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

void sort_unique(std::vector<VertexPair>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::string pair_string(const VertexPair& e, const char* sep) {
  std::ostringstream out;
  out << e.first << sep << e.second;
  return out.str();
}

// Small union-find for undirected connectivity.
class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

bool in_range(int v, int n) { return v >= 0 && v < n; }

// Kahn-style acyclicity test on the contracted component graph.
bool component_dag_is_acyclic(int n_components, const std::vector<VertexPair>& edges) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_components));
  std::vector<int> indegree(static_cast<std::size_t>(n_components), 0);
  for (const auto& [a, b] : edges) {
    out[a].push_back(b);
    ++indegree[b];
  }
  std::vector<int> ready;
  for (int c = 0; c < n_components; ++c) {
    if (indegree[c] == 0) ready.push_back(c);
  }
  int seen = 0;
  while (!ready.empty()) {
    const int c = ready.back();
    ready.pop_back();
    ++seen;
    for (int d : out[c]) {
      if (--indegree[d] == 0) ready.push_back(d);
    }
  }
  return seen == n_components;
}

}  // namespace

ChainGraph::ChainGraph(int n_vertices, std::vector<VertexSet> components, std::vector<VertexPair> directed_edges,
                       std::vector<VertexPair> undirected_edges)
    : n_vertices_(n_vertices),
      components_(std::move(components)),
      directed_(std::move(directed_edges)),
      undirected_(std::move(undirected_edges)) {
  if (n_vertices_ < 0) throw ArgumentError("n_vertices must be non-negative");
  for (auto& c : components_) std::sort(c.begin(), c.end());
  for (auto& e : undirected_) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  sort_unique(directed_);
  sort_unique(undirected_);
  component_of_.assign(static_cast<std::size_t>(n_vertices_), -1);
  for (int c = 0; c < n_components(); ++c) {
    for (int v : components_[c]) {
      if (in_range(v, n_vertices_) && component_of_[v] < 0) component_of_[v] = c;
    }
  }
}

ChainGraph ChainGraph::checked(int n_vertices, std::vector<VertexSet> components,
                               std::vector<VertexPair> directed_edges, std::vector<VertexPair> undirected_edges) {
  ChainGraph graph(n_vertices, std::move(components), std::move(directed_edges), std::move(undirected_edges));
  if (auto result = validate(graph); !result) throw ArgumentError("invalid chain graph: " + result.violation);
  return graph;
}

ChainGraph ChainGraph::from_edges(int n_vertices, std::vector<VertexPair> directed_edges,
                                  std::vector<VertexPair> undirected_edges) {
  if (n_vertices < 0) throw ArgumentError("n_vertices must be non-negative");
  DisjointSets sets(n_vertices);
  for (const auto& [u, v] : undirected_edges) {
    if (!in_range(u, n_vertices) || !in_range(v, n_vertices)) {
      throw ArgumentError("undirected edge " + pair_string({u, v}, "-") + " out of range");
    }
    sets.unite(u, v);
  }
  std::map<int, VertexSet> by_root;
  for (int v = 0; v < n_vertices; ++v) by_root[sets.find(v)].push_back(v);
  std::vector<VertexSet> components;
  components.reserve(by_root.size());
  // Roots are the smallest member, so map order is smallest-vertex order.
  for (auto& [root, members] : by_root) components.push_back(std::move(members));
  return ChainGraph(n_vertices, std::move(components), std::move(directed_edges), std::move(undirected_edges));
}

const VertexSet& ChainGraph::component(int index) const {
  if (index < 0 || index >= n_components()) {
    throw ArgumentError("component index " + std::to_string(index) + " out of range");
  }
  return components_[index];
}

int ChainGraph::component_of(int v) const { return in_range(v, n_vertices_) ? component_of_[v] : -1; }

bool ChainGraph::has_directed(int from, int to) const {
  return std::binary_search(directed_.begin(), directed_.end(), VertexPair{from, to});
}

bool ChainGraph::has_undirected(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(undirected_.begin(), undirected_.end(), VertexPair{u, v});
}

std::vector<VertexPair> ChainGraph::component_edges() const {
  std::vector<VertexPair> edges;
  for (const auto& [u, v] : directed_) {
    const int cu = component_of(u);
    const int cv = component_of(v);
    if (cu >= 0 && cv >= 0 && cu != cv) edges.emplace_back(cu, cv);
  }
  sort_unique(edges);
  return edges;
}

ValidationResult validate(const ChainGraph& graph) {
  const int n = graph.n_vertices();
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  for (int c = 0; c < graph.n_components(); ++c) {
    const auto& comp = graph.components()[c];
    if (comp.empty()) return {"partition: component " + std::to_string(c) + " is empty"};
    for (int v : comp) {
      if (!in_range(v, n)) return {"partition: vertex " + std::to_string(v) + " out of range"};
      if (owner[v] >= 0) {
        return {"partition: vertex " + std::to_string(v) + " appears in components " + std::to_string(owner[v]) +
                " and " + std::to_string(c)};
      }
      owner[v] = c;
    }
  }
  for (int v = 0; v < n; ++v) {
    if (owner[v] < 0) return {"partition: vertex " + std::to_string(v) + " is not covered"};
  }

  for (const auto& e : graph.undirected_edges()) {
    if (!in_range(e.first, n) || !in_range(e.second, n)) {
      return {"undirected edge " + pair_string(e, "-") + " out of range"};
    }
    if (e.first == e.second) return {"undirected edge " + pair_string(e, "-") + " is a self loop"};
    if (owner[e.first] != owner[e.second]) {
      return {"undirected edge " + pair_string(e, "-") + " crosses components"};
    }
  }
  for (const auto& e : graph.directed_edges()) {
    if (!in_range(e.first, n) || !in_range(e.second, n)) {
      return {"directed edge " + pair_string(e, "->") + " out of range"};
    }
    if (owner[e.first] == owner[e.second]) {
      return {"directed edge " + pair_string(e, "->") + " lies inside component " + std::to_string(owner[e.first])};
    }
  }

  // Maximality: each component must be connected by its undirected edges.
  DisjointSets sets(n);
  for (const auto& [u, v] : graph.undirected_edges()) sets.unite(u, v);
  for (int c = 0; c < graph.n_components(); ++c) {
    const auto& comp = graph.components()[c];
    const int root = sets.find(comp.front());
    for (int v : comp) {
      if (sets.find(v) != root) {
        return {"component " + std::to_string(c) + " is not connected by undirected edges"};
      }
    }
  }

  if (!component_dag_is_acyclic(graph.n_components(), graph.component_edges())) {
    return {"directed edges form a cycle between components (semi-directed cycle)"};
  }
  return {};
}

VertexSet parents_of(const ChainGraph& graph, int component_index) {
  graph.component(component_index);  // range check
  std::set<int> parents;
  for (const auto& [u, v] : graph.directed_edges()) {
    if (graph.component_of(v) == component_index && graph.component_of(u) != component_index) parents.insert(u);
  }
  return {parents.begin(), parents.end()};
}

std::vector<int> parent_components(const ChainGraph& graph, int component_index) {
  std::set<int> result;
  for (int v : parents_of(graph, component_index)) result.insert(graph.component_of(v));
  return {result.begin(), result.end()};
}

bool is_topological(const ChainGraph& graph, const TopologicalOrder& order) {
  const int t = graph.n_components();
  if (static_cast<int>(order.sequence.size()) != t) return false;
  std::vector<int> position(static_cast<std::size_t>(t), -1);
  for (int i = 0; i < t; ++i) {
    const int c = order.sequence[i];
    if (c < 0 || c >= t || position[c] >= 0) return false;
    position[c] = i;
  }
  for (const auto& [a, b] : graph.component_edges()) {
    if (position[a] >= position[b]) return false;
  }
  return true;
}

TopologicalOrder topological_order(const ChainGraph& graph) {
  const int t = graph.n_components();
  std::vector<std::vector<int>> out(static_cast<std::size_t>(t));
  std::vector<int> indegree(static_cast<std::size_t>(t), 0);
  for (const auto& [a, b] : graph.component_edges()) {
    out[a].push_back(b);
    ++indegree[b];
  }
  std::set<int> ready;
  for (int c = 0; c < t; ++c) {
    if (indegree[c] == 0) ready.insert(c);
  }
  TopologicalOrder order;
  while (!ready.empty()) {
    const int c = *ready.begin();
    ready.erase(ready.begin());
    order.sequence.push_back(c);
    for (int d : out[c]) {
      if (--indegree[d] == 0) ready.insert(d);
    }
  }
  if (static_cast<int>(order.sequence.size()) != t) throw ArgumentError("component graph has a cycle");
  return order;
}

std::vector<TopologicalOrder> topological_orders(const ChainGraph& graph, std::size_t limit) {
  const int t = graph.n_components();
  std::vector<std::vector<int>> out(static_cast<std::size_t>(t));
  std::vector<int> indegree(static_cast<std::size_t>(t), 0);
  for (const auto& [a, b] : graph.component_edges()) {
    out[a].push_back(b);
    ++indegree[b];
  }
  std::vector<TopologicalOrder> orders;
  std::vector<int> prefix;
  std::vector<bool> used(static_cast<std::size_t>(t), false);

  // Depth-first over the choice of next source; visiting candidates in index
  // order yields the orders lexicographically.
  auto extend = [&](auto&& self) -> void {
    if (static_cast<int>(prefix.size()) == t) {
      if (orders.size() >= limit) {
        throw CapabilityError("more than " + std::to_string(limit) + " topological orders");
      }
      orders.push_back({prefix});
      return;
    }
    for (int c = 0; c < t; ++c) {
      if (used[c] || indegree[c] != 0) continue;
      used[c] = true;
      prefix.push_back(c);
      for (int d : out[c]) --indegree[d];
      self(self);
      for (int d : out[c]) ++indegree[d];
      prefix.pop_back();
      used[c] = false;
    }
  };
  extend(extend);
  return orders;
}

bool is_ancestral(const ChainGraph& graph, std::span<const int> component_set) {
  std::vector<bool> inside(static_cast<std::size_t>(graph.n_components()), false);
  for (int c : component_set) {
    graph.component(c);
    inside[c] = true;
  }
  for (int c : component_set) {
    for (int p : parents_of(graph, c)) {
      if (!inside[graph.component_of(p)]) return false;
    }
  }
  return true;
}

int shd(const ChainGraph& a, const ChainGraph& b) {
  if (a.n_vertices() != b.n_vertices()) {
    throw ArgumentError("shd: vertex counts differ (" + std::to_string(a.n_vertices()) + " vs " +
                        std::to_string(b.n_vertices()) + ")");
  }
  // Status codes per unordered pair (u < v): bit 0 = u->v, bit 1 = v->u,
  // bit 2 = undirected. Invalid combinations simply produce distinct codes.
  auto status_map = [](const ChainGraph& g) {
    std::map<VertexPair, int> status;
    for (const auto& [u, v] : g.directed_edges()) {
      if (u < v) status[{u, v}] |= 1;
      else status[{v, u}] |= 2;
    }
    for (const auto& e : g.undirected_edges()) status[e] |= 4;
    return status;
  };
  const auto sa = status_map(a);
  const auto sb = status_map(b);
  int distance = 0;
  for (const auto& [pair, code] : sa) {
    const auto it = sb.find(pair);
    if (it == sb.end() || it->second != code) ++distance;
  }
  for (const auto& [pair, code] : sb) {
    if (!sa.contains(pair)) ++distance;
  }
  return distance;
}

bool same_partition(std::span<const VertexSet> a, std::span<const VertexSet> b) {
  auto canonical = [](std::span<const VertexSet> parts) {
    std::vector<VertexSet> sorted(parts.begin(), parts.end());
    for (auto& p : sorted) std::sort(p.begin(), p.end());
    std::sort(sorted.begin(), sorted.end());
    return sorted;
  };
  return canonical(a) == canonical(b);
}

}  // namespace chainid
