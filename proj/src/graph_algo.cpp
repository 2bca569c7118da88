#include "rulenav/graph_algo.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>

namespace rulenav {

std::vector<int> bfs_hops(const NavGraph& graph, NodeIndex source,
                          std::optional<NodeIndex> removed) {
  std::vector<int> dist(graph.node_count(), kUnreachable);
  if (removed && *removed == source) return dist;
  std::queue<NodeIndex> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const NodeIndex u = frontier.front();
    frontier.pop();
    for (EdgeIndex e : graph.out_edges(u)) {
      const NodeIndex v = graph.edge(e).to;
      if (dist[v] != kUnreachable || (removed && v == *removed)) continue;
      dist[v] = dist[u] + 1;
      frontier.push(v);
    }
  }
  return dist;
}

std::vector<int> all_pairs_hops(const NavGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<int> out(n * n);
  for (NodeIndex s = 0; s < n; ++s) {
    auto row = bfs_hops(graph, s);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(s * n));
  }
  return out;
}

std::vector<NodeIndex> shortest_node_path(const NavGraph& graph, NodeIndex from, NodeIndex to) {
  const std::size_t n = graph.node_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  std::vector<NodeIndex> parent(n, from);
  using Entry = std::tuple<double, NodeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[from] = 0.0;
  heap.emplace(0.0, from);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == to) break;
    for (EdgeIndex e : graph.out_edges(u)) {
      const DirectedEdge& edge = graph.edge(e);
      const double nd = d + edge.length;
      // Equal-cost ties prefer the lower-indexed parent.
      if (nd < dist[edge.to] - 1e-12 ||
          (std::abs(nd - dist[edge.to]) <= 1e-12 && u < parent[edge.to])) {
        const bool improved = nd < dist[edge.to] - 1e-12;
        dist[edge.to] = std::min(nd, dist[edge.to]);
        parent[edge.to] = u;
        if (improved) heap.emplace(nd, edge.to);
      }
    }
  }
  if (dist[to] == kInf) return {};
  std::vector<NodeIndex> path{to};
  while (path.back() != from) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

double path_length(const NavGraph& graph, const std::vector<NodeIndex>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    total += graph.edge(graph.edge_between(path[i - 1], path[i])).length;
  }
  return total;
}

}  // namespace rulenav
