#include "rulenav/policies.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>

#include "rulenav/error.hpp"
#include "rulenav/graph_algo.hpp"

namespace rulenav {

std::optional<CompliantPath> compliant_shortest_path(const NavGraph& graph,
                                                     const ConstraintSet& constraints,
                                                     NodeIndex start,
                                                     std::optional<EdgeIndex> in_edge,
                                                     NodeIndex target) {
  if (start >= graph.node_count() || target >= graph.node_count()) {
    throw Error(ErrorCode::kUnknownNode, "compliant_shortest_path endpoint out of range");
  }
  if (start == target) return CompliantPath{{start}, {}, 0.0};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr EdgeIndex kNone = std::numeric_limits<EdgeIndex>::max();
  const std::size_t m = graph.edge_count();
  std::vector<double> dist(m, kInf);
  std::vector<EdgeIndex> parent(m, kNone);
  using Entry = std::tuple<double, EdgeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  for (EdgeIndex e : graph.out_edges(start)) {
    if (mask(constraints, in_edge, e) == 0) continue;
    dist[e] = graph.edge(e).length;
    heap.emplace(dist[e], e);
  }
  std::optional<EdgeIndex> goal;
  while (!heap.empty()) {
    const auto [d, e] = heap.top();
    heap.pop();
    if (d > dist[e]) continue;
    const NodeIndex at = graph.edge(e).to;
    if (at == target) {
      goal = e;
      break;
    }
    for (EdgeIndex f : graph.out_edges(at)) {
      if (mask(constraints, e, f) == 0) continue;
      const double nd = d + graph.edge(f).length;
      if (nd < dist[f]) {
        dist[f] = nd;
        parent[f] = e;
        heap.emplace(nd, f);
      }
    }
  }
  if (!goal) return std::nullopt;

  CompliantPath path;
  path.length = dist[*goal];
  for (EdgeIndex e = *goal; e != kNone; e = parent[e]) path.edges.push_back(e);
  std::reverse(path.edges.begin(), path.edges.end());
  path.nodes.push_back(start);
  for (EdgeIndex e : path.edges) path.nodes.push_back(graph.edge(e).to);
  return path;
}

RouteFollowerPolicy::RouteFollowerPolicy(const NavGraph& graph, std::vector<NodeIndex> route)
    : graph_(&graph), route_(std::move(route)) {
  if (route_.empty()) throw Error(ErrorCode::kValidation, "route follower needs a route");
}

void RouteFollowerPolicy::on_arrival(NodeIndex node) {
  for (std::size_t j = progress_ + 1; j < route_.size(); ++j) {
    if (route_[j] == node) {
      progress_ = j;
      return;
    }
  }
}

std::optional<EdgeIndex> RouteFollowerPolicy::propose(NodeIndex node,
                                                      std::optional<EdgeIndex> /*in_edge*/) {
  if (node == route_.back()) return std::nullopt;
  if (node == route_[progress_] && progress_ + 1 < route_.size()) {
    return graph_->edge_between(node, route_[progress_ + 1]);
  }
  // Off the route: aim for the nearest route node beyond the furthest one
  // reached, earliest index first on ties.
  const auto hops = bfs_hops(*graph_, node);
  std::size_t best = route_.size();
  for (std::size_t j = progress_ + 1; j < route_.size(); ++j) {
    const int h = hops[route_[j]];
    if (h == kUnreachable) continue;
    if (best == route_.size() || h < hops[route_[best]]) best = j;
  }
  if (best == route_.size()) return std::nullopt;
  const auto path = shortest_node_path(*graph_, node, route_[best]);
  if (path.size() < 2) return std::nullopt;
  return graph_->edge_between(path[0], path[1]);
}

GeometricShortestPathPolicy::GeometricShortestPathPolicy(const NavGraph& graph, NodeIndex start,
                                                         NodeIndex target)
    : graph_(&graph), target_(target) {
  plan_ = shortest_node_path(graph, start, target);
  if (plan_.empty()) {
    throw Error(ErrorCode::kUnreachable, "target '" + graph.node_id(target) +
                                             "' is unreachable from '" + graph.node_id(start) +
                                             "'");
  }
}

std::optional<EdgeIndex> GeometricShortestPathPolicy::propose(NodeIndex node,
                                                              std::optional<EdgeIndex>) {
  if (node == target_) return std::nullopt;
  auto it = std::find(plan_.begin(), plan_.end(), node);
  if (it == plan_.end() || it + 1 == plan_.end()) {
    plan_ = shortest_node_path(*graph_, node, target_);
    if (plan_.size() < 2) return std::nullopt;
    it = plan_.begin();
  }
  return graph_->edge_between(*it, *(it + 1));
}

CompliantOraclePolicy::CompliantOraclePolicy(const NavGraph& graph,
                                             const ConstraintSet& constraints, NodeIndex target)
    : graph_(&graph), constraints_(&constraints), target_(target) {}

std::optional<EdgeIndex> CompliantOraclePolicy::propose(NodeIndex node,
                                                        std::optional<EdgeIndex> in_edge) {
  if (node == target_) return std::nullopt;
  const bool on_plan = next_ < plan_.size() && graph_->edge(plan_[next_]).from == node &&
                       (next_ == 0 ? true : in_edge == plan_[next_ - 1]);
  if (!on_plan) {
    auto path = compliant_shortest_path(*graph_, *constraints_, node, in_edge, target_);
    if (!path || path->edges.empty()) return std::nullopt;
    plan_ = std::move(path->edges);
    next_ = 0;
  }
  return plan_[next_++];
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRouteFollower: return "route_follower";
    case PolicyKind::kGeometricShortestPath: return "geometric_sp";
    case PolicyKind::kOracle: return "oracle";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (PolicyKind k : {PolicyKind::kRouteFollower, PolicyKind::kGeometricShortestPath,
                       PolicyKind::kOracle}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::unique_ptr<BasePolicy> make_policy(PolicyKind kind, const NavGraph& graph,
                                        const ConstraintSet& constraints,
                                        const Episode& episode) {
  switch (kind) {
    case PolicyKind::kRouteFollower:
      return std::make_unique<RouteFollowerPolicy>(graph, episode.gold_route);
    case PolicyKind::kGeometricShortestPath:
      return std::make_unique<GeometricShortestPathPolicy>(graph, episode.start, episode.target);
    case PolicyKind::kOracle:
      return std::make_unique<CompliantOraclePolicy>(graph, constraints, episode.target);
  }
  throw Error(ErrorCode::kValidation, "unknown policy kind");
}

}  // namespace rulenav
