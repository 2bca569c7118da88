#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "rulenav/agent.hpp"
#include "rulenav/nav_graph.hpp"
#include "rulenav/rules.hpp"

namespace rulenav {

/// A compliant path found on the edge-expanded graph.
struct CompliantPath {
  std::vector<NodeIndex> nodes;
  std::vector<EdgeIndex> edges;
  double length = 0.0;
};

/// Shortest rule-compliant path from `start` (arrived through `in_edge`, if
/// any) to `target`. Dijkstra over directed-edge states whose transitions
/// respect the mask; nullopt iff no compliant path exists.
std::optional<CompliantPath> compliant_shortest_path(const NavGraph& graph,
                                                     const ConstraintSet& constraints,
                                                     NodeIndex start,
                                                     std::optional<EdgeIndex> in_edge,
                                                     NodeIndex target);

/// Follows the gold route edge by edge, blind to rules. Off the route it
/// heads for the nearest route node it has not yet passed.
class RouteFollowerPolicy final : public BasePolicy {
 public:
  RouteFollowerPolicy(const NavGraph& graph, std::vector<NodeIndex> route);

  std::string_view name() const override { return "route_follower"; }
  std::optional<EdgeIndex> propose(NodeIndex node, std::optional<EdgeIndex> in_edge) override;
  void on_arrival(NodeIndex node) override;

  std::size_t progress() const { return progress_; }

 private:
  const NavGraph* graph_;
  std::vector<NodeIndex> route_;
  std::size_t progress_ = 0;
};

/// Rule-blind geometric shortest path to the target, replanned whenever the
/// agent leaves the current plan.
class GeometricShortestPathPolicy final : public BasePolicy {
 public:
  /// Throws Error(kUnreachable) if the target cannot be reached from start.
  GeometricShortestPathPolicy(const NavGraph& graph, NodeIndex start, NodeIndex target);

  std::string_view name() const override { return "geometric_sp"; }
  std::optional<EdgeIndex> propose(NodeIndex node, std::optional<EdgeIndex> in_edge) override;

 private:
  const NavGraph* graph_;
  NodeIndex target_;
  std::vector<NodeIndex> plan_;
};

/// Follows compliant_shortest_path; stops when none exists.
class CompliantOraclePolicy final : public BasePolicy {
 public:
  CompliantOraclePolicy(const NavGraph& graph, const ConstraintSet& constraints,
                        NodeIndex target);

  std::string_view name() const override { return "oracle"; }
  std::optional<EdgeIndex> propose(NodeIndex node, std::optional<EdgeIndex> in_edge) override;

 private:
  const NavGraph* graph_;
  const ConstraintSet* constraints_;
  NodeIndex target_;
  std::vector<EdgeIndex> plan_;
  std::size_t next_ = 0;
};

enum class PolicyKind { kRouteFollower, kGeometricShortestPath, kOracle };

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(std::string_view name);

std::unique_ptr<BasePolicy> make_policy(PolicyKind kind, const NavGraph& graph,
                                        const ConstraintSet& constraints,
                                        const Episode& episode);

}  // namespace rulenav
