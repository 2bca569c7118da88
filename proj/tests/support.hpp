#pragma once

// Shared fixtures and brute-force oracles for the test binaries. The oracles
// deliberately avoid the library's own search code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rulenav/nav_graph.hpp"
#include "rulenav/rules.hpp"
#include "rulenav/seeding.hpp"

namespace rulenav::testing {

inline RuleCatalog standard_catalog() {
  return RuleCatalog({
      {"no_entry", "", "", ActionSet{}, RuleKind::kEdgeBan},
      {"no_left_turn", "", "", ActionSet{Action::kStraight, Action::kRight, Action::kUTurn},
       RuleKind::kTurnRestriction},
      {"no_right_turn", "", "", ActionSet{Action::kStraight, Action::kLeft, Action::kUTurn},
       RuleKind::kTurnRestriction},
      {"no_u_turn", "", "", ActionSet{Action::kStraight, Action::kLeft, Action::kRight},
       RuleKind::kTurnRestriction},
      {"straight_only", "", "", ActionSet{Action::kStraight}, RuleKind::kTurnRestriction},
  });
}

/// Undirected edge list over given points; both directions are added.
inline NavGraph graph_from(const std::vector<Point2>& pts,
                           const std::vector<std::pair<int, int>>& undirected,
                           int slices = kDefaultSliceCount) {
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    nodes.push_back({"n" + std::to_string(i), pts[i], {}});
  }
  std::vector<EdgeSpec> edges;
  for (auto [a, b] : undirected) {
    const double len = distance(pts[static_cast<std::size_t>(a)], pts[static_cast<std::size_t>(b)]);
    edges.push_back({static_cast<NodeIndex>(a), static_cast<NodeIndex>(b), len});
    edges.push_back({static_cast<NodeIndex>(b), static_cast<NodeIndex>(a), len});
  }
  return NavGraph(slices, std::move(nodes), std::move(edges));
}

/// a - b - c along the x axis.
inline NavGraph path3() { return graph_from({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}}); }

/// Center 0 with leaves on the four compass points.
inline NavGraph star5() {
  return graph_from({{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
}

/// a-b-c-d square.
inline NavGraph cycle4() {
  return graph_from({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
}

/// Connected graph with `n` nodes at distinct lattice points: a random
/// spanning tree plus `extra` random chords.
inline NavGraph random_connected_graph(int n, int extra, std::uint64_t seed) {
  auto rng = keyed_rng({seed, 0x72616e64ull});
  std::set<std::pair<int, int>> used_pts;
  std::vector<Point2> pts;
  while (static_cast<int>(pts.size()) < n) {
    const int x = static_cast<int>(uniform_index(rng, 9));
    const int y = static_cast<int>(uniform_index(rng, 9));
    if (used_pts.insert({x, y}).second) pts.push_back({double(x), double(y)});
  }
  std::set<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    const int u = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(v)));
    edges.insert({u, v});
  }
  for (int k = 0; k < extra * 4 && static_cast<int>(edges.size()) < n - 1 + extra; ++k) {
    int a = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    int b = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    edges.insert({a, b});
  }
  return graph_from(pts, {edges.begin(), edges.end()});
}

/// Random sign placements: edge bans and turn restrictions, with either an
/// all-approach facing or the heading of one real in-edge.
inline std::vector<SignPlacement> random_placements(const NavGraph& g, const RuleCatalog& cat,
                                                    int count, std::uint64_t seed) {
  auto rng = keyed_rng({seed, 0x706c6163ull});
  std::vector<SignPlacement> out;
  for (int i = 0; i < count; ++i) {
    SignPlacement p;
    p.node = static_cast<NodeIndex>(uniform_index(rng, g.node_count()));
    p.rule = cat.ids()[uniform_index(rng, cat.ids().size())];
    const auto in = g.in_edges(p.node);
    if (!in.empty() && uniform_index(rng, 2) == 0) {
      p.facing = g.edge(in[uniform_index(rng, in.size())]).heading;
    }
    out.push_back(p);
  }
  return out;
}

/// Hop distances by Floyd-Warshall, kept separate from the library's BFS.
inline std::vector<std::vector<int>> floyd_hops(const NavGraph& g) {
  const std::size_t n = g.node_count();
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const DirectedEdge& e : g.edges()) d[e.from][e.to] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

/// Betweenness by enumerating every shortest path of every ordered pair,
/// normalized by (n-1)(n-2).
inline std::vector<double> brute_force_betweenness(const NavGraph& g) {
  const std::size_t n = g.node_count();
  const auto d = floyd_hops(g);
  std::vector<double> bc(n, 0.0);
  for (NodeIndex s = 0; s < n; ++s) {
    for (NodeIndex t = 0; t < n; ++t) {
      if (s == t) continue;
      std::vector<std::vector<NodeIndex>> paths;
      std::vector<NodeIndex> cur{s};
      std::function<void(NodeIndex)> dfs = [&](NodeIndex at) {
        if (at == t) {
          paths.push_back(cur);
          return;
        }
        for (EdgeIndex e : g.out_edges(at)) {
          const NodeIndex nx = g.edge(e).to;
          if (d[s][nx] != d[s][at] + 1 || d[nx][t] != d[at][t] - 1) continue;
          cur.push_back(nx);
          dfs(nx);
          cur.pop_back();
        }
      };
      dfs(s);
      if (paths.empty()) continue;
      for (const auto& p : paths) {
        for (std::size_t i = 1; i + 1 < p.size(); ++i) bc[p[i]] += 1.0 / static_cast<double>(paths.size());
      }
    }
  }
  if (n > 2) {
    for (double& v : bc) v /= static_cast<double>((n - 1) * (n - 2));
  }
  return bc;
}

/// True iff the transition is allowed by the placements, evaluated straight
/// from the rule definitions rather than the resolved constraint set.
inline bool oracle_allows(const NavGraph& g, const RuleCatalog& cat,
                          const std::vector<SignPlacement>& placements,
                          std::optional<EdgeIndex> in, EdgeIndex out) {
  const double half = kPi / g.slice_count() + 1e-9;
  const auto faces = [&](const SignPlacement& p, double heading) {
    return !p.facing || std::abs(wrap_signed(heading - *p.facing)) <= half;
  };
  const DirectedEdge& o = g.edge(out);
  for (const SignPlacement& p : placements) {
    const RuleCategory& r = cat.at(p.rule);
    if (r.kind == RuleKind::kEdgeBan) {
      // Bans govern entry into the signed node.
      if (o.to == p.node && faces(p, o.heading)) return false;
    } else if (in && o.from == p.node) {
      const DirectedEdge& i = g.edge(*in);
      if (!faces(p, i.heading)) continue;
      double delta = wrap_signed(o.heading - i.heading);
      Action a = Action::kStraight;
      if (delta > kPi / 6 && delta < 5 * kPi / 6) a = Action::kLeft;
      if (delta < -kPi / 6 && delta > -5 * kPi / 6) a = Action::kRight;
      if (std::abs(delta) >= 5 * kPi / 6) a = Action::kUTurn;
      if (!r.permissible.contains(a)) return false;
    }
  }
  return true;
}

/// Minimum length over every compliant walk that never repeats a directed
/// edge (a shortest compliant walk never does). Exhaustive DFS with a
/// length bound.
inline std::optional<double> brute_force_compliant_length(
    const NavGraph& g, const RuleCatalog& cat, const std::vector<SignPlacement>& placements,
    NodeIndex start, std::optional<EdgeIndex> in, NodeIndex target) {
  if (start == target) return 0.0;
  std::optional<double> best;
  std::vector<char> used(g.edge_count(), 0);
  std::function<void(NodeIndex, std::optional<EdgeIndex>, double)> dfs =
      [&](NodeIndex at, std::optional<EdgeIndex> via, double len) {
        if (best && len >= *best - 1e-12) return;
        if (at == target && via) {
          best = len;
          return;
        }
        for (EdgeIndex e : g.out_edges(at)) {
          if (used[e]) continue;
          if (!oracle_allows(g, cat, placements, via, e)) continue;
          used[e] = 1;
          dfs(g.edge(e).to, e, len + g.edge(e).length);
          used[e] = 0;
        }
      };
  dfs(start, in, 0.0);
  return best;
}

}  // namespace rulenav::testing
