#include "rulenav/nav_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <utility>

#include "rulenav/error.hpp"

namespace rulenav {

NavGraph::NavGraph(int slice_count, std::vector<Node> nodes, std::vector<EdgeSpec> edges)
    : slice_count_(slice_count), nodes_(std::move(nodes)) {
  edges_.reserve(edges.size());
  for (const EdgeSpec& spec : edges) {
    if (spec.from >= nodes_.size() || spec.to >= nodes_.size()) {
      throw Error(ErrorCode::kInvariant, "edge endpoint refers to a node that does not exist");
    }
    DirectedEdge e;
    e.from = spec.from;
    e.to = spec.to;
    e.length = spec.length;
    e.heading = bearing(nodes_[spec.from].position, nodes_[spec.to].position);
    edges_.push_back(e);
  }
  validate_and_index();
}

void NavGraph::validate_and_index() {
  if (slice_count_ < 1) {
    throw Error(ErrorCode::kInvariant, "slice_count must be positive");
  }
  if (nodes_.empty()) {
    throw Error(ErrorCode::kInvariant, "graph has no nodes");
  }
  index_.clear();
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!std::isfinite(n.position.x) || !std::isfinite(n.position.y)) {
      throw Error(ErrorCode::kInvariant, "node '" + n.id + "' has a non-finite position");
    }
    if (!index_.emplace(n.id, i).second) {
      throw Error(ErrorCode::kInvariant, "duplicate node id '" + n.id + "'");
    }
  }

  out_.assign(nodes_.size(), {});
  in_.assign(nodes_.size(), {});
  std::map<std::pair<NodeIndex, NodeIndex>, EdgeIndex> by_endpoints;
  double total = 0.0;
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    const DirectedEdge& edge = edges_[e];
    if (edge.from == edge.to) {
      throw Error(ErrorCode::kInvariant, "self-loop at node '" + nodes_[edge.from].id + "'");
    }
    if (!(edge.length > 0.0) || !std::isfinite(edge.length)) {
      throw Error(ErrorCode::kInvariant, "edge " + nodes_[edge.from].id + "->" +
                                             nodes_[edge.to].id + " has non-positive length");
    }
    if (nodes_[edge.from].position == nodes_[edge.to].position) {
      throw Error(ErrorCode::kInvariant, "edge " + nodes_[edge.from].id + "->" +
                                             nodes_[edge.to].id + " joins coincident nodes");
    }
    if (!by_endpoints.emplace(std::make_pair(edge.from, edge.to), e).second) {
      throw Error(ErrorCode::kInvariant, "duplicate edge " + nodes_[edge.from].id + "->" +
                                             nodes_[edge.to].id);
    }
    out_[edge.from].push_back(e);
    in_[edge.to].push_back(e);
    total += edge.length;
  }
  mean_length_ = edges_.empty() ? 1.0 : total / static_cast<double>(edges_.size());

  reverse_.assign(edges_.size(), 0);
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    auto it = by_endpoints.find({edges_[e].to, edges_[e].from});
    if (it == by_endpoints.end()) {
      throw Error(ErrorCode::kInvariant, "edge " + nodes_[edges_[e].from].id + "->" +
                                             nodes_[edges_[e].to].id + " has no reverse edge");
    }
    reverse_[e] = it->second;
  }

  if (nodes_.size() > 1) {
    std::vector<bool> seen(nodes_.size(), false);
    std::queue<NodeIndex> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
      NodeIndex u = frontier.front();
      frontier.pop();
      for (EdgeIndex e : out_[u]) {
        NodeIndex v = edges_[e].to;
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          frontier.push(v);
        }
      }
    }
    if (reached != nodes_.size()) {
      for (NodeIndex i = 0; i < nodes_.size(); ++i) {
        if (!seen[i]) {
          throw Error(ErrorCode::kInvariant,
                      "graph is not connected (node '" + nodes_[i].id + "' is unreachable)");
        }
      }
    }
  }
}

std::optional<NodeIndex> NavGraph::find_node(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex NavGraph::node_index(std::string_view id) const {
  if (auto n = find_node(id)) return *n;
  throw Error(ErrorCode::kUnknownNode, "'" + std::string(id) + "'");
}

std::optional<EdgeIndex> NavGraph::find_edge(NodeIndex from, NodeIndex to) const {
  if (from >= nodes_.size()) return std::nullopt;
  for (EdgeIndex e : out_[from]) {
    if (edges_[e].to == to) return e;
  }
  return std::nullopt;
}

EdgeIndex NavGraph::edge_between(NodeIndex from, NodeIndex to) const {
  if (auto e = find_edge(from, to)) return *e;
  auto name = [&](NodeIndex n) {
    return n < nodes_.size() ? nodes_[n].id : "#" + std::to_string(n);
  };
  throw Error(ErrorCode::kMissingEdge, name(from) + "->" + name(to));
}

NavGraph NavGraph::with_signs(std::span<const SignPlacement> placements) const {
  NavGraph copy = *this;
  for (Node& n : copy.nodes_) n.signs.clear();
  for (const SignPlacement& p : placements) {
    if (p.node >= copy.nodes_.size()) {
      throw Error(ErrorCode::kUnknownNode, "sign placement refers to node #" +
                                               std::to_string(p.node));
    }
    copy.nodes_[p.node].signs.push_back(p);
  }
  return copy;
}

int slice_of_direction(double direction, double agent_heading, int slice_count) {
  const double width = kTwoPi / slice_count;
  const double rel = normalize_angle(direction - agent_heading);
  // The small offset keeps directions that sit on a slice boundary up to
  // rounding in the slice they open.
  int k = static_cast<int>(std::floor((rel + 1e-9) / width));
  return ((k % slice_count) + slice_count) % slice_count;
}

int project_slice(const NavGraph& graph, NodeIndex at, NodeIndex toward, double agent_heading) {
  const EdgeIndex e = graph.edge_between(at, toward);
  return slice_of_direction(graph.edge(e).heading, agent_heading, graph.slice_count());
}

namespace {

bool facing_matches(const std::optional<double>& facing, double arrival_heading,
                    int slice_count) {
  if (!facing) return true;
  return std::abs(wrap_signed(arrival_heading - *facing)) <= kPi / slice_count + 1e-9;
}

}  // namespace

Observation observe(const NavGraph& graph, NodeIndex at, double agent_heading) {
  if (at >= graph.node_count()) {
    throw Error(ErrorCode::kUnknownNode, "#" + std::to_string(at));
  }
  const int k = graph.slice_count();
  Observation obs;
  obs.node = at;
  obs.agent_heading = agent_heading;
  obs.slices.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) obs.slices[static_cast<std::size_t>(i)].index = i;

  for (const SignPlacement& s : graph.node(at).signs) {
    const int slice = s.facing ? slice_of_direction(*s.facing, agent_heading, k) : 0;
    obs.slices[static_cast<std::size_t>(slice)].visible_signs.push_back(
        {s.rule, s.legibility, s.node, s.facing});
  }
  for (EdgeIndex e : graph.out_edges(at)) {
    const DirectedEdge& edge = graph.edge(e);
    const int slice = slice_of_direction(edge.heading, agent_heading, k);
    SliceView& view = obs.slices[static_cast<std::size_t>(slice)];
    view.visible_edges.push_back(e);
    for (const SignPlacement& s : graph.node(edge.to).signs) {
      if (facing_matches(s.facing, edge.heading, k)) {
        view.visible_signs.push_back({s.rule, s.legibility, s.node, s.facing});
      }
    }
  }
  return obs;
}

NavGraph generate_grid(int rows, int cols, double edge_length, std::uint64_t seed,
                       double length_jitter) {
  if (rows < 2 || cols < 2) {
    throw Error(ErrorCode::kDimension, "grid needs at least 2 rows and 2 columns, got " +
                                           std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!(edge_length > 0.0)) {
    throw Error(ErrorCode::kDimension, "edge length must be positive");
  }
  if (length_jitter < 0.0 || length_jitter >= 1.0) {
    throw Error(ErrorCode::kDimension, "length jitter must lie in [0, 1)");
  }
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      nodes.push_back({"r" + std::to_string(r) + "c" + std::to_string(c),
                       {c * edge_length, r * edge_length},
                       {}});
    }
  }
  auto at = [cols](int r, int c) { return static_cast<NodeIndex>(r * cols + c); };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-length_jitter, length_jitter);
  std::vector<EdgeSpec> edges;
  auto street = [&](NodeIndex a, NodeIndex b) {
    const double len = length_jitter > 0.0 ? edge_length * (1.0 + jitter(rng)) : edge_length;
    edges.push_back({a, b, len});
    edges.push_back({b, a, len});
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) street(at(r, c), at(r, c + 1));
      if (r + 1 < rows) street(at(r, c), at(r + 1, c));
    }
  }
  return NavGraph(kDefaultSliceCount, std::move(nodes), std::move(edges));
}

}  // namespace rulenav
