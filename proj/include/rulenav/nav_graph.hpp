#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rulenav/angles.hpp"

namespace rulenav {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

inline constexpr int kDefaultSliceCount = 8;

/// A regulatory sign attached to a node. `facing` is the arrival heading the
/// sign governs; an empty value governs every approach.
struct SignPlacement {
  NodeIndex node = 0;
  std::string rule;
  std::optional<double> facing;
  double legibility = 1.0;

  friend bool operator==(const SignPlacement&, const SignPlacement&) = default;
};

struct Node {
  std::string id;
  Point2 position;
  std::vector<SignPlacement> signs;

  friend bool operator==(const Node&, const Node&) = default;
};

struct DirectedEdge {
  NodeIndex from = 0;
  NodeIndex to = 0;
  double heading = 0.0;  // [0, 2π), derived from node positions
  double length = 1.0;

  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

/// Edge as supplied to the constructor; the heading is derived.
struct EdgeSpec {
  NodeIndex from = 0;
  NodeIndex to = 0;
  double length = 1.0;
};

/// Immutable geometric street graph. Every edge has its reverse, headings are
/// bearings between endpoint positions, and the graph is connected. The
/// constructor enforces all of this and throws Error(kInvariant) otherwise.
class NavGraph {
 public:
  NavGraph(int slice_count, std::vector<Node> nodes, std::vector<EdgeSpec> edges);

  int slice_count() const { return slice_count_; }
  double slice_width() const { return kTwoPi / slice_count_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Node& node(NodeIndex n) const { return nodes_.at(n); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const DirectedEdge& edge(EdgeIndex e) const { return edges_.at(e); }
  const std::vector<DirectedEdge>& edges() const { return edges_; }

  std::optional<NodeIndex> find_node(std::string_view id) const;
  /// Throws Error(kUnknownNode).
  NodeIndex node_index(std::string_view id) const;
  const std::string& node_id(NodeIndex n) const { return nodes_.at(n).id; }

  std::span<const EdgeIndex> out_edges(NodeIndex n) const { return out_.at(n); }
  std::span<const EdgeIndex> in_edges(NodeIndex n) const { return in_.at(n); }

  std::optional<EdgeIndex> find_edge(NodeIndex from, NodeIndex to) const;
  /// Throws Error(kMissingEdge).
  EdgeIndex edge_between(NodeIndex from, NodeIndex to) const;
  EdgeIndex reverse(EdgeIndex e) const { return reverse_.at(e); }

  double mean_edge_length() const { return mean_length_; }

  /// Copy of this graph with the given signs attached to their nodes
  /// (replacing any signs already present).
  NavGraph with_signs(std::span<const SignPlacement> placements) const;

  friend bool operator==(const NavGraph& a, const NavGraph& b) {
    return a.slice_count_ == b.slice_count_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  void validate_and_index();

  int slice_count_;
  std::vector<Node> nodes_;
  std::vector<DirectedEdge> edges_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::vector<EdgeIndex>> out_;
  std::vector<std::vector<EdgeIndex>> in_;
  std::vector<EdgeIndex> reverse_;
  double mean_length_ = 1.0;
};

/// A sign as seen from some node: where it stands and whom it governs.
struct SignSighting {
  std::string rule;
  double legibility = 1.0;
  NodeIndex node = 0;
  std::optional<double> facing;
};

struct SliceView {
  int index = 0;
  std::vector<EdgeIndex> visible_edges;
  std::vector<SignSighting> visible_signs;
};

struct Observation {
  NodeIndex node = 0;
  double agent_heading = 0.0;
  std::vector<SliceView> slices;
};

/// Slice index of the edge (at → toward) for an agent facing `agent_heading`.
/// Slice 0 is straight ahead; indices grow counter-clockwise.
int project_slice(const NavGraph& graph, NodeIndex at, NodeIndex toward, double agent_heading);

/// Slice index of an absolute direction relative to `agent_heading`.
int slice_of_direction(double direction, double agent_heading, int slice_count);

/// Panoramic view from `at`. Signs standing at `at` appear in the slice of
/// their facing (slice 0 when they govern every approach). Signs at a
/// neighbour that govern the approach along (at → neighbour) appear in that
/// edge's slice, since they are visible before the agent commits to the move.
Observation observe(const NavGraph& graph, NodeIndex at, double agent_heading);

/// 4-connected lattice, `edge_length` apart. Node ids are "r<row>c<col>".
/// A positive `length_jitter` perturbs stored edge lengths (symmetrically per
/// street) by up to that fraction, drawn from `seed`.
NavGraph generate_grid(int rows, int cols, double edge_length, std::uint64_t seed,
                       double length_jitter = 0.0);

NavGraph graph_from_json_text(std::string_view text);
std::string graph_to_json_text(const NavGraph& graph);
NavGraph load_graph(const std::filesystem::path& path);
void save_graph(const NavGraph& graph, const std::filesystem::path& path);

}  // namespace rulenav
