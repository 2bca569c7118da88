#pragma once

#include <optional>
#include <vector>

#include "rulenav/nav_graph.hpp"

namespace rulenav {

inline constexpr int kUnreachable = -1;

/// Hop distances from `source`; kUnreachable where no path exists. A node
/// given as `removed` is treated as absent from the graph.
std::vector<int> bfs_hops(const NavGraph& graph, NodeIndex source,
                          std::optional<NodeIndex> removed = std::nullopt);

/// All-pairs hop distances, row-major |V|×|V|.
std::vector<int> all_pairs_hops(const NavGraph& graph);

/// Length-weighted shortest node path, ties resolved by node index so the
/// result is reproducible. Empty if `to` is unreachable.
std::vector<NodeIndex> shortest_node_path(const NavGraph& graph, NodeIndex from, NodeIndex to);

double path_length(const NavGraph& graph, const std::vector<NodeIndex>& path);

}  // namespace rulenav
