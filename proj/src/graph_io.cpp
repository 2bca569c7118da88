#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/nav_graph.hpp"

namespace rulenav {

using nlohmann::json;

NavGraph graph_from_json_text(std::string_view text) {
  const json doc = parse_json_text(text, "graph");
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "graph: top level must be an object");

  int slice_count = kDefaultSliceCount;
  if (doc.contains("slice_count")) {
    slice_count = get_field<int>(doc, "slice_count", "graph");
    if (slice_count < 1) throw Error(ErrorCode::kInvariant, "graph.slice_count must be positive");
  }

  const json& jnodes = require_array(doc, "nodes", "graph");
  std::vector<Node> nodes;
  nodes.reserve(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string where = "graph.nodes[" + std::to_string(i) + "]";
    const json& jn = jnodes[i];
    if (!jn.is_object()) throw Error(ErrorCode::kParse, where + ": expected an object");
    Node n;
    n.id = get_field<std::string>(jn, "id", where);
    n.position.x = get_field<double>(jn, "x", where);
    n.position.y = get_field<double>(jn, "y", where);
    nodes.push_back(std::move(n));
  }

  std::unordered_map<std::string, NodeIndex> ids;
  for (NodeIndex i = 0; i < nodes.size(); ++i) ids.emplace(nodes[i].id, i);

  const json& jedges = require_array(doc, "edges", "graph");
  std::vector<EdgeSpec> edges;
  edges.reserve(jedges.size());
  for (std::size_t i = 0; i < jedges.size(); ++i) {
    const std::string where = "graph.edges[" + std::to_string(i) + "]";
    const json& je = jedges[i];
    if (!je.is_object()) throw Error(ErrorCode::kParse, where + ": expected an object");
    const auto from = get_field<std::string>(je, "from", where);
    const auto to = get_field<std::string>(je, "to", where);
    auto f = ids.find(from);
    auto t = ids.find(to);
    if (f == ids.end() || t == ids.end()) {
      throw Error(ErrorCode::kInvariant, where + ": dangling endpoint '" +
                                             (f == ids.end() ? from : to) + "'");
    }
    EdgeSpec spec{f->second, t->second, get_field<double>(je, "length", where)};
    // Headings are derived from positions. A stored heading is tolerated only
    // when it is normalized and agrees with the derived bearing.
    if (je.contains("heading")) {
      const double h = get_field<double>(je, "heading", where);
      if (!(h >= 0.0 && h < kTwoPi)) {
        throw Error(ErrorCode::kInvariant, where + ": heading " + std::to_string(h) +
                                               " outside [0, 2pi)");
      }
      const double derived = bearing(nodes[spec.from].position, nodes[spec.to].position);
      if (std::abs(wrap_signed(h - derived)) > 1e-6) {
        throw Error(ErrorCode::kInvariant, where + ": heading disagrees with node positions");
      }
    }
    edges.push_back(spec);
  }

  NavGraph graph(slice_count, std::move(nodes), std::move(edges));
  for (NodeIndex n = 0; n < graph.node_count(); ++n) {
    if (graph.out_edges(n).empty()) {
      throw Error(ErrorCode::kInvariant, "node '" + graph.node_id(n) + "' has degree 0");
    }
  }
  return graph;
}

std::string graph_to_json_text(const NavGraph& graph) {
  json doc;
  doc["slice_count"] = graph.slice_count();
  json jnodes = json::array();
  for (const Node& n : graph.nodes()) {
    jnodes.push_back({{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}});
  }
  doc["nodes"] = std::move(jnodes);
  json jedges = json::array();
  for (const DirectedEdge& e : graph.edges()) {
    jedges.push_back(
        {{"from", graph.node_id(e.from)}, {"to", graph.node_id(e.to)}, {"length", e.length}});
  }
  doc["edges"] = std::move(jedges);
  return doc.dump(1) + "\n";
}

NavGraph load_graph(const std::filesystem::path& path) {
  return graph_from_json_text(read_text_file(path));
}

void save_graph(const NavGraph& graph, const std::filesystem::path& path) {
  write_text_file(path, graph_to_json_text(graph));
}

}  // namespace rulenav
