#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "rulenav/error.hpp"
#include "rulenav/graph_algo.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/nav_graph.hpp"
#include "support.hpp"

using namespace rulenav;
namespace rt = rulenav::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

}  // namespace

TEST(ProjectSlice, StraightAheadIsSliceZero) {
  EXPECT_EQ(slice_of_direction(0.0, 0.0, 8), 0);
}

TEST(ProjectSlice, BehindIsSliceFour) {
  EXPECT_EQ(slice_of_direction(kPi, 0.0, 8), 4);
}

TEST(ProjectSlice, RelativeHeadingZero) {
  EXPECT_EQ(slice_of_direction(kPi / 2, kPi / 2, 8), 0);
}

TEST(ProjectSlice, OnGridEdges) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const NodeIndex c = g.node_index("r1c1");
  EXPECT_EQ(project_slice(g, c, g.node_index("r1c2"), 0.0), 0);
  EXPECT_EQ(project_slice(g, c, g.node_index("r2c1"), 0.0), 2);
  EXPECT_EQ(project_slice(g, c, g.node_index("r1c0"), 0.0), 4);
  EXPECT_EQ(project_slice(g, c, g.node_index("r0c1"), 0.0), 6);
  EXPECT_THROW(project_slice(g, c, g.node_index("r0c0"), 0.0), Error);
}

TEST(ProjectSlice, ShiftsByWholeSlots) {
  const NavGraph g = generate_grid(4, 4, 1.0, 3);
  const int k = g.slice_count();
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    for (EdgeIndex e : g.out_edges(v)) {
      for (int base = 0; base < k; ++base) {
        const double h = base * kTwoPi / k;
        const int s0 = project_slice(g, v, g.edge(e).to, h);
        for (int m = -k; m <= 2 * k; ++m) {
          const int s1 = project_slice(g, v, g.edge(e).to, h + m * kTwoPi / k);
          EXPECT_EQ(s1, (((s0 - m) % k) + k) % k);
        }
      }
    }
  }
}

TEST(Observe, FourNeighbourNodeFillsFourSlices) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const Observation obs = observe(g, g.node_index("r1c1"), 0.0);
  ASSERT_EQ(obs.slices.size(), 8u);
  int non_empty = 0;
  for (const SliceView& s : obs.slices) non_empty += s.visible_edges.empty() ? 0 : 1;
  EXPECT_EQ(non_empty, 4);
}

TEST(Observe, SignFacingQuarterPiLandsInSliceOne) {
  const NavGraph base = generate_grid(3, 3, 1.0, 7);
  const NodeIndex c = base.node_index("r1c1");
  const std::vector<SignPlacement> signs = {{c, "no_left_turn", kPi / 4, 1.0}};
  const NavGraph g = base.with_signs(signs);
  const Observation obs = observe(g, c, 0.0);
  ASSERT_EQ(obs.slices[1].visible_signs.size(), 1u);
  EXPECT_EQ(obs.slices[1].visible_signs[0].rule, "no_left_turn");
}

TEST(Observe, SlicePartitionProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NavGraph g = rt::random_connected_graph(9, 5, seed);
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      for (double h : {0.0, 0.3, 1.7, 4.0, 6.2}) {
        const Observation obs = observe(g, v, h);
        std::multiset<EdgeIndex> seen;
        for (const SliceView& s : obs.slices) seen.insert(s.visible_edges.begin(), s.visible_edges.end());
        const auto out = g.out_edges(v);
        EXPECT_EQ(seen, std::multiset<EdgeIndex>(out.begin(), out.end()));
      }
    }
  }
}

TEST(GenerateGrid, ThreeByThree) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  EXPECT_EQ(g.node_count(), 9u);
  EXPECT_EQ(g.edge_count(), 24u);
}

TEST(GenerateGrid, TwoByTwo) {
  const NavGraph g = generate_grid(2, 2, 1.0, 7);
  EXPECT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 8u);
}

TEST(GenerateGrid, OneRowRejected) {
  EXPECT_THROW(generate_grid(1, 5, 1.0, 7), Error);
}

TEST(GenerateGrid, EdgeCountMatchesLatticeFormula) {
  for (int r = 2; r <= 6; ++r) {
    for (int c = 2; c <= 6; ++c) {
      const NavGraph g = generate_grid(r, c, 1.0, 7);
      EXPECT_EQ(g.edge_count(), static_cast<std::size_t>(2 * (r * (c - 1) + c * (r - 1))));
    }
  }
}

TEST(GenerateGrid, Deterministic) {
  EXPECT_EQ(graph_to_json_text(generate_grid(5, 4, 2.0, 11, 0.2)),
            graph_to_json_text(generate_grid(5, 4, 2.0, 11, 0.2)));
}

TEST(GenerateGrid, HeadingsMatchBearings) {
  const NavGraph g = generate_grid(4, 5, 1.5, 7, 0.1);
  for (const DirectedEdge& e : g.edges()) {
    EXPECT_NEAR(e.heading, bearing(g.node(e.from).position, g.node(e.to).position), 1e-6);
    const EdgeIndex back = g.edge_between(e.to, e.from);
    EXPECT_EQ(g.edge(back).from, e.to);
  }
}

TEST(GraphIo, RoundTrip) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const NavGraph h = graph_from_json_text(graph_to_json_text(g));
  EXPECT_EQ(g, h);
}

TEST(GraphIo, RoundTripThroughFile) {
  const auto path = std::filesystem::temp_directory_path() / "rulenav_graph_rt.json";
  const NavGraph g = generate_grid(4, 3, 1.0, 7, 0.3);
  save_graph(g, path);
  EXPECT_EQ(load_graph(path), g);
  std::filesystem::remove(path);
}

TEST(GraphIo, DanglingEndpointRejected) {
  auto doc = nlohmann::json::parse(graph_to_json_text(generate_grid(2, 2, 1.0, 7)));
  doc["edges"][0]["to"] = "nowhere";
  EXPECT_THROW(graph_from_json_text(doc.dump()), Error);
}

TEST(GraphIo, HeadingOutOfRangeRejected) {
  auto doc = nlohmann::json::parse(graph_to_json_text(generate_grid(2, 2, 1.0, 7)));
  doc["edges"][0]["heading"] = 7.0;
  EXPECT_EQ(code_of([&] { graph_from_json_text(doc.dump()); }), ErrorCode::kInvariant);
}

TEST(GraphIo, IsolatedNodeRejected) {
  auto doc = nlohmann::json::parse(graph_to_json_text(generate_grid(2, 2, 1.0, 7)));
  doc["nodes"].push_back({{"id", "lonely"}, {"x", 9.0}, {"y", 9.0}});
  EXPECT_THROW(graph_from_json_text(doc.dump()), Error);
}

TEST(GraphIo, MalformedJsonReportsLine) {
  try {
    graph_from_json_text("{\n\"nodes\": [\n,]}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(NavGraph, MissingReverseEdgeRejected) {
  std::vector<Node> nodes = {{"a", {0, 0}, {}}, {"b", {1, 0}, {}}};
  EXPECT_EQ(code_of([&] { NavGraph(8, nodes, {{0, 1, 1.0}}); }), ErrorCode::kInvariant);
}

TEST(NavGraph, DisconnectedRejected) {
  std::vector<Node> nodes = {{"a", {0, 0}, {}}, {"b", {1, 0}, {}}, {"c", {5, 0}, {}},
                             {"d", {6, 0}, {}}};
  EXPECT_THROW(NavGraph(8, nodes, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}}), Error);
}

TEST(NavGraph, EdgeBetweenUnknown) {
  const NavGraph g = rt::path3();
  EXPECT_EQ(code_of([&] { g.edge_between(0, 2); }), ErrorCode::kMissingEdge);
  EXPECT_EQ(code_of([&] { g.node_index("zz"); }), ErrorCode::kUnknownNode);
}

TEST(GraphAlgo, BfsAndRemoval) {
  const NavGraph g = rt::path3();
  EXPECT_EQ(bfs_hops(g, 0), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(bfs_hops(g, 0, NodeIndex{1}), (std::vector<int>{0, kUnreachable, kUnreachable}));
}

TEST(GraphAlgo, BfsMatchesFloyd) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const NavGraph g = rt::random_connected_graph(10, 6, seed);
    const auto d = rt::floyd_hops(g);
    for (NodeIndex s = 0; s < g.node_count(); ++s) {
      const auto h = bfs_hops(g, s);
      for (NodeIndex t = 0; t < g.node_count(); ++t) EXPECT_EQ(h[t], d[s][t]);
    }
  }
}

TEST(GraphAlgo, ShortestPathOnGridIsManhattan) {
  const NavGraph g = generate_grid(5, 5, 1.0, 7);
  const auto p = shortest_node_path(g, g.node_index("r0c0"), g.node_index("r4c4"));
  ASSERT_EQ(p.size(), 9u);
  EXPECT_NEAR(path_length(g, p), 8.0, 1e-12);
}
