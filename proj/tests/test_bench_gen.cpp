#include <gtest/gtest.h>

#include <filesystem>

#include "rulenav/bench_gen.hpp"
#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"
#include "support.hpp"

using namespace rulenav;
namespace rt = rulenav::testing;

TEST(DegreeCentrality, Star) {
  const auto d = degree_centrality(rt::star5());
  EXPECT_DOUBLE_EQ(d[0], 1.0);
  EXPECT_DOUBLE_EQ(d[1], 0.25);
}

TEST(DegreeCentrality, GridCenter) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  EXPECT_DOUBLE_EQ(degree_centrality(g)[g.node_index("r1c1")], 0.5);
}

TEST(Betweenness, PathMiddle) {
  const auto b = betweenness_centrality(rt::path3());
  EXPECT_NEAR(b[1], 1.0, 1e-12);
  EXPECT_NEAR(b[0], 0.0, 1e-12);
}

TEST(Betweenness, CycleIsUniform) {
  const auto b = betweenness_centrality(rt::cycle4());
  for (double v : b) EXPECT_NEAR(v, b[0], 1e-12);
}

TEST(Betweenness, StarCenter) {
  const auto b = betweenness_centrality(rt::star5());
  EXPECT_NEAR(b[0], 1.0, 1e-12);
  for (int i = 1; i < 5; ++i) EXPECT_NEAR(b[static_cast<std::size_t>(i)], 0.0, 1e-12);
}

TEST(Betweenness, MatchesBruteForce) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const NavGraph g = rt::random_connected_graph(11, 7, seed);
    const auto fast = betweenness_centrality(g);
    const auto slow = rt::brute_force_betweenness(g);
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-9);
  }
}

TEST(PathDependence, CycleDetourDoesNotInflate) {
  EXPECT_NEAR(path_dependence(rt::cycle4(), 1, 50, 2.0, 7), 0.0, 1e-12);
}

TEST(PathDependence, CutVertexHitsCap) {
  EXPECT_NEAR(path_dependence(rt::path3(), 1, 50, 2.0, 7), 1.0, 1e-12);
}

TEST(PathDependence, LeafRemovalIsFree) {
  EXPECT_NEAR(path_dependence(rt::star5(), 2, 100, 2.0, 7), 0.0, 1e-12);
}

TEST(PathDependence, Bounded) {
  const NavGraph g = rt::random_connected_graph(10, 4, 9);
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    const double p = path_dependence(g, v, 40, 2.0, 1);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

namespace {

std::vector<Route> routes_over(const NavGraph& g, const std::vector<std::vector<NodeIndex>>& paths) {
  std::vector<Route> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out.push_back({"r" + std::to_string(i), paths[i], paths[i].back()});
  }
  for (const Route& r : out) validate_route(g, r);
  return out;
}

}  // namespace

TEST(PathFrequency, Examples) {
  const NavGraph g = generate_grid(1 + 1, 6, 1.0, 7);
  const NodeIndex a = g.node_index("r0c0"), b = g.node_index("r0c1"), c = g.node_index("r0c2"),
                  d = g.node_index("r0c3");
  std::vector<std::vector<NodeIndex>> paths = {{a, b, c}, {a, b, c, d}, {b, c, d}};
  for (int i = 0; i < 7; ++i) paths.push_back({a, b});
  const auto f = path_frequency(g, routes_over(g, paths));
  EXPECT_NEAR(f[b], 0.2, 1e-12);  // interior of 2 of 10
  EXPECT_NEAR(f[c], 0.2, 1e-12);
  EXPECT_NEAR(f[a], 0.0, 1e-12);
  EXPECT_NEAR(f[g.node_index("r1c5")], 0.0, 1e-12);

  const auto all = path_frequency(g, routes_over(g, {{a, b, c}, {c, b, a}}));
  EXPECT_NEAR(all[b], 1.0, 1e-12);
}

TEST(PathFrequency, ThreeOfTen) {
  const NavGraph g = generate_grid(2, 4, 1.0, 7);
  const NodeIndex a = g.node_index("r0c0"), b = g.node_index("r0c1"), c = g.node_index("r0c2");
  std::vector<std::vector<NodeIndex>> paths;
  for (int i = 0; i < 3; ++i) paths.push_back({a, b, c});
  for (int i = 0; i < 7; ++i) paths.push_back({a, b});
  EXPECT_NEAR(path_frequency(g, routes_over(g, paths))[b], 0.3, 1e-12);
}

TEST(PathFrequency, RejectsNonWalk) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  std::vector<Route> r = {{"x", {0, 8}, 8}};
  EXPECT_THROW(path_frequency(g, r), Error);
  EXPECT_THROW(path_frequency(g, {}), Error);
}

TEST(Criticality, ScoresInUnitInterval) {
  const NavGraph g = generate_grid(6, 6, 1.0, 7);
  const auto routes = generate_routes(g, 40, 4, 3);
  const auto scores = criticality_scores(g, routes, GenConfig{});
  for (const CriticalityScore& s : scores) {
    for (double v : {s.degree, s.betweenness, s.path_dependence, s.path_frequency, s.aggregate}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Routes, AreShortestWalks) {
  const NavGraph g = generate_grid(8, 8, 1.0, 7);
  const auto routes = generate_routes(g, 50, 5, 11);
  ASSERT_EQ(routes.size(), 50u);
  const auto d = rt::floyd_hops(g);
  for (const Route& r : routes) {
    validate_route(g, r);
    EXPECT_EQ(static_cast<int>(r.nodes.size()) - 1, d[r.nodes.front()][r.target]);
    EXPECT_GE(r.nodes.size(), 6u);
  }
  EXPECT_EQ(routes, generate_routes(g, 50, 5, 11));
}

TEST(Routes, RoundTrip) {
  const NavGraph g = generate_grid(5, 5, 1.0, 7);
  const auto routes = generate_routes(g, 10, 3, 2);
  EXPECT_EQ(routes_from_json(routes_to_json(routes, g), g), routes);
}

namespace {

struct Fixture15 {
  NavGraph graph = generate_grid(15, 15, 1.0, 7);
  std::vector<Route> routes = generate_routes(graph, 200, 6, 7);
  RuleCatalog catalog = rt::standard_catalog();
};

}  // namespace

TEST(BuildLevels, MonotoneAndNearTargets) {
  Fixture15 f;
  const GenConfig cfg;
  const Benchmark b = build_levels(f.graph, f.routes, f.catalog, cfg);
  for (int k = 0; k < kLevelCount; ++k) {
    const auto& l = b.levels[static_cast<std::size_t>(k)];
    EXPECT_EQ(l.level, k + 1);
    if (l.target_met) {
      EXPECT_NEAR(l.affected_instruction_fraction, cfg.coverage_targets[static_cast<std::size_t>(k)],
                  cfg.coverage_tolerance);
    }
    if (k > 0) {
      EXPECT_GT(l.affected_instruction_fraction,
                b.levels[static_cast<std::size_t>(k - 1)].affected_instruction_fraction);
    }
    EXPECT_NEAR(l.affected_instruction_fraction,
                affected_instruction_fraction(f.routes, [&] {
                  std::vector<NodeIndex> v;
                  for (const auto& p : l.placements) v.push_back(p.node);
                  return v;
                }()),
                1e-12);
  }
}

TEST(BuildLevels, LevelsAreDisjointAndTargetsGetTurnRules) {
  Fixture15 f;
  const Benchmark b = build_levels(f.graph, f.routes, f.catalog, GenConfig{});
  std::set<NodeIndex> seen;
  std::set<NodeIndex> targets;
  for (const Route& r : f.routes) targets.insert(r.target);
  for (const auto& l : b.levels) {
    for (const auto& p : l.placements) {
      EXPECT_TRUE(seen.insert(p.node).second);
      if (targets.count(p.node)) EXPECT_EQ(f.catalog.at(p.rule).kind, RuleKind::kTurnRestriction);
      EXPECT_GE(p.legibility, 0.6);
      EXPECT_LE(p.legibility, 1.0);
    }
  }
}

TEST(BuildLevels, Deterministic) {
  Fixture15 f;
  const Benchmark a = build_levels(f.graph, f.routes, f.catalog, GenConfig{});
  const Benchmark b = build_levels(f.graph, f.routes, f.catalog, GenConfig{});
  for (int k = 0; k < kLevelCount; ++k) {
    EXPECT_EQ(placements_to_json({k + 1, a.levels[static_cast<std::size_t>(k)].placements}, f.graph).dump(),
              placements_to_json({k + 1, b.levels[static_cast<std::size_t>(k)].placements}, f.graph).dump());
  }
}

TEST(BuildLevels, ZeroTargetGivesEmptyLevel) {
  Fixture15 f;
  GenConfig cfg;
  cfg.coverage_targets[0] = 0.0;
  const Benchmark b = build_levels(f.graph, f.routes, f.catalog, cfg);
  EXPECT_TRUE(b.levels[0].placements.empty());
  EXPECT_FALSE(b.levels[3].placements.empty());
}

TEST(BuildLevels, ZeroBudgetIsInfeasible) {
  Fixture15 f;
  GenConfig cfg;
  cfg.node_budget_per_level = 0;
  try {
    build_levels(f.graph, f.routes, f.catalog, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
    EXPECT_NE(std::string(e.what()).find("INFEASIBLE"), std::string::npos);
  }
}

TEST(EmitLevel, RoundTripAndEmpty) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const RuleCatalog cat = rt::standard_catalog();
  const auto dir = std::filesystem::temp_directory_path();
  CurriculumLevel l;
  l.level = 3;
  l.placements = {{4, "no_u_turn", std::nullopt, 0.9}};
  emit_level(l, g, dir / "rulenav_level_rt.json");
  const PlacementFile back = load_placements(dir / "rulenav_level_rt.json", g, cat);
  EXPECT_EQ(back.placements, l.placements);

  CurriculumLevel empty;
  emit_level(empty, g, dir / "rulenav_level_empty.json");
  const auto doc = parse_json_text(read_text_file(dir / "rulenav_level_empty.json"), "level");
  EXPECT_TRUE(doc.at("placements").is_array());
  EXPECT_TRUE(doc.at("placements").empty());
  std::filesystem::remove(dir / "rulenav_level_rt.json");
  std::filesystem::remove(dir / "rulenav_level_empty.json");
}

TEST(EmitLevel, UnwritablePath) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  try {
    emit_level(CurriculumLevel{}, g, "/nonexistent_dir_rulenav/level.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(GenConfig, JsonRoundTrip) {
  GenConfig c;
  c.weights = {0.4, 0.2, 0.2, 0.2};
  c.seed = 99;
  const GenConfig d = gen_config_from_json(gen_config_to_json(c));
  EXPECT_EQ(d.weights, c.weights);
  EXPECT_EQ(d.seed, 99u);
  EXPECT_EQ(d.coverage_targets, c.coverage_targets);
}
