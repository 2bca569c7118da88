#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/policies.hpp"
#include "rulenav/rules.hpp"
#include "support.hpp"

using namespace rulenav;
namespace rt = rulenav::testing;

TEST(ClassifyTurn, Examples) {
  EXPECT_EQ(classify_turn(0.0, 0.0), Action::kStraight);
  EXPECT_EQ(classify_turn(kPi / 2, 0.0), Action::kRight);
  EXPECT_EQ(classify_turn(0.0, kPi), Action::kUTurn);
  EXPECT_EQ(classify_turn(0.0, kPi / 2), Action::kLeft);
}

TEST(ClassifyTurn, PartitionsTheCircle) {
  // Walk δ across (−π, π] and check the bins come in the order
  // UTurn, Right, Straight, Left, UTurn with the stated edges.
  const int n = 100000;
  for (int i = 1; i <= n; ++i) {
    const double delta = -kPi + kTwoPi * i / n;
    const Action a = classify_turn(1.0, 1.0 + delta);
    const double d = std::abs(delta);
    if (d < kPi / 6 - 1e-6) {
      EXPECT_EQ(a, Action::kStraight) << delta;
    } else if (d > 5 * kPi / 6 + 1e-6) {
      EXPECT_EQ(a, Action::kUTurn) << delta;
    } else if (d > kPi / 6 + 1e-6 && d < 5 * kPi / 6 - 1e-6) {
      EXPECT_EQ(a, delta > 0 ? Action::kLeft : Action::kRight) << delta;
    }
  }
}

TEST(RuleCatalog, NoRightTurnPermissibleSet) {
  const RuleCatalog cat = rt::standard_catalog();
  const ActionSet expected{Action::kStraight, Action::kLeft, Action::kUTurn};
  EXPECT_EQ(cat.at("no_right_turn").permissible, expected);
}

TEST(RuleCatalog, DuplicateIdRejected) {
  EXPECT_THROW(RuleCatalog({{"a", "", "", ActionSet{Action::kLeft}, RuleKind::kTurnRestriction},
                            {"a", "", "", ActionSet{Action::kLeft}, RuleKind::kTurnRestriction}}),
               Error);
}

TEST(RuleCatalog, EmptyTurnRestrictionRejected) {
  EXPECT_THROW(RuleCatalog({{"a", "", "", ActionSet{}, RuleKind::kTurnRestriction}}), Error);
}

TEST(RuleCatalog, ShippedCatalogLoads) {
  const RuleCatalog cat = load_catalog(RULENAV_DATA_DIR "/catalog.json");
  EXPECT_EQ(cat.at("no_entry").kind, RuleKind::kEdgeBan);
  EXPECT_EQ(cat.at("no_right_turn").permissible,
            (ActionSet{Action::kStraight, Action::kLeft, Action::kUTurn}));
}

TEST(RuleCatalog, UnknownKindRejected) {
  const auto doc = nlohmann::json::parse(
      R"({"categories":[{"id":"x","kind":"speed_limit","permissible_actions":[]}]})");
  EXPECT_THROW(catalog_from_json(doc), Error);
}

TEST(ResolveConstraints, NoEntryForbidsFourEdges) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const RuleCatalog cat = rt::standard_catalog();
  const NodeIndex c = g.node_index("r1c1");
  const std::vector<SignPlacement> p = {{c, "no_entry", std::nullopt, 1.0}};
  const ConstraintSet cs = resolve_constraints(g, cat, p);
  EXPECT_EQ(cs.forbidden_edges.size(), 4u);
  EXPECT_TRUE(cs.forbidden_transitions.empty());
}

TEST(ResolveConstraints, NoLeftTurnForbidsFourTransitions) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const RuleCatalog cat = rt::standard_catalog();
  const NodeIndex c = g.node_index("r1c1");
  const std::vector<SignPlacement> p = {{c, "no_left_turn", std::nullopt, 1.0}};
  const ConstraintSet cs = resolve_constraints(g, cat, p);
  EXPECT_EQ(cs.forbidden_transitions.size(), 4u);
  EXPECT_TRUE(cs.forbidden_edges.empty());
  for (std::uint64_t key : cs.forbidden_transitions) {
    const EdgeIndex in = static_cast<EdgeIndex>(key >> 32);
    const EdgeIndex out = static_cast<EdgeIndex>(key & 0xffffffffu);
    EXPECT_EQ(g.edge(in).to, g.edge(out).from);
    EXPECT_EQ(classify_turn(g.edge(in).heading, g.edge(out).heading), Action::kLeft);
  }
}

TEST(ResolveConstraints, EmptyPlacements) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  EXPECT_TRUE(resolve_constraints(g, rt::standard_catalog(), {}).empty());
}

TEST(ResolveConstraints, UnknownRuleRejected) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const std::vector<SignPlacement> p = {{0, "no_parking", std::nullopt, 1.0}};
  EXPECT_THROW(resolve_constraints(g, rt::standard_catalog(), p), Error);
}

TEST(ResolveConstraints, FacingLimitsTheBan) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const NodeIndex c = g.node_index("r1c1");
  // Governs only arrivals heading east (from r1c0).
  const std::vector<SignPlacement> p = {{c, "no_entry", 0.0, 1.0}};
  const ConstraintSet cs = resolve_constraints(g, rt::standard_catalog(), p);
  ASSERT_EQ(cs.forbidden_edges.size(), 1u);
  EXPECT_EQ(*cs.forbidden_edges.begin(), g.edge_between(g.node_index("r1c0"), c));
}

TEST(Mask, Examples) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const RuleCatalog cat = rt::standard_catalog();
  const NodeIndex c = g.node_index("r1c1");
  const NodeIndex w = g.node_index("r1c0");
  const NodeIndex n = g.node_index("r2c1");
  const NodeIndex s = g.node_index("r0c1");
  EXPECT_EQ(mask(ConstraintSet{}, std::nullopt, g.edge_between(w, c)), 1);

  const ConstraintSet ban = resolve_constraints(g, cat, std::vector<SignPlacement>{{c, "no_entry", std::nullopt, 1.0}});
  EXPECT_EQ(mask(ban, std::nullopt, g.edge_between(w, c)), 0);

  const ConstraintSet nl = resolve_constraints(g, cat, std::vector<SignPlacement>{{c, "no_left_turn", std::nullopt, 1.0}});
  const EdgeIndex in = g.edge_between(w, c);  // heading east
  EXPECT_EQ(mask(nl, in, g.edge_between(c, n)), 0);  // north is a left
  EXPECT_EQ(mask(nl, in, g.edge_between(c, s)), 1);  // south is a right
  EXPECT_EQ(mask(nl, std::nullopt, g.edge_between(c, n)), 1);
}

TEST(PrunedGraph, EmptyConstraintsKeepEverything) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const ConstraintSet none;
  const PrunedGraph pg(g, none);
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    const auto out = g.out_edges(v);
    EXPECT_EQ(pg.successors(v, std::nullopt), std::vector<EdgeIndex>(out.begin(), out.end()));
  }
}

TEST(PrunedGraph, AllOutgoingBanned) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const NodeIndex c = g.node_index("r1c1");
  ConstraintSet cs;
  for (EdgeIndex e : g.out_edges(c)) cs.forbidden_edges.insert(e);
  const PrunedGraph pg(g, cs);
  EXPECT_TRUE(pg.successors(c, std::nullopt).empty());
}

TEST(PrunedGraph, CenterNoEntryCornerToCorner) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const RuleCatalog cat = rt::standard_catalog();
  const NodeIndex c = g.node_index("r1c1");
  const std::vector<SignPlacement> p = {{c, "no_entry", std::nullopt, 1.0}};
  const ConstraintSet cs = resolve_constraints(g, cat, p);
  const auto path =
      compliant_shortest_path(g, cs, g.node_index("r0c0"), std::nullopt, g.node_index("r2c2"));
  ASSERT_TRUE(path);
  EXPECT_NEAR(path->length, 4.0, 1e-12);
  for (NodeIndex v : path->nodes) EXPECT_NE(v, c);
  const auto oracle = rt::brute_force_compliant_length(g, cat, p, g.node_index("r0c0"),
                                                       std::nullopt, g.node_index("r2c2"));
  ASSERT_TRUE(oracle);
  EXPECT_NEAR(*oracle, 4.0, 1e-12);
}

TEST(Properties, MaskMatchesPrunedSuccessorsAndOracle) {
  const RuleCatalog cat = rt::standard_catalog();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const NavGraph g = rt::random_connected_graph(9, 5, seed);
    const auto placements = rt::random_placements(g, cat, 4, seed);
    const ConstraintSet cs = resolve_constraints(g, cat, placements);
    const PrunedGraph pg(g, cs);
    for (EdgeIndex in = 0; in < g.edge_count(); ++in) {
      const NodeIndex v = g.edge(in).to;
      const auto succ = pg.successors(v, in);
      for (EdgeIndex out : g.out_edges(v)) {
        const bool listed = std::find(succ.begin(), succ.end(), out) != succ.end();
        EXPECT_EQ(mask(cs, in, out) == 1, listed);
        EXPECT_EQ(mask(cs, in, out) == 1, rt::oracle_allows(g, cat, placements, in, out))
            << "seed " << seed;
      }
    }
  }
}

TEST(Properties, ResolutionIsDeterministic) {
  const RuleCatalog cat = rt::standard_catalog();
  const NavGraph g = rt::random_connected_graph(10, 6, 3);
  const auto placements = rt::random_placements(g, cat, 6, 3);
  const ConstraintSet a = resolve_constraints(g, cat, placements);
  const ConstraintSet b = resolve_constraints(g, cat, placements);
  EXPECT_EQ(a.forbidden_edges, b.forbidden_edges);
  EXPECT_EQ(a.forbidden_transitions, b.forbidden_transitions);
}

TEST(Properties, TurnRestrictionRealizesPermissibleActions) {
  const RuleCatalog cat = rt::standard_catalog();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const NavGraph g = rt::random_connected_graph(10, 8, seed);
    for (const std::string& rule : cat.ids()) {
      const RuleCategory& r = cat.at(rule);
      if (r.kind != RuleKind::kTurnRestriction) continue;
      for (NodeIndex v = 0; v < g.node_count(); ++v) {
        const std::vector<SignPlacement> p = {{v, rule, std::nullopt, 1.0}};
        const ConstraintSet cs = resolve_constraints(g, cat, p);
        for (EdgeIndex in : g.in_edges(v)) {
          std::set<Action> realized, available;
          for (EdgeIndex out : g.out_edges(v)) {
            const Action a = classify_turn(g.edge(in).heading, g.edge(out).heading);
            available.insert(a);
            if (mask(cs, in, out) == 1) realized.insert(a);
          }
          std::set<Action> expected;
          for (Action a : available) {
            if (r.permissible.contains(a)) expected.insert(a);
          }
          EXPECT_EQ(realized, expected);
        }
      }
    }
  }
}

TEST(Placements, RoundTrip) {
  const NavGraph g = generate_grid(3, 3, 1.0, 7);
  const RuleCatalog cat = rt::standard_catalog();
  PlacementFile f{2, {{4, "no_entry", std::nullopt, 0.75}, {1, "no_left_turn", kPi / 2, 1.0}}};
  const auto path = std::filesystem::temp_directory_path() / "rulenav_place_rt.json";
  save_placements(f, g, path);
  const PlacementFile h = load_placements(path, g, cat);
  EXPECT_EQ(h.level, 2);
  EXPECT_EQ(h.placements, f.placements);
  std::filesystem::remove(path);
}
