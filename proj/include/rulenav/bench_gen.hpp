#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rulenav/nav_graph.hpp"
#include "rulenav/rules.hpp"

namespace rulenav {

inline constexpr int kLevelCount = 4;

/// A gold route: the desk-scale stand-in for an instruction.
struct Route {
  std::string id;
  std::vector<NodeIndex> nodes;
  NodeIndex target = 0;

  friend bool operator==(const Route&, const Route&) = default;
};

struct CriticalityScore {
  NodeIndex node = 0;
  double degree = 0.0;
  double betweenness = 0.0;
  double path_dependence = 0.0;
  double path_frequency = 0.0;
  double aggregate = 0.0;
};

struct GenConfig {
  // degree, betweenness, path dependence, path frequency
  std::array<double, 4> weights = {0.25, 0.25, 0.25, 0.25};
  std::array<double, kLevelCount> coverage_targets = {0.3144, 0.5479, 0.7452, 0.9113};
  double coverage_tolerance = 0.05;
  int node_budget_per_level = 60;
  double disconnection_cap = 2.0;
  int sample_pairs = 200;
  double legibility_min = 0.6;
  double legibility_max = 1.0;
  std::uint64_t seed = 7;

  /// Throws Error(kValidation).
  void validate() const;
};

GenConfig gen_config_from_json(const nlohmann::json& doc);
nlohmann::json gen_config_to_json(const GenConfig& config);

struct CurriculumLevel {
  int level = 1;
  std::vector<SignPlacement> placements;
  double affected_node_fraction = 0.0;
  double affected_instruction_fraction = 0.0;
  bool target_met = false;
};

struct Benchmark {
  std::array<CurriculumLevel, kLevelCount> levels;
  std::vector<CriticalityScore> scores;
  /// Human-readable per-level budget/target summary.
  std::string budget_report(const GenConfig& config) const;
};

/// Out-degree / (|V| − 1). Throws Error(kDimension) for a single-node graph.
std::vector<double> degree_centrality(const NavGraph& graph);

/// Normalized directed betweenness over hop-count shortest paths (Brandes).
std::vector<double> betweenness_centrality(const NavGraph& graph);

/// Mean capped relative detour inflation over sampled (s, t) pairs when
/// `node` is removed; a pair that becomes disconnected contributes the cap.
/// Result in [0, 1].
double path_dependence(const NavGraph& graph, NodeIndex node, int sample_pairs, double cap,
                       std::uint64_t seed);

/// Fraction of routes whose interior (endpoints excluded) contains each node.
/// Throws Error(kValidation) for an empty route list or a route that is not
/// a walk in the graph.
std::vector<double> path_frequency(const NavGraph& graph, const std::vector<Route>& routes);

std::vector<CriticalityScore> criticality_scores(const NavGraph& graph,
                                                 const std::vector<Route>& routes,
                                                 const GenConfig& config);

/// Fraction of routes passing through (interior) one of `nodes`.
double affected_instruction_fraction(const std::vector<Route>& routes,
                                     const std::vector<NodeIndex>& nodes);

/// Ranks nodes by aggregate criticality and fills the four levels greedily,
/// strongest nodes to the hardest level. Levels use disjoint node sets.
/// Throws Error(kInfeasible) when no positive coverage target is reached.
Benchmark build_levels(const NavGraph& graph, const std::vector<Route>& routes,
                       const RuleCatalog& catalog, const GenConfig& config);

void emit_level(const CurriculumLevel& level, const NavGraph& graph,
                const std::filesystem::path& path);

/// Random shortest (hop-count) routes between random pairs at least
/// `min_hops` apart.
std::vector<Route> generate_routes(const NavGraph& graph, int count, int min_hops,
                                   std::uint64_t seed);

void validate_route(const NavGraph& graph, const Route& route);

nlohmann::json routes_to_json(const std::vector<Route>& routes, const NavGraph& graph);
std::vector<Route> routes_from_json(const nlohmann::json& doc, const NavGraph& graph);
std::vector<Route> load_routes(const std::filesystem::path& path, const NavGraph& graph);
void save_routes(const std::vector<Route>& routes, const NavGraph& graph,
                 const std::filesystem::path& path);

}  // namespace rulenav
