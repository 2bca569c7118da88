#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rulenav/agent.hpp"
#include "rulenav/bench_gen.hpp"
#include "rulenav/nav_graph.hpp"
#include "rulenav/rules.hpp"
#include "rulenav/snrm.hpp"

namespace rulenav {

struct TrajectoryRecord {
  std::string episode_id;
  NodeIndex start = 0;
  std::vector<ActionRecord> steps;
  NodeIndex final_node = 0;
  Termination terminated = Termination::kMaxSteps;
  int detours = 0;
};

/// Throws Error(kValidation) when the episode does not fit the graph.
void validate_episode(const NavGraph& graph, const Episode& episode);

/// Steps the controller until the target is reached, a stop is signalled or
/// max_steps moves were made. With `violation_ends_episode` the first move
/// whose ground-truth mask is 0 is recorded and ends the episode.
TrajectoryRecord run_episode(const NavGraph& graph, const ConstraintSet& truth,
                             const Episode& episode, Controller& controller,
                             bool violation_ends_episode = true);

struct EpisodeMetrics {
  std::string episode_id;
  bool success = false;
  int spd = 0;
  int violations = 0;
  int exposure = 0;
  int steps = 0;
};

struct MetricsReport {
  std::vector<EpisodeMetrics> episodes;
  double tc = 0.0;
  double spd = 0.0;
  double cvr = 0.0;
  /// Episodes whose violations exceed their exposure count.
  std::vector<std::string> warnings;
};

/// Success is stopping on or next to the target; SPD is in hops; CVR is the
/// episode mean of violations / exposed steps (0 for unexposed episodes).
/// Throws Error(kAlignment) if records and episodes do not line up.
MetricsReport compute_metrics(std::span<const TrajectoryRecord> records, const NavGraph& graph,
                              const ConstraintSet& truth, std::span<const Episode> episodes,
                              int proximity_radius = 1);

/// One episode per route; the start heading is that of the first route edge
/// and max_steps defaults to 6 × hops + 10.
std::vector<Episode> episodes_from_routes(const NavGraph& graph, std::span<const Route> routes);

nlohmann::json episodes_to_json(std::span<const Episode> episodes, const NavGraph& graph);
std::vector<Episode> episodes_from_json(const nlohmann::json& doc, const NavGraph& graph);
std::vector<Episode> load_episodes(const std::filesystem::path& path, const NavGraph& graph);
void save_episodes(std::span<const Episode> episodes, const NavGraph& graph,
                   const std::filesystem::path& path);

}  // namespace rulenav
