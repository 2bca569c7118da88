#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "json.hpp"
#include "rulenav/eval.hpp"
#include "rulenav/perception.hpp"
#include "rulenav/policies.hpp"
#include "rulenav/report_io.hpp"
#include "rulenav/snrm.hpp"

namespace rulenav {

/// Component toggles of the rectifier. Only five combinations are
/// meaningful; they are numbered as setups 1..5.
struct AblationFlags {
  bool mmvp = true;        // focused slice perception
  bool kdrg = true;        // knowledge-grounded rule classification
  bool mental_map = true;  // detour planning after a conflict

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

/// 1: nothing, 2: no KDRG, 3: no MMVP, 4: no map, 5: full.
/// Throws Error(kValidation) for any other combination or number.
int setup_from_flags(const AblationFlags& flags);
AblationFlags flags_for_setup(int setup);

/// Perception as degraded by the disabled components of `setup`.
PerceptionConfig perception_for_setup(const PerceptionConfig& base, int setup);

inline constexpr double kDegradedRate = 0.3;

struct RunPaths {
  std::filesystem::path graph;
  std::filesystem::path catalog;
  std::filesystem::path levels_dir;  // holds level_<k>.json
  std::filesystem::path episodes;
  std::filesystem::path out_dir;
};

struct RunConfig {
  RunPaths paths;
  std::vector<int> levels = {1, 2, 3, 4};
  std::vector<PolicyKind> policies = {PolicyKind::kRouteFollower};
  std::vector<bool> snrm_modes = {true};
  std::vector<int> setups = {5};
  PerceptionConfig perception;
  PlannerConfig planner;
  std::uint64_t seed = 7;
  int proximity_radius = 1;
  bool violation_ends_episode = true;
  bool write_trajectories = false;
  bool write_svg = false;

  /// Value checks only; file existence is checked by load_workspace.
  void validate() const;
};

/// Relative paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

std::filesystem::path level_file(const std::filesystem::path& levels_dir, int level);

struct LevelWorld {
  int level = 0;
  NavGraph signed_graph;
  ConstraintSet truth;
};

/// Everything a run reads, parsed and checked up front.
struct Workspace {
  NavGraph graph;
  RuleCatalog catalog;
  std::vector<Episode> episodes;
  std::map<int, LevelWorld> levels;
};

Workspace load_workspace(const RunConfig& config);

struct CellSpec {
  int level = 1;
  PolicyKind policy = PolicyKind::kRouteFollower;
  bool snrm = true;
  int setup = 5;
};

/// levels × policies × snrm modes × setups, in that nesting order.
std::vector<CellSpec> sweep_cells(const RunConfig& config);

struct CellResult {
  CellSpec spec;
  ReportRow row;
  MetricsReport metrics;
  std::vector<TrajectoryRecord> records;
};

using DecisionSink = std::function<void(const DetourDecision&)>;

/// Runs one episode of one cell. Seeds depend only on (root seed, level,
/// episode index), so every cell sees the same perception draws.
TrajectoryRecord run_cell_episode(const Workspace& ws, const RunConfig& config,
                                  const CellSpec& cell, std::size_t episode_index,
                                  const DecisionSink& sink = {});

/// Evaluates all cells on `threads` workers (0: RULENAV_THREADS or the
/// hardware count). Output order and content do not depend on scheduling.
/// The sink is called under a lock.
std::vector<CellResult> run_cells(const Workspace& ws, const RunConfig& config,
                                  const std::vector<CellSpec>& cells, unsigned threads = 0,
                                  const DecisionSink& sink = {});

unsigned default_thread_count();

/// Validates, loads, runs and writes <out_dir>/report.csv (plus optional
/// trajectories and SVG). `single_cell` rejects configs selecting more than
/// one policy, snrm mode or setup. A failed run leaves no new out_dir.
std::vector<CellResult> execute_run(const RunConfig& config, bool single_cell,
                                    unsigned threads = 0);

}  // namespace rulenav
