#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rulenav/eval.hpp"
#include "rulenav/nav_graph.hpp"

namespace rulenav {

/// One cell of a run or sweep.
struct ReportRow {
  int level = 0;
  std::string policy;
  bool snrm = false;
  int setup = 5;
  double tc = 0.0;
  double spd = 0.0;
  double cvr = 0.0;
  std::size_t n_episodes = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline constexpr std::string_view kReportHeader =
    "level,policy,snrm,setup,tc,spd,cvr,n_episodes,seed";

/// Doubles are written with 6 fixed decimals, so a reloaded report equals
/// the original up to that rounding.
std::string report_to_csv(std::span<const ReportRow> rows);
/// Throws Error(kParse) with the line number on malformed input.
std::vector<ReportRow> report_from_csv(std::string_view text);
void save_report(std::span<const ReportRow> rows, const std::filesystem::path& path);
std::vector<ReportRow> load_report(const std::filesystem::path& path);

nlohmann::json trajectory_to_json(const TrajectoryRecord& record, const NavGraph& graph);
TrajectoryRecord trajectory_from_json(const nlohmann::json& doc, const NavGraph& graph);

/// Writes <dir>/<episode id>.json for every record.
void emit_trajectories(std::span<const TrajectoryRecord> records, const NavGraph& graph,
                       const std::filesystem::path& dir);

/// Graph edges in grey and one polyline per trajectory.
std::string trajectories_svg(const NavGraph& graph, std::span<const TrajectoryRecord> records);

}  // namespace rulenav
