#include "rulenav/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rulenav/error.hpp"
#include "rulenav/graph_algo.hpp"
#include "rulenav/json_util.hpp"

namespace rulenav {

using nlohmann::json;

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::kBase ? "base" : "detour";
}

namespace {

constexpr std::array<Termination, 7> kTerminations = {
    Termination::kReachedTarget, Termination::kMaxSteps,        Termination::kDeadEnd,
    Termination::kConflictStop,  Termination::kDetourExhausted, Termination::kViolation,
    Termination::kPolicyStopped};

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kReachedTarget: return "reached_target";
    case Termination::kMaxSteps: return "max_steps";
    case Termination::kDeadEnd: return "dead_end";
    case Termination::kConflictStop: return "conflict_stop";
    case Termination::kDetourExhausted: return "detour_exhausted";
    case Termination::kViolation: return "violation";
    case Termination::kPolicyStopped: return "policy_stopped";
  }
  return "?";
}

std::optional<Termination> parse_termination(std::string_view name) {
  for (Termination t : kTerminations) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

void validate_episode(const NavGraph& graph, const Episode& ep) {
  const auto bad = [&](const std::string& why) {
    throw Error(ErrorCode::kValidation, "episode '" + ep.id + "': " + why);
  };
  if (ep.gold_route.empty()) bad("empty gold route");
  for (NodeIndex n : ep.gold_route) {
    if (n >= graph.node_count()) bad("route node out of range");
  }
  if (ep.gold_route.front() != ep.start) bad("gold route does not begin at the start node");
  if (ep.gold_route.back() != ep.target) bad("gold route does not end at the target");
  for (std::size_t i = 0; i + 1 < ep.gold_route.size(); ++i) {
    if (!graph.find_edge(ep.gold_route[i], ep.gold_route[i + 1])) {
      bad("route nodes '" + graph.node_id(ep.gold_route[i]) + "' and '" +
          graph.node_id(ep.gold_route[i + 1]) + "' are not adjacent");
    }
  }
  if (ep.max_steps < 0) bad("max_steps must be >= 0");
  if (!std::isfinite(ep.start_heading)) bad("start_heading must be finite");
}

TrajectoryRecord run_episode(const NavGraph& graph, const ConstraintSet& truth,
                             const Episode& episode, Controller& controller,
                             bool violation_ends_episode) {
  validate_episode(graph, episode);
  TrajectoryRecord rec;
  rec.episode_id = episode.id;
  rec.start = episode.start;

  AgentState state;
  state.node = episode.start;
  state.heading = normalize_angle(episode.start_heading);
  std::optional<Termination> stop;
  while (!stop) {
    if (state.node == episode.target) {
      stop = Termination::kReachedTarget;
      break;
    }
    if (static_cast<int>(rec.steps.size()) >= episode.max_steps) {
      stop = Termination::kMaxSteps;
      break;
    }
    StepResult r = controller.step(state);
    if (r.record) {
      // Charge violations against the true rules, independent of the
      // controller's bookkeeping.
      r.record->truth_mask = mask(truth, r.record->in_edge, r.record->out_edge);
      rec.steps.push_back(*r.record);
      if (r.record->truth_mask == 0 && violation_ends_episode) stop = Termination::kViolation;
    }
    if (r.stop && !stop) stop = r.stop;
    state = std::move(r.next);
    if (!r.record && !r.stop) {
      throw Error(ErrorCode::kInvariant, "controller neither moved nor stopped");
    }
  }
  rec.final_node = state.node;
  rec.terminated = *stop;
  if (const auto* snrm = dynamic_cast<const SnrmController*>(&controller)) {
    rec.detours = snrm->detour_count();
  }
  return rec;
}

MetricsReport compute_metrics(std::span<const TrajectoryRecord> records, const NavGraph& graph,
                              const ConstraintSet& truth, std::span<const Episode> episodes,
                              int proximity_radius) {
  if (records.size() != episodes.size()) {
    throw Error(ErrorCode::kAlignment, std::to_string(records.size()) + " records for " +
                                           std::to_string(episodes.size()) + " episodes");
  }
  if (proximity_radius < 0) {
    throw Error(ErrorCode::kValidation, "proximity_radius must be >= 0");
  }
  // Nodes within the proximity radius of any constrained node.
  std::vector<char> proximal(graph.node_count(), 0);
  for (NodeIndex c : truth.constrained_nodes()) {
    const auto hops = bfs_hops(graph, c);
    for (std::size_t n = 0; n < hops.size(); ++n) {
      if (hops[n] != kUnreachable && hops[n] <= proximity_radius) proximal[n] = 1;
    }
  }

  MetricsReport report;
  double tc = 0.0, spd = 0.0, cvr = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrajectoryRecord& r = records[i];
    const Episode& ep = episodes[i];
    if (r.episode_id != ep.id) {
      throw Error(ErrorCode::kAlignment,
                  "record '" + r.episode_id + "' is aligned with episode '" + ep.id + "'");
    }
    EpisodeMetrics m;
    m.episode_id = ep.id;
    m.steps = static_cast<int>(r.steps.size());
    const auto to_target = bfs_hops(graph, ep.target);
    // Edges come in reverse pairs, so hops from the target equal hops to it.
    m.spd = to_target.at(r.final_node);
    if (m.spd == kUnreachable) throw Error(ErrorCode::kUnreachable, "final node cannot reach target");
    m.success = m.spd <= 1;
    for (const ActionRecord& a : r.steps) {
      if (proximal[a.node]) ++m.exposure;
      if (a.truth_mask == 0) ++m.violations;
    }
    if (m.violations > m.steps) {
      throw Error(ErrorCode::kInvariant, "more violations than steps in '" + ep.id + "'");
    }
    if (m.violations > m.exposure) {
      report.warnings.push_back("episode '" + ep.id + "': " + std::to_string(m.violations) +
                                " violations but exposure " + std::to_string(m.exposure));
    }
    tc += m.success ? 1.0 : 0.0;
    spd += m.spd;
    if (m.exposure > 0) cvr += static_cast<double>(m.violations) / m.exposure;
    report.episodes.push_back(std::move(m));
  }
  if (!records.empty()) {
    const double n = static_cast<double>(records.size());
    report.tc = tc / n;
    report.spd = spd / n;
    report.cvr = cvr / n;
  }
  return report;
}

namespace {

int default_max_steps(std::size_t route_nodes) {
  const int hops = route_nodes == 0 ? 0 : static_cast<int>(route_nodes) - 1;
  return 6 * hops + 10;
}

double first_heading(const NavGraph& graph, const std::vector<NodeIndex>& route) {
  if (route.size() < 2) return 0.0;
  return graph.edge(graph.edge_between(route[0], route[1])).heading;
}

}  // namespace

std::vector<Episode> episodes_from_routes(const NavGraph& graph, std::span<const Route> routes) {
  std::vector<Episode> out;
  out.reserve(routes.size());
  for (const Route& r : routes) {
    Episode ep;
    ep.id = r.id;
    ep.gold_route = r.nodes;
    ep.start = r.nodes.empty() ? 0 : r.nodes.front();
    ep.target = r.target;
    ep.start_heading = first_heading(graph, r.nodes);
    ep.max_steps = default_max_steps(r.nodes.size());
    validate_episode(graph, ep);
    out.push_back(std::move(ep));
  }
  return out;
}

json episodes_to_json(std::span<const Episode> episodes, const NavGraph& graph) {
  json doc = json::array();
  for (const Episode& ep : episodes) {
    json nodes = json::array();
    for (NodeIndex n : ep.gold_route) nodes.push_back(graph.node_id(n));
    doc.push_back({{"id", ep.id},
                   {"nodes", nodes},
                   {"target", graph.node_id(ep.target)},
                   {"start_heading", ep.start_heading},
                   {"max_steps", ep.max_steps}});
  }
  return doc;
}

std::vector<Episode> episodes_from_json(const json& doc, const NavGraph& graph) {
  // A routes file is a valid episodes file; the two extra fields default.
  std::vector<Route> routes = routes_from_json(doc, graph);
  std::vector<Episode> out = episodes_from_routes(graph, routes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string where = "episodes[" + std::to_string(i) + "]";
    out[i].start_heading = get_field_or(doc[i], "start_heading", where, out[i].start_heading);
    out[i].max_steps = get_field_or(doc[i], "max_steps", where, out[i].max_steps);
    validate_episode(graph, out[i]);
  }
  return out;
}

std::vector<Episode> load_episodes(const std::filesystem::path& path, const NavGraph& graph) {
  return episodes_from_json(parse_json_text(read_text_file(path), path.string()), graph);
}

void save_episodes(std::span<const Episode> episodes, const NavGraph& graph,
                   const std::filesystem::path& path) {
  write_text_file(path, episodes_to_json(episodes, graph).dump(1) + "\n");
}

}  // namespace rulenav
