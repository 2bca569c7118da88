#include "rulenav/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include "rulenav/error.hpp"
#include "rulenav/graph_algo.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/seeding.hpp"

namespace rulenav {

using nlohmann::json;

namespace {

constexpr std::array<AblationFlags, 5> kSetups = {{
    {false, false, false},
    {true, false, true},
    {false, true, true},
    {true, true, false},
    {true, true, true},
}};

}  // namespace

int setup_from_flags(const AblationFlags& flags) {
  for (std::size_t i = 0; i < kSetups.size(); ++i) {
    if (kSetups[i] == flags) return static_cast<int>(i) + 1;
  }
  throw Error(ErrorCode::kValidation,
              "ablation flags do not name a setup (valid: all off, no kdrg, no mmvp, "
              "no mental_map, all on)");
}

AblationFlags flags_for_setup(int setup) {
  if (setup < 1 || setup > 5) {
    throw Error(ErrorCode::kValidation, "setup must be in 1..5, got " + std::to_string(setup));
  }
  return kSetups[static_cast<std::size_t>(setup - 1)];
}

PerceptionConfig perception_for_setup(const PerceptionConfig& base, int setup) {
  const AblationFlags f = flags_for_setup(setup);
  PerceptionConfig p = base;
  if (!f.kdrg) p.misclass_rate = std::max(p.misclass_rate, kDegradedRate);
  if (!f.mmvp) p.miss_rate = std::max(p.miss_rate, kDegradedRate);
  return p;
}

void RunConfig::validate() const {
  const auto bad = [](const std::string& why) { throw Error(ErrorCode::kValidation, why); };
  if (levels.empty()) bad("levels must not be empty");
  for (int l : levels) {
    if (l < 1 || l > kLevelCount) bad("level " + std::to_string(l) + " out of range 1..4");
  }
  if (policies.empty()) bad("policies must not be empty");
  if (snrm_modes.empty()) bad("snrm modes must not be empty");
  if (setups.empty()) bad("setups must not be empty");
  for (int s : setups) flags_for_setup(s);
  if (proximity_radius < 0) bad("proximity_radius must be >= 0");
  perception.validate();
  planner.validate();
  if (paths.graph.empty()) bad("paths.graph is required");
  if (paths.catalog.empty()) bad("paths.catalog is required");
  if (paths.levels_dir.empty()) bad("paths.levels_dir is required");
  if (paths.episodes.empty()) bad("paths.episodes is required");
  if (paths.out_dir.empty()) bad("paths.out_dir is required");
}

namespace {

template <typename T, typename F>
std::vector<T> scalar_or_list(const json& doc, const char* scalar, const char* list,
                              std::vector<T> fallback, F convert) {
  if (doc.contains(scalar) && doc.contains(list)) {
    throw Error(ErrorCode::kParse,
                std::string("config: give either '") + scalar + "' or '" + list + "'");
  }
  std::vector<T> out;
  if (doc.contains(list)) {
    const json& arr = doc.at(list);
    if (!arr.is_array()) throw Error(ErrorCode::kParse, std::string("config.") + list + ": expected an array");
    for (const json& v : arr) out.push_back(convert(v, list));
    return out;
  }
  if (doc.contains(scalar)) {
    out.push_back(convert(doc.at(scalar), scalar));
    return out;
  }
  return fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return (base / path).lexically_normal();
  return path;
}

}  // namespace

RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "config: top level must be an object");
  static const std::vector<std::string> kKnown = {
      "paths",      "levels",     "policy",           "policies",
      "snrm",       "snrm_modes", "ablation",         "setups",
      "perception", "planner",    "seed",             "proximity_radius",
      "violation_ends_episode",   "trajectories",     "svg"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
      throw Error(ErrorCode::kParse, "config: unknown field '" + key + "'");
    }
  }
  RunConfig c;
  const std::string where = "config";
  if (doc.contains("paths")) {
    const json& p = doc.at("paths");
    const std::string w = where + ".paths";
    c.paths.graph = resolve(base_dir, get_field_or<std::string>(p, "graph", w, ""));
    c.paths.catalog = resolve(base_dir, get_field_or<std::string>(p, "catalog", w, ""));
    c.paths.levels_dir = resolve(base_dir, get_field_or<std::string>(p, "levels_dir", w, ""));
    c.paths.episodes = resolve(base_dir, get_field_or<std::string>(p, "episodes", w, ""));
    c.paths.out_dir = resolve(base_dir, get_field_or<std::string>(p, "out_dir", w, ""));
  }
  if (doc.contains("levels")) {
    c.levels.clear();
    for (const json& v : require_array(doc, "levels", where)) {
      if (!v.is_number_integer()) throw Error(ErrorCode::kParse, "config.levels: expected integers");
      c.levels.push_back(v.get<int>());
    }
  }
  c.policies = scalar_or_list<PolicyKind>(
      doc, "policy", "policies", c.policies, [](const json& v, const char* key) {
        if (!v.is_string()) throw Error(ErrorCode::kParse, std::string("config.") + key + ": expected strings");
        const auto k = parse_policy(v.get<std::string>());
        if (!k) {
          throw Error(ErrorCode::kValidation, "unknown policy '" + v.get<std::string>() +
                                                  "' (route_follower, geometric_sp, oracle)");
        }
        return *k;
      });
  c.snrm_modes = scalar_or_list<bool>(doc, "snrm", "snrm_modes", c.snrm_modes,
                                      [](const json& v, const char* key) {
                                        if (!v.is_boolean()) {
                                          throw Error(ErrorCode::kParse, std::string("config.") +
                                                                             key + ": expected booleans");
                                        }
                                        return v.get<bool>();
                                      });
  if (doc.contains("ablation") && doc.contains("setups")) {
    throw Error(ErrorCode::kParse, "config: give either 'ablation' or 'setups'");
  }
  if (doc.contains("ablation")) {
    const json& a = doc.at("ablation");
    AblationFlags f;
    f.mmvp = get_field_or(a, "mmvp", "config.ablation", f.mmvp);
    f.kdrg = get_field_or(a, "kdrg", "config.ablation", f.kdrg);
    f.mental_map = get_field_or(a, "mental_map", "config.ablation", f.mental_map);
    c.setups = {setup_from_flags(f)};
  }
  if (doc.contains("setups")) {
    c.setups.clear();
    for (const json& v : require_array(doc, "setups", where)) {
      if (!v.is_number_integer()) throw Error(ErrorCode::kParse, "config.setups: expected integers");
      c.setups.push_back(v.get<int>());
    }
  }
  if (doc.contains("perception")) c.perception = perception_config_from_json(doc.at("perception"));
  if (doc.contains("planner")) c.planner = planner_config_from_json(doc.at("planner"));
  c.seed = get_field_or(doc, "seed", where, c.seed);
  c.proximity_radius = get_field_or(doc, "proximity_radius", where, c.proximity_radius);
  c.violation_ends_episode =
      get_field_or(doc, "violation_ends_episode", where, c.violation_ends_episode);
  c.write_trajectories = get_field_or(doc, "trajectories", where, c.write_trajectories);
  c.write_svg = get_field_or(doc, "svg", where, c.write_svg);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json policies = json::array();
  for (PolicyKind p : c.policies) policies.push_back(std::string(to_string(p)));
  json snrm = json::array();
  for (bool s : c.snrm_modes) snrm.push_back(s);
  return {{"paths",
           {{"graph", c.paths.graph.string()},
            {"catalog", c.paths.catalog.string()},
            {"levels_dir", c.paths.levels_dir.string()},
            {"episodes", c.paths.episodes.string()},
            {"out_dir", c.paths.out_dir.string()}}},
          {"levels", c.levels},
          {"policies", policies},
          {"snrm_modes", snrm},
          {"setups", c.setups},
          {"perception", perception_config_to_json(c.perception)},
          {"planner", planner_config_to_json(c.planner)},
          {"seed", c.seed},
          {"proximity_radius", c.proximity_radius},
          {"violation_ends_episode", c.violation_ends_episode},
          {"trajectories", c.write_trajectories},
          {"svg", c.write_svg}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_json_text(read_text_file(path), path.string()),
                              path.parent_path());
}

std::filesystem::path level_file(const std::filesystem::path& levels_dir, int level) {
  return levels_dir / ("level_" + std::to_string(level) + ".json");
}

Workspace load_workspace(const RunConfig& config) {
  config.validate();
  const auto need = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::kValidation, std::string(what) + " '" + p.string() + "' does not exist");
    }
  };
  need(config.paths.graph, "graph");
  need(config.paths.catalog, "catalog");
  need(config.paths.episodes, "episodes");
  for (int l : config.levels) need(level_file(config.paths.levels_dir, l), "level file");

  Workspace ws{load_graph(config.paths.graph), load_catalog(config.paths.catalog), {}, {}};
  ws.episodes = load_episodes(config.paths.episodes, ws.graph);
  for (int l : config.levels) {
    if (ws.levels.count(l)) continue;
    const PlacementFile pf = load_placements(level_file(config.paths.levels_dir, l), ws.graph,
                                             ws.catalog);
    if (pf.level != l) {
      throw Error(ErrorCode::kValidation, "level file for level " + std::to_string(l) +
                                              " declares level " + std::to_string(pf.level));
    }
    ws.levels.emplace(l, LevelWorld{l, ws.graph.with_signs(pf.placements),
                                    resolve_constraints(ws.graph, ws.catalog, pf.placements)});
  }
  // Policies that need a reachable target fail here rather than mid-run.
  for (const Episode& ep : ws.episodes) {
    if (ws.graph.node_count() > 0 && shortest_node_path(ws.graph, ep.start, ep.target).empty()) {
      throw Error(ErrorCode::kValidation, "episode '" + ep.id + "': target unreachable");
    }
  }
  return ws;
}

std::vector<CellSpec> sweep_cells(const RunConfig& config) {
  std::vector<CellSpec> cells;
  for (int level : config.levels) {
    for (PolicyKind p : config.policies) {
      for (bool snrm : config.snrm_modes) {
        for (int setup : config.setups) cells.push_back({level, p, snrm, setup});
      }
    }
  }
  return cells;
}

TrajectoryRecord run_cell_episode(const Workspace& ws, const RunConfig& config,
                                  const CellSpec& cell, std::size_t episode_index,
                                  const DecisionSink& sink) {
  const LevelWorld& world = ws.levels.at(cell.level);
  const Episode& ep = ws.episodes.at(episode_index);
  Environment env{&world.signed_graph, &ws.catalog, &world.truth};
  auto policy = make_policy(cell.policy, ws.graph, world.truth, ep);

  const AblationFlags flags = flags_for_setup(cell.setup);
  const bool gated = cell.snrm && (flags.mmvp || flags.kdrg || flags.mental_map);
  if (!gated) {
    PassThroughController controller(env, *policy);
    return run_episode(ws.graph, world.truth, ep, controller, config.violation_ends_episode);
  }
  SnrmOptions options;
  options.perception = perception_for_setup(config.perception, cell.setup);
  options.perception.seed =
      derive_seed({config.seed, config.perception.seed, static_cast<std::uint64_t>(cell.level),
                   static_cast<std::uint64_t>(episode_index)});
  options.planner = config.planner;
  options.mental_map = flags.mental_map;
  options.feature_seed = derive_seed({config.seed, 0x66656174ull});
  options.on_decision = sink;
  SnrmController controller(env, *policy, ep, std::move(options));
  return run_episode(ws.graph, world.truth, ep, controller, config.violation_ends_episode);
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("RULENAV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CellResult> run_cells(const Workspace& ws, const RunConfig& config,
                                  const std::vector<CellSpec>& cells, unsigned threads,
                                  const DecisionSink& sink) {
  const std::size_t n_ep = ws.episodes.size();
  const std::size_t total = cells.size() * n_ep;
  std::vector<std::vector<TrajectoryRecord>> records(cells.size(),
                                                     std::vector<TrajectoryRecord>(n_ep));
  std::mutex sink_mutex;
  DecisionSink locked;
  if (sink) {
    locked = [&](const DetourDecision& d) {
      std::lock_guard lock(sink_mutex);
      sink(d);
    };
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto worker = [&] {
    while (true) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      const std::size_t c = task / n_ep, e = task % n_ep;
      try {
        records[c][e] = run_cell_episode(ws, config, cells[c], e, locked);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(total);
      }
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(total, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const LevelWorld& world = ws.levels.at(cells[c].level);
    CellResult r;
    r.spec = cells[c];
    r.metrics = compute_metrics(records[c], ws.graph, world.truth, ws.episodes,
                                config.proximity_radius);
    r.row = {cells[c].level, std::string(to_string(cells[c].policy)), cells[c].snrm,
             cells[c].setup, r.metrics.tc, r.metrics.spd, r.metrics.cvr, n_ep, config.seed};
    r.records = std::move(records[c]);
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<CellResult> execute_run(const RunConfig& config, bool single_cell, unsigned threads) {
  if (single_cell && (config.policies.size() != 1 || config.snrm_modes.size() != 1 ||
                      config.setups.size() != 1)) {
    throw Error(ErrorCode::kValidation,
                "run takes one policy, one snrm mode and one setup; use sweep for grids");
  }
  const Workspace ws = load_workspace(config);
  const auto cells = sweep_cells(config);
  auto results = run_cells(ws, config, cells, threads);

  const std::filesystem::path& out = config.paths.out_dir;
  const bool created = !std::filesystem::exists(out);
  try {
    std::filesystem::create_directories(out);
    std::vector<ReportRow> rows;
    for (const CellResult& r : results) rows.push_back(r.row);
    save_report(rows, out / "report.csv");
    for (const CellResult& r : results) {
      const std::string name = "level" + std::to_string(r.spec.level) + "_" +
                               std::string(to_string(r.spec.policy)) + "_snrm" +
                               (r.spec.snrm ? "on" : "off") + "_setup" +
                               std::to_string(r.spec.setup);
      if (config.write_trajectories) {
        emit_trajectories(r.records, ws.graph, out / "trajectories" / name);
      }
      if (config.write_svg) {
        write_text_file(out / (name + ".svg"),
                        trajectories_svg(ws.levels.at(r.spec.level).signed_graph, r.records));
      }
    }
  } catch (...) {
    if (created) {
      std::error_code ec;
      std::filesystem::remove_all(out, ec);
    }
    throw;
  }
  return results;
}

}  // namespace rulenav
