#include "rulenav/bench_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stack>

#include "rulenav/error.hpp"
#include "rulenav/graph_algo.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/seeding.hpp"

namespace rulenav {

using nlohmann::json;

void GenConfig::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kValidation, "criticality weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kValidation, "criticality weights must sum to 1");
  }
  for (std::size_t i = 0; i < coverage_targets.size(); ++i) {
    const double t = coverage_targets[i];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kValidation, "coverage targets must lie in [0, 1]");
    }
    if (i > 0 && !(t > coverage_targets[i - 1])) {
      throw Error(ErrorCode::kValidation, "coverage targets must be strictly increasing");
    }
  }
  if (!(coverage_tolerance >= 0.0)) {
    throw Error(ErrorCode::kValidation, "coverage tolerance must be >= 0");
  }
  if (node_budget_per_level < 0) {
    throw Error(ErrorCode::kValidation, "node budget must be >= 0");
  }
  if (!(disconnection_cap > 0.0)) {
    throw Error(ErrorCode::kValidation, "disconnection cap must be positive");
  }
  if (sample_pairs < 1) throw Error(ErrorCode::kValidation, "sample_pairs must be >= 1");
  if (!(legibility_min >= 0.0 && legibility_min <= legibility_max && legibility_max <= 1.0)) {
    throw Error(ErrorCode::kValidation, "legibility range must satisfy 0 <= min <= max <= 1");
  }
}

GenConfig gen_config_from_json(const json& doc) {
  const std::string where = "gen_config";
  GenConfig c;
  if (doc.contains("weights")) {
    const json& w = require_array(doc, "weights", where);
    if (w.size() != 4) throw Error(ErrorCode::kParse, where + ".weights: expected 4 numbers");
    for (std::size_t i = 0; i < 4; ++i) c.weights[i] = w[i].get<double>();
  }
  if (doc.contains("coverage_targets")) {
    const json& t = require_array(doc, "coverage_targets", where);
    if (t.size() != kLevelCount) {
      throw Error(ErrorCode::kParse, where + ".coverage_targets: expected 4 numbers");
    }
    for (std::size_t i = 0; i < kLevelCount; ++i) c.coverage_targets[i] = t[i].get<double>();
  }
  c.coverage_tolerance = get_field_or(doc, "coverage_tolerance", where, c.coverage_tolerance);
  c.node_budget_per_level =
      get_field_or(doc, "node_budget_per_level", where, c.node_budget_per_level);
  c.disconnection_cap = get_field_or(doc, "disconnection_cap", where, c.disconnection_cap);
  c.sample_pairs = get_field_or(doc, "sample_pairs", where, c.sample_pairs);
  c.legibility_min = get_field_or(doc, "legibility_min", where, c.legibility_min);
  c.legibility_max = get_field_or(doc, "legibility_max", where, c.legibility_max);
  c.seed = get_field_or<std::uint64_t>(doc, "seed", where, c.seed);
  c.validate();
  return c;
}

json gen_config_to_json(const GenConfig& c) {
  return {{"weights", c.weights},
          {"coverage_targets", c.coverage_targets},
          {"coverage_tolerance", c.coverage_tolerance},
          {"node_budget_per_level", c.node_budget_per_level},
          {"disconnection_cap", c.disconnection_cap},
          {"sample_pairs", c.sample_pairs},
          {"legibility_min", c.legibility_min},
          {"legibility_max", c.legibility_max},
          {"seed", c.seed}};
}

std::vector<double> degree_centrality(const NavGraph& graph) {
  const std::size_t n = graph.node_count();
  if (n < 2) throw Error(ErrorCode::kDimension, "degree centrality needs at least 2 nodes");
  std::vector<double> out(n);
  for (NodeIndex v = 0; v < n; ++v) {
    out[v] = static_cast<double>(graph.out_edges(v).size()) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> betweenness_centrality(const NavGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<double> cb(n, 0.0);
  if (n < 3) return cb;

  std::vector<std::vector<NodeIndex>> preds(n);
  std::vector<double> sigma(n);
  std::vector<int> dist(n);
  std::vector<double> delta(n);
  std::vector<NodeIndex> order;
  order.reserve(n);
  std::vector<NodeIndex> queue(n);

  for (NodeIndex s = 0; s < n; ++s) {
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = s;
    while (head < tail) {
      const NodeIndex v = queue[head++];
      order.push_back(v);
      for (EdgeIndex e : graph.out_edges(v)) {
        const NodeIndex w = graph.edge(e).to;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue[tail++] = w;
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeIndex w = *it;
      for (NodeIndex v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2);
  for (double& c : cb) c /= norm;
  return cb;
}

namespace {

double path_dependence_with(const NavGraph& graph, const std::vector<int>& hops, NodeIndex node,
                            int sample_pairs, double cap, std::uint64_t seed) {
  const std::size_t n = graph.node_count();
  if (n < 3) return 0.0;
  auto rng = keyed_rng({seed, 0x70646570ull, node});
  // Other nodes, in index order, so sampling depends only on the seed.
  std::vector<NodeIndex> others;
  others.reserve(n - 1);
  for (NodeIndex v = 0; v < n; ++v) {
    if (v != node) others.push_back(v);
  }
  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
  pairs.reserve(static_cast<std::size_t>(sample_pairs));
  for (int i = 0; i < sample_pairs; ++i) {
    const NodeIndex s = others[uniform_index(rng, others.size())];
    NodeIndex t = s;
    while (t == s) t = others[uniform_index(rng, others.size())];
    pairs.emplace_back(s, t);
  }
  std::sort(pairs.begin(), pairs.end());

  double total = 0.0;
  int counted = 0;
  std::vector<int> removed_dist;
  NodeIndex current_source = static_cast<NodeIndex>(n);
  for (const auto& [s, t] : pairs) {
    const int base = hops[static_cast<std::size_t>(s) * n + t];
    if (base <= 0) continue;
    if (s != current_source) {
      removed_dist = bfs_hops(graph, s, node);
      current_source = s;
    }
    ++counted;
    const int after = removed_dist[t];
    if (after == kUnreachable) {
      total += 1.0;
    } else {
      const double inflation = static_cast<double>(after - base) / static_cast<double>(base);
      total += std::min(cap, inflation) / cap;
    }
  }
  return counted == 0 ? 0.0 : total / counted;
}

}  // namespace

double path_dependence(const NavGraph& graph, NodeIndex node, int sample_pairs, double cap,
                       std::uint64_t seed) {
  if (node >= graph.node_count()) {
    throw Error(ErrorCode::kUnknownNode, "#" + std::to_string(node));
  }
  if (sample_pairs < 1) throw Error(ErrorCode::kValidation, "sample_pairs must be >= 1");
  if (!(cap > 0.0)) throw Error(ErrorCode::kValidation, "cap must be positive");
  return path_dependence_with(graph, all_pairs_hops(graph), node, sample_pairs, cap, seed);
}

void validate_route(const NavGraph& graph, const Route& route) {
  if (route.nodes.empty()) {
    throw Error(ErrorCode::kValidation, "route '" + route.id + "' is empty");
  }
  for (NodeIndex v : route.nodes) {
    if (v >= graph.node_count()) {
      throw Error(ErrorCode::kValidation, "route '" + route.id + "' refers to an unknown node");
    }
  }
  for (std::size_t i = 1; i < route.nodes.size(); ++i) {
    if (!graph.find_edge(route.nodes[i - 1], route.nodes[i])) {
      throw Error(ErrorCode::kValidation, "route '" + route.id + "' is not a walk: no edge " +
                                              graph.node_id(route.nodes[i - 1]) + "->" +
                                              graph.node_id(route.nodes[i]));
    }
  }
  if (route.nodes.back() != route.target) {
    throw Error(ErrorCode::kValidation, "route '" + route.id + "' does not end at its target");
  }
}

std::vector<double> path_frequency(const NavGraph& graph, const std::vector<Route>& routes) {
  if (routes.empty()) throw Error(ErrorCode::kValidation, "path frequency needs routes");
  std::vector<double> freq(graph.node_count(), 0.0);
  std::vector<std::size_t> last_seen(graph.node_count(), SIZE_MAX);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const Route& route = routes[r];
    validate_route(graph, route);
    for (std::size_t i = 1; i + 1 < route.nodes.size(); ++i) {
      const NodeIndex v = route.nodes[i];
      if (last_seen[v] == r) continue;
      last_seen[v] = r;
      freq[v] += 1.0;
    }
  }
  for (double& f : freq) f /= static_cast<double>(routes.size());
  return freq;
}

std::vector<CriticalityScore> criticality_scores(const NavGraph& graph,
                                                 const std::vector<Route>& routes,
                                                 const GenConfig& config) {
  config.validate();
  const auto degree = degree_centrality(graph);
  const auto betweenness = betweenness_centrality(graph);
  const auto frequency = path_frequency(graph, routes);
  const auto hops = all_pairs_hops(graph);
  std::vector<CriticalityScore> scores(graph.node_count());
  for (NodeIndex v = 0; v < graph.node_count(); ++v) {
    CriticalityScore& s = scores[v];
    s.node = v;
    s.degree = degree[v];
    s.betweenness = betweenness[v];
    s.path_dependence = path_dependence_with(graph, hops, v, config.sample_pairs,
                                             config.disconnection_cap, config.seed);
    s.path_frequency = frequency[v];
    const auto& w = config.weights;
    s.aggregate = std::clamp(w[0] * s.degree + w[1] * s.betweenness + w[2] * s.path_dependence +
                                 w[3] * s.path_frequency,
                             0.0, 1.0);
  }
  return scores;
}

double affected_instruction_fraction(const std::vector<Route>& routes,
                                     const std::vector<NodeIndex>& nodes) {
  if (routes.empty()) return 0.0;
  std::size_t affected = 0;
  for (const Route& r : routes) {
    for (std::size_t i = 1; i + 1 < r.nodes.size(); ++i) {
      if (std::find(nodes.begin(), nodes.end(), r.nodes[i]) != nodes.end()) {
        ++affected;
        break;
      }
    }
  }
  return static_cast<double>(affected) / static_cast<double>(routes.size());
}

Benchmark build_levels(const NavGraph& graph, const std::vector<Route>& routes,
                       const RuleCatalog& catalog, const GenConfig& config) {
  config.validate();
  Benchmark bench;
  bench.scores = criticality_scores(graph, routes, config);

  std::vector<NodeIndex> ranked(graph.node_count());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(), [&](NodeIndex a, NodeIndex b) {
    return bench.scores[a].aggregate > bench.scores[b].aggregate;
  });

  // Which routes pass through each node.
  std::vector<std::vector<std::size_t>> through(graph.node_count());
  std::vector<bool> is_target(graph.node_count(), false);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const Route& route = routes[r];
    is_target[route.target] = true;
    for (std::size_t i = 1; i + 1 < route.nodes.size(); ++i) {
      auto& list = through[route.nodes[i]];
      if (list.empty() || list.back() != r) list.push_back(r);
    }
  }

  // Edge bans at a target would make the episode unwinnable, so targets only
  // receive turn restrictions.
  std::vector<std::string> any_rule = catalog.ids();
  std::vector<std::string> turn_rules;
  for (const auto& id : any_rule) {
    if (catalog.at(id).kind == RuleKind::kTurnRestriction) turn_rules.push_back(id);
  }

  const double total_routes = static_cast<double>(routes.size());
  std::vector<bool> used(graph.node_count(), false);
  bool any_met = false;
  bool any_positive = false;
  for (int li = kLevelCount - 1; li >= 0; --li) {
    CurriculumLevel& level = bench.levels[static_cast<std::size_t>(li)];
    level.level = li + 1;
    const double target = config.coverage_targets[static_cast<std::size_t>(li)];
    const double tol = config.coverage_tolerance;
    auto rng = keyed_rng({config.seed, 0x6c766c73ull, static_cast<std::uint64_t>(li)});

    std::vector<bool> covered(routes.size(), false);
    std::size_t covered_count = 0;
    std::vector<NodeIndex> chosen;
    if (target > 0.0) {
      any_positive = true;
      for (NodeIndex v : ranked) {
        if (covered_count >= target * total_routes) break;
        if (static_cast<int>(chosen.size()) >= config.node_budget_per_level) break;
        if (used[v]) continue;
        std::size_t gain = 0;
        for (std::size_t r : through[v]) gain += covered[r] ? 0 : 1;
        if (gain == 0) continue;
        if ((covered_count + gain) / total_routes > target + tol) continue;
        for (std::size_t r : through[v]) {
          if (!covered[r]) {
            covered[r] = true;
            ++covered_count;
          }
        }
        chosen.push_back(v);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    for (NodeIndex v : chosen) {
      used[v] = true;
      const auto& pool = (is_target[v] || turn_rules.empty()) ? turn_rules : any_rule;
      if (pool.empty()) continue;
      SignPlacement p;
      p.node = v;
      p.rule = pool[uniform_index(rng, pool.size())];
      p.legibility =
          config.legibility_min + (config.legibility_max - config.legibility_min) * unit_uniform(rng);
      level.placements.push_back(std::move(p));
    }
    std::vector<NodeIndex> placed;
    for (const auto& p : level.placements) placed.push_back(p.node);
    level.affected_node_fraction =
        static_cast<double>(placed.size()) / static_cast<double>(graph.node_count());
    level.affected_instruction_fraction = affected_instruction_fraction(routes, placed);
    level.target_met = std::abs(level.affected_instruction_fraction - target) <= tol + 1e-12;
    if (target > 0.0 && level.target_met) any_met = true;
  }
  if (any_positive && !any_met) {
    throw Error(ErrorCode::kInfeasible, "node budget exhausted before any coverage target was "
                                        "reached\n" + bench.budget_report(config));
  }
  return bench;
}

std::string Benchmark::budget_report(const GenConfig& config) const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const CurriculumLevel& l : levels) {
    out << "level " << l.level << ": nodes=" << l.placements.size()
        << " budget=" << config.node_budget_per_level
        << " target=" << config.coverage_targets[static_cast<std::size_t>(l.level - 1)]
        << " affected_instructions=" << l.affected_instruction_fraction
        << " affected_nodes=" << l.affected_node_fraction
        << (l.target_met ? " ok" : " INFEASIBLE") << "\n";
  }
  return out.str();
}

void emit_level(const CurriculumLevel& level, const NavGraph& graph,
                const std::filesystem::path& path) {
  save_placements({level.level, level.placements}, graph, path);
}

std::vector<Route> generate_routes(const NavGraph& graph, int count, int min_hops,
                                   std::uint64_t seed) {
  if (count < 0) throw Error(ErrorCode::kValidation, "route count must be >= 0");
  const std::size_t n = graph.node_count();
  if (n < 2) throw Error(ErrorCode::kDimension, "route generation needs at least 2 nodes");
  const auto hops = all_pairs_hops(graph);
  int longest = 0;
  for (int h : hops) longest = std::max(longest, h);
  if (min_hops > longest) {
    throw Error(ErrorCode::kValidation, "no node pair is " + std::to_string(min_hops) +
                                            " hops apart");
  }
  auto rng = keyed_rng({seed, 0x726f757465ull});
  std::vector<Route> routes;
  routes.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(routes.size()) < count) {
    const auto s = static_cast<NodeIndex>(uniform_index(rng, n));
    const auto t = static_cast<NodeIndex>(uniform_index(rng, n));
    const int d = hops[static_cast<std::size_t>(s) * n + t];
    if (s == t || d < std::max(min_hops, 1)) continue;
    Route route;
    route.id = "route-" + std::to_string(routes.size());
    route.target = t;
    route.nodes.push_back(s);
    NodeIndex cur = s;
    while (cur != t) {
      std::vector<NodeIndex> next;
      for (EdgeIndex e : graph.out_edges(cur)) {
        const NodeIndex v = graph.edge(e).to;
        if (hops[static_cast<std::size_t>(v) * n + t] ==
            hops[static_cast<std::size_t>(cur) * n + t] - 1) {
          next.push_back(v);
        }
      }
      std::sort(next.begin(), next.end());
      cur = next[uniform_index(rng, next.size())];
      route.nodes.push_back(cur);
    }
    routes.push_back(std::move(route));
  }
  return routes;
}

json routes_to_json(const std::vector<Route>& routes, const NavGraph& graph) {
  json arr = json::array();
  for (const Route& r : routes) {
    json nodes = json::array();
    for (NodeIndex v : r.nodes) nodes.push_back(graph.node_id(v));
    arr.push_back({{"id", r.id}, {"nodes", std::move(nodes)}, {"target", graph.node_id(r.target)}});
  }
  return arr;
}

std::vector<Route> routes_from_json(const json& doc, const NavGraph& graph) {
  if (!doc.is_array()) throw Error(ErrorCode::kParse, "routes: top level must be an array");
  std::vector<Route> routes;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "routes[" + std::to_string(i) + "]";
    const json& jr = doc[i];
    Route r;
    r.id = get_field<std::string>(jr, "id", where);
    for (const json& jn : require_array(jr, "nodes", where)) {
      if (!jn.is_string()) throw Error(ErrorCode::kParse, where + ".nodes: expected strings");
      r.nodes.push_back(graph.node_index(jn.get<std::string>()));
    }
    r.target = graph.node_index(get_field<std::string>(jr, "target", where));
    validate_route(graph, r);
    routes.push_back(std::move(r));
  }
  return routes;
}

std::vector<Route> load_routes(const std::filesystem::path& path, const NavGraph& graph) {
  return routes_from_json(parse_json_text(read_text_file(path), path.string()), graph);
}

void save_routes(const std::vector<Route>& routes, const NavGraph& graph,
                 const std::filesystem::path& path) {
  write_text_file(path, routes_to_json(routes, graph).dump(1) + "\n");
}

}  // namespace rulenav
