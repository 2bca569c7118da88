#include "rulenav/snrm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/seeding.hpp"

namespace rulenav {

using nlohmann::json;

void PlannerConfig::validate() const {
  if (!(backtrack_penalty > 0.0)) throw Error(ErrorCode::kValidation, "planner.lambda must be > 0");
  if (!(critical_radius > 0.0)) {
    throw Error(ErrorCode::kValidation, "planner.critical_radius must be > 0");
  }
  if (!(exit_radius > 0.0)) throw Error(ErrorCode::kValidation, "planner.exit_radius must be > 0");
  if (!(loop_similarity > 0.0 && loop_similarity <= 1.0)) {
    throw Error(ErrorCode::kValidation, "planner.tau_sim must lie in (0, 1]");
  }
  if (max_detour_steps < 0) {
    throw Error(ErrorCode::kValidation, "planner.max_detour_steps must be >= 0");
  }
  if (feature_dim < 1) throw Error(ErrorCode::kValidation, "planner.feature_dim must be >= 1");
  if (!(feature_noise >= 0.0)) {
    throw Error(ErrorCode::kValidation, "planner.feature_noise must be >= 0");
  }
}

PlannerConfig planner_config_from_json(const json& doc) {
  const std::string where = "planner";
  PlannerConfig c;
  c.backtrack_penalty = get_field_or(doc, "lambda", where, c.backtrack_penalty);
  c.critical_radius = get_field_or(doc, "critical_radius", where, c.critical_radius);
  c.loop_similarity = get_field_or(doc, "tau_sim", where, c.loop_similarity);
  c.exit_radius = get_field_or(doc, "exit_radius", where, c.exit_radius);
  c.max_detour_steps = get_field_or(doc, "max_detour_steps", where, c.max_detour_steps);
  c.feature_dim = get_field_or(doc, "feature_dim", where, c.feature_dim);
  c.feature_noise = get_field_or(doc, "feature_noise", where, c.feature_noise);
  c.validate();
  return c;
}

json planner_config_to_json(const PlannerConfig& c) {
  return {{"lambda", c.backtrack_penalty},       {"critical_radius", c.critical_radius},
          {"tau_sim", c.loop_similarity},        {"exit_radius", c.exit_radius},
          {"max_detour_steps", c.max_detour_steps}, {"feature_dim", c.feature_dim},
          {"feature_noise", c.feature_noise}};
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorCode::kDimension, "feature vectors differ in dimension");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

namespace {

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; library-independent unlike std::normal_distribution.
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

constexpr double kFeatureBandwidth = 2.0;
constexpr double kDegreeWeight = 0.1;

}  // namespace

FeatureModel::FeatureModel(const NavGraph& graph, std::uint64_t seed, int dim, double noise_stdev)
    : graph_(&graph), seed_(seed), dim_(dim), noise_(noise_stdev) {
  if (dim < 1) throw Error(ErrorCode::kDimension, "feature dimension must be >= 1");
  auto rng = keyed_rng({seed, 0x66656174ull});
  freqs_.reserve(static_cast<std::size_t>(dim));
  phases_.reserve(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const double wx = kFeatureBandwidth * standard_normal(rng);
    const double wy = kFeatureBandwidth * standard_normal(rng);
    freqs_.push_back({wx, wy});
    phases_.push_back(kTwoPi * unit_uniform(rng));
  }
}

FeatureVector FeatureModel::clean_features(NodeIndex node) const {
  FeatureVector f;
  f.values.reserve(static_cast<std::size_t>(dimension()));
  const Point2 p = graph_->node(node).position;
  const double unit = graph_->mean_edge_length();
  const double scale = std::sqrt(2.0 / dim_);
  for (int i = 0; i < dim_; ++i) {
    const auto& w = freqs_[static_cast<std::size_t>(i)];
    f.values.push_back(scale * std::cos((w.x * p.x + w.y * p.y) / unit +
                                        phases_[static_cast<std::size_t>(i)]));
  }
  std::array<double, kDegreeBins> hist{};
  const auto out = graph_->out_edges(node);
  for (EdgeIndex e : out) {
    const std::size_t deg = graph_->out_edges(graph_->edge(e).to).size();
    hist[std::min<std::size_t>(deg, kDegreeBins) - 1] += 1.0;
  }
  for (double h : hist) {
    f.values.push_back(out.empty() ? 0.0 : kDegreeWeight * h / static_cast<double>(out.size()));
  }
  return f;
}

FeatureVector FeatureModel::features(NodeIndex node, std::uint64_t step) const {
  FeatureVector f = clean_features(node);
  if (noise_ > 0.0) {
    auto rng = keyed_rng({seed_, 0x6e6f697365ull, node, step});
    for (double& v : f.values) v += noise_ * standard_normal(rng);
  }
  return f;
}

MentalMap open_mental_map(NodeIndex origin, double frame_heading, double intended_heading,
                          double unit_length, FeatureVector feature_start,
                          std::size_t conflict_route_index) {
  MentalMap map;
  map.origin_node = origin;
  map.frame_heading = frame_heading;
  map.unit_length = unit_length;
  const double expected = wrap_signed(intended_heading - frame_heading);
  map.target = {std::sin(expected), std::cos(expected)};
  map.dev = map.start;
  map.visited.emplace_back(origin, map.start);
  map.feature_start = std::move(feature_start);
  map.active = true;
  map.conflict_route_index = conflict_route_index;
  return map;
}

Point2 virtual_step(const MentalMap& map, const NavGraph& graph, EdgeIndex edge) {
  const DirectedEdge& e = graph.edge(edge);
  const double rel = e.heading - map.frame_heading;
  const double scale = e.length / map.unit_length;
  return {std::sin(rel) * scale, std::cos(rel) * scale};
}

void update_dead_reckoning(MentalMap& map, const NavGraph& graph, EdgeIndex executed) {
  const Point2 d = virtual_step(map, graph, executed);
  map.dev.x += d.x;
  map.dev.y += d.y;
  map.visited.emplace_back(graph.edge(executed).to, map.dev);
}

std::vector<DetourCandidate> make_candidates(const MentalMap& map, const NavGraph& graph,
                                             std::span<const EdgeIndex> edges) {
  std::vector<DetourCandidate> out;
  out.reserve(edges.size());
  for (EdgeIndex e : edges) {
    const Point2 d = virtual_step(map, graph, e);
    out.push_back({graph.edge(e).to, e, {map.dev.x + d.x, map.dev.y + d.y}});
  }
  return out;
}

double detour_cost(const MentalMap& map, const DetourCandidate& candidate, double penalty,
                   double radius) {
  double cost = distance(candidate.predicted, map.target);
  for (const auto& [node, point] : map.visited) {
    if (distance(candidate.predicted, point) <= radius) {
      cost += penalty;
      break;
    }
  }
  return cost;
}

namespace {

double bearing_deviation(const MentalMap& map, const DetourCandidate& c) {
  const double tx = map.target.x - map.dev.x;
  const double ty = map.target.y - map.dev.y;
  const double cx = c.predicted.x - map.dev.x;
  const double cy = c.predicted.y - map.dev.y;
  if ((tx == 0.0 && ty == 0.0) || (cx == 0.0 && cy == 0.0)) return 0.0;
  return std::abs(wrap_signed(std::atan2(cy, cx) - std::atan2(ty, tx)));
}

}  // namespace

std::size_t detour_select(const MentalMap& map, std::span<const DetourCandidate> candidates,
                          double penalty, double radius) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kEmptyCandidates, "no compliant detour candidate");
  }
  constexpr double kTie = 1e-9;
  std::size_t best = 0;
  double best_cost = detour_cost(map, candidates[0], penalty, radius);
  double best_dev = bearing_deviation(map, candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double cost = detour_cost(map, candidates[i], penalty, radius);
    const double dev = bearing_deviation(map, candidates[i]);
    bool better = cost < best_cost - kTie;
    if (!better && std::abs(cost - best_cost) <= kTie) {
      better = dev < best_dev - kTie ||
               (std::abs(dev - best_dev) <= kTie && candidates[i].node < candidates[best].node);
    }
    if (better) {
      best = i;
      best_cost = cost;
      best_dev = dev;
    }
  }
  return best;
}

bool loop_trap_check(const MentalMap& map, const FeatureVector& current,
                     const PlannerConfig& config) {
  if (!map.active || map.steps < 3) return false;
  return cosine_similarity(current, map.feature_start) > config.loop_similarity;
}

bool detour_exit_check(NodeIndex node, const MentalMap& map,
                       std::span<const NodeIndex> gold_route, const PlannerConfig& config) {
  for (std::size_t j = map.conflict_route_index + 1; j < gold_route.size(); ++j) {
    if (gold_route[j] == node) return true;
  }
  return distance(map.dev, map.target) < config.exit_radius;
}

StepResult PassThroughController::step(const AgentState& state) {
  StepResult result;
  result.next = state;
  const auto proposal = policy_->propose(state.node, state.in_edge);
  if (!proposal) {
    result.stop = Termination::kPolicyStopped;
    return result;
  }
  const DirectedEdge& e = env_.signed_graph->edge(*proposal);
  ActionRecord rec;
  rec.step = state.step;
  rec.node = state.node;
  rec.in_edge = state.in_edge;
  rec.out_edge = *proposal;
  rec.action = classify_turn(state.heading, e.heading);
  rec.truth_mask = mask(*env_.truth, state.in_edge, *proposal);
  rec.verdict = SafetyToken::kSafe;
  rec.mode = ControlMode::kBase;
  result.record = rec;
  result.next.node = e.to;
  result.next.heading = e.heading;
  result.next.in_edge = *proposal;
  result.next.step = state.step + 1;
  policy_->on_arrival(e.to);
  return result;
}

SnrmController::SnrmController(Environment env, BasePolicy& policy, const Episode& episode,
                               SnrmOptions options)
    : env_(env),
      policy_(&policy),
      route_(episode.gold_route),
      options_(std::move(options)),
      features_(*env.signed_graph, options_.feature_seed, options_.planner.feature_dim,
                options_.planner.feature_noise) {
  options_.perception.validate();
  options_.planner.validate();
  const int route_hops = route_.empty() ? 1 : static_cast<int>(route_.size()) - 1;
  max_detour_steps_ = options_.planner.max_detour_steps > 0 ? options_.planner.max_detour_steps
                                                            : 4 * std::max(route_hops, 1);
}

StepResult SnrmController::execute(const AgentState& state, EdgeIndex edge, SafetyToken verdict,
                                   std::optional<MentalMap> detour) {
  const NavGraph& graph = *env_.signed_graph;
  const DirectedEdge& e = graph.edge(edge);
  StepResult result;
  ActionRecord rec;
  rec.step = state.step;
  rec.node = state.node;
  rec.in_edge = state.in_edge;
  rec.out_edge = edge;
  rec.action = classify_turn(state.heading, e.heading);
  rec.truth_mask = mask(*env_.truth, state.in_edge, edge);
  rec.verdict = verdict;
  rec.mode = detour ? ControlMode::kDetour : ControlMode::kBase;
  result.record = rec;

  AgentState next;
  next.node = e.to;
  next.heading = e.heading;
  next.in_edge = edge;
  next.step = state.step + 1;
  policy_->on_arrival(e.to);
  for (std::size_t j = route_progress_ + 1; j < route_.size(); ++j) {
    if (route_[j] == e.to) {
      route_progress_ = j;
      break;
    }
  }

  if (detour) {
    MentalMap& map = *detour;
    update_dead_reckoning(map, graph, edge);
    ++map.steps;
    if (detour_exit_check(e.to, map, route_, options_.planner)) {
      map.active = false;
      forced_correction_ = false;
      detour.reset();
    } else if (map.steps >= max_detour_steps_) {
      result.stop = Termination::kDetourExhausted;
    } else if (loop_trap_check(map, features_.features(e.to, next.step), options_.planner)) {
      forced_correction_ = true;
    }
  }
  next.detour = std::move(detour);
  result.next = std::move(next);
  return result;
}

StepResult SnrmController::detour_step(const AgentState& state) {
  const NavGraph& graph = *env_.signed_graph;
  const MentalMap& map = *state.detour;
  const PerceivedScene scene = perceive(graph, *env_.catalog, state.node, state.heading,
                                        state.step, options_.perception);
  std::vector<EdgeIndex> allowed;
  for (EdgeIndex e : graph.out_edges(state.node)) {
    if (perceived_permits(graph, *env_.catalog, scene, state.in_edge, e)) allowed.push_back(e);
  }

  double penalty = options_.planner.backtrack_penalty;
  const bool forced = forced_correction_;
  if (forced) {
    // Loop trap: refuse to go back the way we came (unless that is the only
    // way out) and double the backtrack penalty for this one choice.
    forced_correction_ = false;
    penalty *= 2.0;
    if (state.in_edge) {
      const EdgeIndex back = graph.reverse(*state.in_edge);
      std::vector<EdgeIndex> forward;
      for (EdgeIndex e : allowed) {
        if (e != back) forward.push_back(e);
      }
      if (!forward.empty()) allowed = std::move(forward);
    }
  }
  if (allowed.empty()) {
    StepResult result;
    result.next = state;
    result.stop = Termination::kDeadEnd;
    return result;
  }

  const auto candidates = make_candidates(map, graph, allowed);
  const std::size_t chosen =
      detour_select(map, candidates, penalty, options_.planner.critical_radius);
  if (options_.on_decision) {
    DetourDecision d;
    d.frame_heading = map.frame_heading;
    d.unit_length = map.unit_length;
    d.target = map.target;
    d.dev = map.dev;
    for (const auto& [node, point] : map.visited) d.visited.push_back(point);
    d.candidates = candidates;
    d.penalty = penalty;
    d.radius = options_.planner.critical_radius;
    d.chosen = chosen;
    d.forced_correction = forced;
    options_.on_decision(d);
  }
  return execute(state, candidates[chosen].edge, SafetyToken::kSafe, *state.detour);
}

StepResult SnrmController::step(const AgentState& state) {
  if (state.detour) return detour_step(state);

  StepResult result;
  result.next = state;
  const auto proposal = policy_->propose(state.node, state.in_edge);
  if (!proposal) {
    result.stop = Termination::kPolicyStopped;
    return result;
  }
  const NavGraph& graph = *env_.signed_graph;
  const PerceivedScene scene = perceive(graph, *env_.catalog, state.node, state.heading,
                                        state.step, options_.perception);
  const SafetyVerdict verdict = gate_scene(graph, *env_.catalog, scene, state.in_edge, *proposal);
  if (verdict.safe()) return execute(state, *proposal, SafetyToken::kSafe, std::nullopt);

  if (!options_.mental_map) {
    result.stop = Termination::kConflictStop;
    return result;
  }
  if (!verdict.corrective_edge) {
    result.stop = Termination::kDeadEnd;
    return result;
  }
  ++detours_;
  MentalMap map = open_mental_map(state.node, state.heading, graph.edge(*proposal).heading,
                                  graph.mean_edge_length(),
                                  features_.features(state.node, state.step), route_progress_);
  return execute(state, *verdict.corrective_edge, SafetyToken::kCorrectAction, std::move(map));
}

}  // namespace rulenav
