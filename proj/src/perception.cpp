#include "rulenav/perception.hpp"

#include <algorithm>
#include <cmath>

#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/seeding.hpp"

namespace rulenav {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDetectSalt = 0x646574656374ull;
constexpr std::uint64_t kGroundSalt = 0x67726f756e64ull;
constexpr double kSimilarityNoise = 0.02;
constexpr double kSpuriousSimilarityCeiling = 0.5;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kValidation, std::string("perception.") + name + " must lie in [0, 1]");
  }
}

}  // namespace

void PerceptionConfig::validate() const {
  check_probability(miss_rate, "miss_rate");
  check_probability(false_alarm_rate, "false_alarm_rate");
  check_probability(misclass_rate, "misclass_rate");
  check_probability(legibility_gate, "legibility_gate");
}

PerceptionConfig perception_config_from_json(const json& doc) {
  const std::string where = "perception";
  PerceptionConfig c;
  c.miss_rate = get_field_or(doc, "miss_rate", where, c.miss_rate);
  c.false_alarm_rate = get_field_or(doc, "false_alarm_rate", where, c.false_alarm_rate);
  c.misclass_rate = get_field_or(doc, "misclass_rate", where, c.misclass_rate);
  c.legibility_gate = get_field_or(doc, "legibility_gate", where, c.legibility_gate);
  c.seed = get_field_or<std::uint64_t>(doc, "seed", where, c.seed);
  c.validate();
  return c;
}

json perception_config_to_json(const PerceptionConfig& c) {
  return {{"miss_rate", c.miss_rate},
          {"false_alarm_rate", c.false_alarm_rate},
          {"misclass_rate", c.misclass_rate},
          {"legibility_gate", c.legibility_gate},
          {"seed", c.seed}};
}

std::vector<DetectionResult> detect(const Observation& obs, const PerceptionConfig& config,
                                    std::uint64_t step) {
  std::vector<DetectionResult> out;
  for (const SliceView& slice : obs.slices) {
    bool detectable = false;
    for (std::size_t j = 0; j < slice.visible_signs.size(); ++j) {
      const SignSighting& sign = slice.visible_signs[j];
      if (sign.legibility < config.legibility_gate) continue;
      detectable = true;
      auto rng = keyed_rng({config.seed, obs.node, step, kDetectSalt,
                            static_cast<std::uint64_t>(slice.index), j});
      if (unit_uniform(rng) < config.miss_rate) continue;
      out.push_back({slice.index, true, {obs.node, slice.index}, obs.node, obs.agent_heading, sign});
    }
    if (!detectable && config.false_alarm_rate > 0.0) {
      auto rng = keyed_rng({config.seed, obs.node, step, kDetectSalt,
                            static_cast<std::uint64_t>(slice.index), 0xFA15Eull});
      if (unit_uniform(rng) < config.false_alarm_rate) {
        out.push_back(
            {slice.index, true, {obs.node, slice.index}, obs.node, obs.agent_heading, std::nullopt});
      }
    }
  }
  return out;
}

std::optional<GroundingResult> ground(const DetectionResult& detection,
                                      const RuleCatalog& catalog,
                                      const PerceptionConfig& config, std::uint64_t step,
                                      std::size_t detection_index) {
  if (!detection.candidate) return std::nullopt;
  auto rng = keyed_rng({config.seed, detection.crop.node, step, kGroundSalt,
                        static_cast<std::uint64_t>(detection.slice), detection_index});
  const auto& ids = catalog.ids();
  const double noise = kSimilarityNoise * (2.0 * unit_uniform(rng) - 1.0);

  if (!detection.sign) {
    GroundingResult g;
    g.rule = ids[uniform_index(rng, ids.size())];
    g.similarity = std::clamp(kSpuriousSimilarityCeiling * unit_uniform(rng), 0.0, 1.0);
    return g;
  }
  const SignSighting& sign = *detection.sign;
  const bool misclassified = unit_uniform(rng) < config.misclass_rate;
  GroundingResult g;
  if (misclassified) {
    std::vector<std::string> others;
    for (const auto& id : ids) {
      if (id != sign.rule) others.push_back(id);
    }
    if (others.empty()) return std::nullopt;
    g.rule = others[uniform_index(rng, others.size())];
  } else {
    g.rule = sign.rule;
  }
  g.similarity = std::clamp(sign.legibility * (misclassified ? 0.0 : 1.0) + noise, 0.0, 1.0);
  return g;
}

PerceivedScene perceive(const NavGraph& signed_graph, const RuleCatalog& catalog,
                        NodeIndex node, double agent_heading, std::uint64_t step,
                        const PerceptionConfig& config) {
  const Observation obs = observe(signed_graph, node, agent_heading);
  PerceivedScene scene;
  scene.node = node;
  scene.agent_heading = agent_heading;
  scene.detections = detect(obs, config, step);
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const DetectionResult& det = scene.detections[i];
    auto grounded = ground(det, catalog, config, step, i);
    if (!grounded) continue;
    SignPlacement p;
    p.rule = grounded->rule;
    if (det.sign) {
      p.node = det.sign->node;
      p.facing = det.sign->facing;
      p.legibility = det.sign->legibility;
    } else {
      // A phantom sign is attributed to whatever the slice looks onto.
      const auto& edges = obs.slices[static_cast<std::size_t>(det.slice)].visible_edges;
      p.node = edges.empty() ? node : signed_graph.edge(edges.front()).to;
      p.legibility = grounded->similarity;
    }
    scene.groundings.push_back(std::move(*grounded));
    scene.placements.push_back(std::move(p));
  }
  return scene;
}

bool perceived_permits(const NavGraph& graph, const RuleCatalog& catalog,
                       const PerceivedScene& scene, std::optional<EdgeIndex> in_edge,
                       EdgeIndex out_edge) {
  return first_forbidding(graph, catalog, scene.placements, in_edge, out_edge) == nullptr;
}

SafetyVerdict gate_scene(const NavGraph& graph, const RuleCatalog& catalog,
                         const PerceivedScene& scene, std::optional<EdgeIndex> in_edge,
                         EdgeIndex intended_edge) {
  const DirectedEdge& intended = graph.edge(intended_edge);
  if (intended.from != scene.node) {
    throw Error(ErrorCode::kMissingEdge, "intended edge does not leave node '" +
                                             graph.node_id(scene.node) + "'");
  }
  SafetyVerdict verdict;
  const SignPlacement* blocker =
      first_forbidding(graph, catalog, scene.placements, in_edge, intended_edge);
  if (blocker == nullptr) return verdict;

  verdict.token = SafetyToken::kCorrectAction;
  verdict.violated_rule = blocker->rule;
  std::optional<EdgeIndex> best;
  double best_dev = 0.0;
  double best_signed = 0.0;
  for (EdgeIndex e : graph.out_edges(scene.node)) {
    if (e == intended_edge) continue;
    if (!perceived_permits(graph, catalog, scene, in_edge, e)) continue;
    const double signed_dev = wrap_signed(graph.edge(e).heading - intended.heading);
    const double dev = std::abs(signed_dev);
    bool better = false;
    if (!best) {
      better = true;
    } else if (dev < best_dev - 1e-9) {
      better = true;
    } else if (std::abs(dev - best_dev) <= 1e-9) {
      // Right-hand (clockwise, negative) deviation wins a tie.
      if (signed_dev < best_signed - 1e-9) {
        better = true;
      } else if (std::abs(signed_dev - best_signed) <= 1e-9 &&
                 graph.edge(e).to < graph.edge(*best).to) {
        better = true;
      }
    }
    if (better) {
      best = e;
      best_dev = dev;
      best_signed = signed_dev;
    }
  }
  if (best) {
    verdict.corrective_edge = best;
    verdict.action = classify_turn(scene.agent_heading, graph.edge(*best).heading);
  }
  return verdict;
}

SafetyVerdict gate(const NavGraph& signed_graph, const RuleCatalog& catalog,
                   const PerceptionConfig& config, const GateInput& input) {
  if (input.intended_edge >= signed_graph.edge_count() ||
      signed_graph.edge(input.intended_edge).from != input.node) {
    throw Error(ErrorCode::kMissingEdge, "intended edge does not leave node '" +
                                             signed_graph.node_id(input.node) + "'");
  }
  const PerceivedScene scene =
      perceive(signed_graph, catalog, input.node, input.agent_heading, input.step, config);
  return gate_scene(signed_graph, catalog, scene, input.in_edge, input.intended_edge);
}

}  // namespace rulenav
