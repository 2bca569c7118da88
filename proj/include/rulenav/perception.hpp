#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rulenav/nav_graph.hpp"
#include "rulenav/rules.hpp"

namespace rulenav {

/// Noise model standing in for the detector + knowledge-grounded VLM.
struct PerceptionConfig {
  double miss_rate = 0.0;
  double false_alarm_rate = 0.0;
  double misclass_rate = 0.0;
  double legibility_gate = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
  bool noiseless() const {
    return miss_rate == 0.0 && false_alarm_rate == 0.0 && misclass_rate == 0.0 &&
           legibility_gate == 0.0;
  }
};

PerceptionConfig perception_config_from_json(const nlohmann::json& doc);
nlohmann::json perception_config_to_json(const PerceptionConfig& config);

struct CropRef {
  NodeIndex node = 0;
  int slice = 0;
};

struct DetectionResult {
  int slice = 0;
  bool candidate = false;
  CropRef crop;                 // the magnified slice crop
  NodeIndex macro_node = 0;     // the panorama it was cut from
  double macro_heading = 0.0;
  /// The physical sign behind the detection; empty for a false alarm.
  std::optional<SignSighting> sign;
};

struct GroundingResult {
  std::string rule;
  double similarity = 0.0;
};

/// Coarse detector. A sign with legibility ≥ the gate is found with
/// probability 1 − miss_rate; a slice with nothing detectable raises a false
/// alarm with probability false_alarm_rate. Draws are keyed by
/// (seed, node, step, slice, sign) only.
std::vector<DetectionResult> detect(const Observation& obs, const PerceptionConfig& config,
                                    std::uint64_t step);

/// Knowledge-grounded classification of one candidate. Returns nothing when
/// a misclassification is drawn but the catalog has no other rule.
std::optional<GroundingResult> ground(const DetectionResult& detection,
                                      const RuleCatalog& catalog,
                                      const PerceptionConfig& config, std::uint64_t step,
                                      std::size_t detection_index);

/// Everything perceived at one node on one step: the rules the agent
/// believes are in force, in placement form.
struct PerceivedScene {
  NodeIndex node = 0;
  double agent_heading = 0.0;
  std::vector<DetectionResult> detections;
  std::vector<GroundingResult> groundings;
  std::vector<SignPlacement> placements;
};

/// Runs detect + ground over the whole panorama. `signed_graph` must carry
/// the level's signs (NavGraph::with_signs).
PerceivedScene perceive(const NavGraph& signed_graph, const RuleCatalog& catalog,
                        NodeIndex node, double agent_heading, std::uint64_t step,
                        const PerceptionConfig& config);

/// Mask semantics applied to the perceived rules.
bool perceived_permits(const NavGraph& graph, const RuleCatalog& catalog,
                       const PerceivedScene& scene, std::optional<EdgeIndex> in_edge,
                       EdgeIndex out_edge);

enum class SafetyToken { kSafe, kCorrectAction };

struct SafetyVerdict {
  SafetyToken token = SafetyToken::kSafe;
  /// Set with kCorrectAction when some compliant alternative exists.
  std::optional<Action> action;
  std::optional<EdgeIndex> corrective_edge;
  std::optional<std::string> violated_rule;

  bool safe() const { return token == SafetyToken::kSafe; }
};

struct GateInput {
  NodeIndex node = 0;
  std::optional<EdgeIndex> in_edge;
  double agent_heading = 0.0;
  EdgeIndex intended_edge = 0;
  std::uint64_t step = 0;
};

/// Verdict for an already perceived scene. The corrective edge is the
/// perceived-compliant out-edge nearest in heading to the intended one;
/// ties go to the clockwise (right-hand) side, then to the lower node index.
SafetyVerdict gate_scene(const NavGraph& graph, const RuleCatalog& catalog,
                         const PerceivedScene& scene, std::optional<EdgeIndex> in_edge,
                         EdgeIndex intended_edge);

/// Perceive + gate. Throws Error(kMissingEdge) if the intended edge does not
/// leave the node.
SafetyVerdict gate(const NavGraph& signed_graph, const RuleCatalog& catalog,
                   const PerceptionConfig& config, const GateInput& input);

}  // namespace rulenav
