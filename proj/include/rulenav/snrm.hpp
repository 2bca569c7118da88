#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rulenav/agent.hpp"
#include "rulenav/nav_graph.hpp"
#include "rulenav/perception.hpp"
#include "rulenav/rules.hpp"

namespace rulenav {

struct PlannerConfig {
  double backtrack_penalty = 5.0;  // λ
  double critical_radius = 0.5;    // r_bt, virtual units
  double loop_similarity = 0.98;   // τ_sim
  double exit_radius = 0.5;        // ε_exit, virtual units
  /// 0 means four times the gold-route length.
  int max_detour_steps = 0;
  int feature_dim = 32;
  double feature_noise = 0.002;

  void validate() const;
};

PlannerConfig planner_config_from_json(const nlohmann::json& doc);
nlohmann::json planner_config_to_json(const PlannerConfig& config);

struct FeatureVector {
  std::vector<double> values;
};

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

/// Simulated visual features of a node: random Fourier features of its
/// position (in mean-edge units) followed by a down-weighted histogram of
/// neighbour degrees, plus per-(node, step) Gaussian noise.
class FeatureModel {
 public:
  FeatureModel(const NavGraph& graph, std::uint64_t seed, int dim, double noise_stdev);

  FeatureVector features(NodeIndex node, std::uint64_t step) const;
  FeatureVector clean_features(NodeIndex node) const;
  int dimension() const { return dim_ + kDegreeBins; }

 private:
  static constexpr int kDegreeBins = 4;
  const NavGraph* graph_;
  std::uint64_t seed_;
  int dim_;
  double noise_;
  std::vector<Point2> freqs_;
  std::vector<double> phases_;
};

/// Local virtual frame opened at a rule conflict. Straight ahead at the
/// conflict is +y; a heading h maps to the direction (sin(h − frame), cos(h − frame)).
struct MentalMap {
  NodeIndex origin_node = 0;
  double frame_heading = 0.0;
  double unit_length = 1.0;
  Point2 start{0.0, 0.0};
  Point2 target{0.0, 1.0};
  Point2 dev{0.0, 0.0};
  std::vector<std::pair<NodeIndex, Point2>> visited;
  FeatureVector feature_start;
  bool active = false;
  int steps = 0;
  /// Index into the gold route of the furthest node reached at the conflict.
  std::size_t conflict_route_index = 0;
};

/// Opens a map at `origin` with the expected heading of the blocked edge.
MentalMap open_mental_map(NodeIndex origin, double frame_heading, double intended_heading,
                          double unit_length, FeatureVector feature_start,
                          std::size_t conflict_route_index);

/// Virtual displacement of traversing `edge`.
Point2 virtual_step(const MentalMap& map, const NavGraph& graph, EdgeIndex edge);

/// p_dev += virtual_step; appends (edge.to, p_dev) to the visited trace.
void update_dead_reckoning(MentalMap& map, const NavGraph& graph, EdgeIndex executed);

struct DetourCandidate {
  NodeIndex node = 0;
  EdgeIndex edge = 0;
  Point2 predicted;
};

std::vector<DetourCandidate> make_candidates(const MentalMap& map, const NavGraph& graph,
                                             std::span<const EdgeIndex> edges);

/// ‖P(C) − P_target‖ + λ·[P(C) within r_bt of a visited point].
double detour_cost(const MentalMap& map, const DetourCandidate& candidate, double penalty,
                   double radius);

/// Index of the argmin of detour_cost. Ties: smallest angle between the
/// candidate step and the bearing from p_dev toward the target, then lowest
/// node index. Throws Error(kEmptyCandidates).
std::size_t detour_select(const MentalMap& map, std::span<const DetourCandidate> candidates,
                          double penalty, double radius);

/// cos(f_curr, f_start) > τ_sim, only once three detour steps have elapsed.
bool loop_trap_check(const MentalMap& map, const FeatureVector& current,
                     const PlannerConfig& config);

/// Control returns to the base policy once the agent stands on a gold-route
/// node past the conflict point, or p_dev is within ε_exit of the target.
bool detour_exit_check(NodeIndex node, const MentalMap& map,
                       std::span<const NodeIndex> gold_route, const PlannerConfig& config);

struct AgentState {
  NodeIndex node = 0;
  double heading = 0.0;
  std::optional<EdgeIndex> in_edge;
  std::uint64_t step = 0;
  std::optional<MentalMap> detour;  // set while in detour mode

  ControlMode mode() const { return detour ? ControlMode::kDetour : ControlMode::kBase; }
};

/// One detour selection as the planner made it, for shadow checking.
struct DetourDecision {
  double frame_heading = 0.0;
  double unit_length = 1.0;
  Point2 target;
  Point2 dev;
  std::vector<Point2> visited;
  std::vector<DetourCandidate> candidates;
  double penalty = 0.0;
  double radius = 0.0;
  std::size_t chosen = 0;
  bool forced_correction = false;
};

struct StepResult {
  AgentState next;
  std::optional<ActionRecord> record;   // empty when the agent did not move
  std::optional<Termination> stop;      // set when the episode ends here
};

/// The world a controller acts in. `signed_graph` carries the level's signs;
/// `truth` is the resolved ground-truth mask used only for bookkeeping.
struct Environment {
  const NavGraph* signed_graph = nullptr;
  const RuleCatalog* catalog = nullptr;
  const ConstraintSet* truth = nullptr;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual StepResult step(const AgentState& state) = 0;
};

/// Executes the base policy as-is (no rectification).
class PassThroughController final : public Controller {
 public:
  PassThroughController(Environment env, BasePolicy& policy) : env_(env), policy_(&policy) {}
  StepResult step(const AgentState& state) override;

 private:
  Environment env_;
  BasePolicy* policy_;
};

struct SnrmOptions {
  PerceptionConfig perception;
  PlannerConfig planner;
  bool mental_map = true;  // false: stop at the first perceived conflict
  std::uint64_t feature_seed = 7;
  std::function<void(const DetourDecision&)> on_decision;
};

/// Wraps a base policy: every proposal is gated by perception; a conflict
/// opens a mental map and the detour is steered by the penalized greedy
/// selection until the exit rule hands control back.
class SnrmController final : public Controller {
 public:
  SnrmController(Environment env, BasePolicy& policy, const Episode& episode,
                 SnrmOptions options);
  StepResult step(const AgentState& state) override;

  int detour_count() const { return detours_; }

 private:
  StepResult execute(const AgentState& state, EdgeIndex edge, SafetyToken verdict,
                     std::optional<MentalMap> detour);
  StepResult detour_step(const AgentState& state);

  Environment env_;
  BasePolicy* policy_;
  std::vector<NodeIndex> route_;
  SnrmOptions options_;
  FeatureModel features_;
  int max_detour_steps_;
  std::size_t route_progress_ = 0;
  bool forced_correction_ = false;
  int detours_ = 0;
};

}  // namespace rulenav
