#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rulenav/nav_graph.hpp"
#include "rulenav/perception.hpp"
#include "rulenav/rules.hpp"

namespace rulenav {

/// The desk-scale abstraction of an instruction: a gold route to follow.
struct Episode {
  std::string id;
  NodeIndex start = 0;
  double start_heading = 0.0;
  std::vector<NodeIndex> gold_route;
  NodeIndex target = 0;
  int max_steps = 0;
};

enum class ControlMode : std::uint8_t { kBase, kDetour };

std::string_view to_string(ControlMode mode);

enum class Termination : std::uint8_t {
  kReachedTarget,
  kMaxSteps,
  kDeadEnd,
  kConflictStop,
  kDetourExhausted,
  kViolation,
  kPolicyStopped,
};

std::string_view to_string(Termination t);
std::optional<Termination> parse_termination(std::string_view name);

/// One executed transition.
struct ActionRecord {
  std::uint64_t step = 0;
  NodeIndex node = 0;
  std::optional<EdgeIndex> in_edge;
  EdgeIndex out_edge = 0;
  Action action = Action::kStraight;
  int truth_mask = 1;  // ground-truth validity of the transition
  SafetyToken verdict = SafetyToken::kSafe;
  ControlMode mode = ControlMode::kBase;
};

/// Interface of a frozen navigation policy: proposes the next edge from the
/// agent's current node, or nothing to stop.
class BasePolicy {
 public:
  virtual ~BasePolicy() = default;
  virtual std::string_view name() const = 0;
  virtual std::optional<EdgeIndex> propose(NodeIndex node, std::optional<EdgeIndex> in_edge) = 0;
  /// Called after every executed move, whoever chose it.
  virtual void on_arrival(NodeIndex /*node*/) {}
};

}  // namespace rulenav
