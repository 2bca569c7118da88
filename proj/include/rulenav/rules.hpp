#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "rulenav/nav_graph.hpp"

namespace rulenav {

enum class Action : std::uint8_t { kStraight = 0, kLeft = 1, kRight = 2, kUTurn = 3 };

inline constexpr std::array<Action, 4> kAllActions = {Action::kStraight, Action::kLeft,
                                                      Action::kRight, Action::kUTurn};

std::string_view to_string(Action a);
std::optional<Action> parse_action(std::string_view name);

/// Subset of the four discrete actions.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr ActionSet(std::initializer_list<Action> actions) {
    for (Action a : actions) insert(a);
  }
  static constexpr ActionSet all() {
    return {Action::kStraight, Action::kLeft, Action::kRight, Action::kUTurn};
  }

  constexpr void insert(Action a) { bits_ |= bit(a); }
  constexpr bool contains(Action a) const { return (bits_ & bit(a)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool is_full() const { return bits_ == 0xF; }
  constexpr ActionSet intersect(ActionSet o) const { return from_bits(bits_ & o.bits_); }
  std::vector<Action> to_vector() const;

  friend constexpr bool operator==(ActionSet, ActionSet) = default;

 private:
  static constexpr std::uint8_t bit(Action a) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a));
  }
  static constexpr ActionSet from_bits(std::uint8_t b) {
    ActionSet s;
    s.bits_ = b;
    return s;
  }
  std::uint8_t bits_ = 0;
};

enum class RuleKind { kEdgeBan, kTurnRestriction };

struct RuleCategory {
  std::string id;
  std::string visual_descriptor;
  std::string semantic_imperative;
  ActionSet permissible;
  RuleKind kind = RuleKind::kTurnRestriction;
};

/// Validated, immutable set of rule categories keyed by id.
class RuleCatalog {
 public:
  explicit RuleCatalog(std::vector<RuleCategory> categories);

  const RuleCategory* find(std::string_view id) const;
  /// Throws Error(kUnknownRule).
  const RuleCategory& at(std::string_view id) const;
  std::size_t size() const { return categories_.size(); }
  /// Ids in sorted order; the order used whenever a rule is drawn at random.
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::map<std::string, RuleCategory, std::less<>> categories_;
  std::vector<std::string> ids_;
};

/// Signed relative heading δ ∈ (−π, π] binned at ±π/6 and ±5π/6; positive δ
/// (counter-clockwise) is Left.
Action classify_turn(double arrival_heading, double departure_heading);

/// Edge-ban and turn-restriction sets derived from sign placements, i.e. the
/// validity mask over (in-edge, out-edge) transitions.
struct ConstraintSet {
  std::unordered_set<EdgeIndex> forbidden_edges;
  std::unordered_set<std::uint64_t> forbidden_transitions;
  std::vector<SignPlacement> source_placements;

  static std::uint64_t transition_key(EdgeIndex in, EdgeIndex out) {
    return (static_cast<std::uint64_t>(in) << 32) | out;
  }
  bool is_transition_forbidden(EdgeIndex in, EdgeIndex out) const {
    return forbidden_transitions.count(transition_key(in, out)) != 0;
  }
  bool empty() const { return forbidden_edges.empty() && forbidden_transitions.empty(); }
  /// Sorted, de-duplicated nodes carrying at least one placement.
  std::vector<NodeIndex> constrained_nodes() const;
};

/// Whether one placement forbids the transition `in` → `out` (in absent at
/// episode start). The single source of truth for rule semantics:
///  - EdgeBan at v forbids every edge entering v whose heading matches the
///    facing within ±π/K (any edge into v for an all-approach sign).
///  - TurnRestriction at v forbids (in, out) through v when in's heading
///    matches the facing and classify_turn(in, out) is not permissible.
bool placement_forbids(const NavGraph& graph, const RuleCategory& rule,
                       const SignPlacement& placement, std::optional<EdgeIndex> in,
                       EdgeIndex out);

/// Same predicate folded over a list of placements, for transitions that
/// are checked one at a time without resolving a full ConstraintSet.
/// Returns the first placement that forbids, if any.
const SignPlacement* first_forbidding(const NavGraph& graph, const RuleCatalog& catalog,
                                      std::span<const SignPlacement> placements,
                                      std::optional<EdgeIndex> in, EdgeIndex out);

ConstraintSet resolve_constraints(const NavGraph& graph, const RuleCatalog& catalog,
                                  std::span<const SignPlacement> placements);

/// 1 if the transition is rule-compliant, 0 otherwise.
int mask(const ConstraintSet& constraints, std::optional<EdgeIndex> in_edge, EdgeIndex out_edge);

/// Traversal view of the semantically pruned graph: successor enumeration
/// filtered by the mask. Holds references; both arguments must outlive it.
class PrunedGraph {
 public:
  PrunedGraph(const NavGraph& graph, const ConstraintSet& constraints)
      : graph_(&graph), constraints_(&constraints) {}

  std::vector<EdgeIndex> successors(NodeIndex at, std::optional<EdgeIndex> in_edge) const;
  const NavGraph& graph() const { return *graph_; }
  const ConstraintSet& constraints() const { return *constraints_; }

 private:
  const NavGraph* graph_;
  const ConstraintSet* constraints_;
};

RuleCatalog catalog_from_json(const nlohmann::json& doc);
RuleCatalog load_catalog(const std::filesystem::path& path);

/// The placement file of one curriculum level.
struct PlacementFile {
  int level = 0;
  std::vector<SignPlacement> placements;
};

PlacementFile placements_from_json(const nlohmann::json& doc, const NavGraph& graph,
                                   const RuleCatalog& catalog);
nlohmann::json placements_to_json(const PlacementFile& file, const NavGraph& graph);
PlacementFile load_placements(const std::filesystem::path& path, const NavGraph& graph,
                              const RuleCatalog& catalog);
void save_placements(const PlacementFile& file, const NavGraph& graph,
                     const std::filesystem::path& path);

}  // namespace rulenav
