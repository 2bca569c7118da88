#include "rulenav/rules.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"

namespace rulenav {

using nlohmann::json;

std::string_view to_string(Action a) {
  switch (a) {
    case Action::kStraight: return "straight";
    case Action::kLeft: return "left";
    case Action::kRight: return "right";
    case Action::kUTurn: return "uturn";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view name) {
  for (Action a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::vector<Action> ActionSet::to_vector() const {
  std::vector<Action> out;
  for (Action a : kAllActions) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

RuleCatalog::RuleCatalog(std::vector<RuleCategory> categories) {
  if (categories.empty()) throw Error(ErrorCode::kValidation, "rule catalog is empty");
  for (RuleCategory& c : categories) {
    if (c.id.empty()) throw Error(ErrorCode::kValidation, "rule category with empty id");
    if (c.kind == RuleKind::kTurnRestriction) {
      if (c.permissible.empty()) {
        throw Error(ErrorCode::kValidation,
                    "category '" + c.id + "': turn restriction with no permissible actions");
      }
      if (c.permissible.is_full()) {
        throw Error(ErrorCode::kValidation,
                    "category '" + c.id + "': turn restriction permits every action");
      }
    }
    const std::string id = c.id;
    if (!categories_.emplace(id, std::move(c)).second) {
      throw Error(ErrorCode::kValidation, "duplicate rule id '" + id + "'");
    }
    ids_.push_back(id);
  }
  std::sort(ids_.begin(), ids_.end());
}

const RuleCategory* RuleCatalog::find(std::string_view id) const {
  auto it = categories_.find(id);
  return it == categories_.end() ? nullptr : &it->second;
}

const RuleCategory& RuleCatalog::at(std::string_view id) const {
  if (const RuleCategory* c = find(id)) return *c;
  throw Error(ErrorCode::kUnknownRule, "'" + std::string(id) + "'");
}

Action classify_turn(double arrival_heading, double departure_heading) {
  constexpr double kStraightLimit = kPi / 6.0;
  constexpr double kUTurnLimit = 5.0 * kPi / 6.0;
  const double delta = wrap_signed(departure_heading - arrival_heading);
  // Bin edges get a hair of slack so lattice turns computed through atan2
  // land where exact arithmetic would put them.
  constexpr double kEps = 1e-9;
  if (std::abs(delta) <= kStraightLimit + kEps) return Action::kStraight;
  if (std::abs(delta) >= kUTurnLimit - kEps) return Action::kUTurn;
  return delta > 0.0 ? Action::kLeft : Action::kRight;
}

std::vector<NodeIndex> ConstraintSet::constrained_nodes() const {
  std::set<NodeIndex> nodes;
  for (const SignPlacement& p : source_placements) nodes.insert(p.node);
  return {nodes.begin(), nodes.end()};
}

namespace {

bool facing_matches(const std::optional<double>& facing, double heading, int slice_count) {
  if (!facing) return true;
  return std::abs(wrap_signed(heading - *facing)) <= kPi / slice_count + 1e-9;
}

}  // namespace

bool placement_forbids(const NavGraph& graph, const RuleCategory& rule,
                       const SignPlacement& placement, std::optional<EdgeIndex> in,
                       EdgeIndex out) {
  const DirectedEdge& out_edge = graph.edge(out);
  const int k = graph.slice_count();
  if (rule.kind == RuleKind::kEdgeBan) {
    return out_edge.to == placement.node && facing_matches(placement.facing, out_edge.heading, k);
  }
  if (!in) return false;
  const DirectedEdge& in_edge = graph.edge(*in);
  if (in_edge.to != placement.node || out_edge.from != placement.node) return false;
  if (!facing_matches(placement.facing, in_edge.heading, k)) return false;
  return !rule.permissible.contains(classify_turn(in_edge.heading, out_edge.heading));
}

const SignPlacement* first_forbidding(const NavGraph& graph, const RuleCatalog& catalog,
                                      std::span<const SignPlacement> placements,
                                      std::optional<EdgeIndex> in, EdgeIndex out) {
  for (const SignPlacement& p : placements) {
    if (placement_forbids(graph, catalog.at(p.rule), p, in, out)) return &p;
  }
  return nullptr;
}

ConstraintSet resolve_constraints(const NavGraph& graph, const RuleCatalog& catalog,
                                  std::span<const SignPlacement> placements) {
  ConstraintSet cs;
  cs.source_placements.assign(placements.begin(), placements.end());
  for (const SignPlacement& p : placements) {
    if (p.node >= graph.node_count()) {
      throw Error(ErrorCode::kUnknownNode, "placement refers to node #" + std::to_string(p.node));
    }
    const RuleCategory& rule = catalog.at(p.rule);
    if (rule.kind == RuleKind::kEdgeBan) {
      for (EdgeIndex e : graph.in_edges(p.node)) {
        if (placement_forbids(graph, rule, p, std::nullopt, e)) cs.forbidden_edges.insert(e);
      }
    } else {
      for (EdgeIndex in : graph.in_edges(p.node)) {
        for (EdgeIndex out : graph.out_edges(p.node)) {
          if (placement_forbids(graph, rule, p, in, out)) {
            cs.forbidden_transitions.insert(ConstraintSet::transition_key(in, out));
          }
        }
      }
    }
  }
  return cs;
}

int mask(const ConstraintSet& constraints, std::optional<EdgeIndex> in_edge, EdgeIndex out_edge) {
  if (constraints.forbidden_edges.count(out_edge) != 0) return 0;
  if (in_edge && constraints.is_transition_forbidden(*in_edge, out_edge)) return 0;
  return 1;
}

std::vector<EdgeIndex> PrunedGraph::successors(NodeIndex at,
                                               std::optional<EdgeIndex> in_edge) const {
  std::vector<EdgeIndex> out;
  for (EdgeIndex e : graph_->out_edges(at)) {
    if (mask(*constraints_, in_edge, e) == 1) out.push_back(e);
  }
  return out;
}

RuleCatalog catalog_from_json(const json& doc) {
  const json& jcats = require_array(doc, "categories", "catalog");
  std::vector<RuleCategory> cats;
  for (std::size_t i = 0; i < jcats.size(); ++i) {
    const json& jc = jcats[i];
    std::string where = "catalog.categories[" + std::to_string(i) + "]";
    RuleCategory c;
    c.id = get_field<std::string>(jc, "id", where);
    where += " ('" + c.id + "')";
    c.visual_descriptor = get_field_or<std::string>(jc, "visual_descriptor", where, "");
    c.semantic_imperative = get_field_or<std::string>(jc, "semantic_imperative", where, "");
    const auto kind = get_field<std::string>(jc, "kind", where);
    if (kind == "edge_ban") {
      c.kind = RuleKind::kEdgeBan;
    } else if (kind == "turn_restriction") {
      c.kind = RuleKind::kTurnRestriction;
    } else {
      throw Error(ErrorCode::kValidation, where + ": unknown kind '" + kind + "'");
    }
    const json& acts = require_array(jc, "permissible_actions", where);
    for (const json& a : acts) {
      if (!a.is_string()) throw Error(ErrorCode::kParse, where + ": action names must be strings");
      auto parsed = parse_action(a.get<std::string>());
      if (!parsed) {
        throw Error(ErrorCode::kValidation,
                    where + ": unknown action '" + a.get<std::string>() + "'");
      }
      c.permissible.insert(*parsed);
    }
    cats.push_back(std::move(c));
  }
  return RuleCatalog(std::move(cats));
}

RuleCatalog load_catalog(const std::filesystem::path& path) {
  return catalog_from_json(parse_json_text(read_text_file(path), path.string()));
}

PlacementFile placements_from_json(const json& doc, const NavGraph& graph,
                                   const RuleCatalog& catalog) {
  PlacementFile file;
  file.level = get_field<int>(doc, "level", "placements");
  const json& jps = require_array(doc, "placements", "placements");
  for (std::size_t i = 0; i < jps.size(); ++i) {
    const std::string where = "placements[" + std::to_string(i) + "]";
    const json& jp = jps[i];
    SignPlacement p;
    p.node = graph.node_index(get_field<std::string>(jp, "node", where));
    p.rule = get_field<std::string>(jp, "rule", where);
    catalog.at(p.rule);
    if (!jp.contains("facing")) throw Error(ErrorCode::kParse, where + ".facing: missing field");
    const json& jf = jp.at("facing");
    if (jf.is_string()) {
      if (jf.get<std::string>() != "all") {
        throw Error(ErrorCode::kParse, where + ".facing: expected a number or \"all\"");
      }
    } else if (jf.is_number()) {
      const double f = jf.get<double>();
      if (!(f >= 0.0 && f < kTwoPi)) {
        throw Error(ErrorCode::kInvariant, where + ".facing: outside [0, 2pi)");
      }
      p.facing = f;
    } else {
      throw Error(ErrorCode::kParse, where + ".facing: expected a number or \"all\"");
    }
    p.legibility = get_field_or<double>(jp, "legibility", where, 1.0);
    if (!(p.legibility >= 0.0 && p.legibility <= 1.0)) {
      throw Error(ErrorCode::kInvariant, where + ".legibility: outside [0, 1]");
    }
    file.placements.push_back(std::move(p));
  }
  return file;
}

json placements_to_json(const PlacementFile& file, const NavGraph& graph) {
  json jps = json::array();
  for (const SignPlacement& p : file.placements) {
    json jp;
    jp["node"] = graph.node_id(p.node);
    jp["rule"] = p.rule;
    if (p.facing) {
      jp["facing"] = *p.facing;
    } else {
      jp["facing"] = "all";
    }
    jp["legibility"] = p.legibility;
    jps.push_back(std::move(jp));
  }
  return {{"level", file.level}, {"placements", std::move(jps)}};
}

PlacementFile load_placements(const std::filesystem::path& path, const NavGraph& graph,
                              const RuleCatalog& catalog) {
  return placements_from_json(parse_json_text(read_text_file(path), path.string()), graph,
                              catalog);
}

void save_placements(const PlacementFile& file, const NavGraph& graph,
                     const std::filesystem::path& path) {
  write_text_file(path, placements_to_json(file, graph).dump(1) + "\n");
}

}  // namespace rulenav
