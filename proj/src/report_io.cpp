#include "rulenav/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"

namespace rulenav {

using nlohmann::json;

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* field) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(s, &used);
    } else if constexpr (std::is_same_v<T, int>) {
      v = std::stoi(s, &used);
    } else {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      v = static_cast<T>(std::stoull(s, &used));
    }
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "report line " + std::to_string(line) + ": bad " + field +
                                       " '" + s + "'");
  }
}

}  // namespace

std::string report_to_csv(std::span<const ReportRow> rows) {
  std::string out(kReportHeader);
  out += '\n';
  for (const ReportRow& r : rows) {
    out += std::to_string(r.level) + ',' + r.policy + ',' + (r.snrm ? "on" : "off") + ',' +
           std::to_string(r.setup) + ',' + fixed(r.tc) + ',' + fixed(r.spd) + ',' +
           fixed(r.cvr) + ',' + std::to_string(r.n_episodes) + ',' + std::to_string(r.seed) +
           '\n';
  }
  return out;
}

std::vector<ReportRow> report_from_csv(std::string_view text) {
  std::vector<ReportRow> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kReportHeader) {
        throw Error(ErrorCode::kParse, "report line 1: expected header '" +
                                           std::string(kReportHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 9) {
      throw Error(ErrorCode::kParse, "report line " + std::to_string(line_no) +
                                         ": expected 9 fields, got " + std::to_string(f.size()));
    }
    ReportRow r;
    r.level = parse_number<int>(f[0], line_no, "level");
    r.policy = f[1];
    if (f[2] != "on" && f[2] != "off") {
      throw Error(ErrorCode::kParse, "report line " + std::to_string(line_no) + ": bad snrm '" +
                                         f[2] + "'");
    }
    r.snrm = f[2] == "on";
    r.setup = parse_number<int>(f[3], line_no, "setup");
    r.tc = parse_number<double>(f[4], line_no, "tc");
    r.spd = parse_number<double>(f[5], line_no, "spd");
    r.cvr = parse_number<double>(f[6], line_no, "cvr");
    r.n_episodes = parse_number<std::size_t>(f[7], line_no, "n_episodes");
    r.seed = parse_number<std::uint64_t>(f[8], line_no, "seed");
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::kParse, "report is empty (no header)");
  return rows;
}

void save_report(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  write_text_file(path, report_to_csv(rows));
}

std::vector<ReportRow> load_report(const std::filesystem::path& path) {
  return report_from_csv(read_text_file(path));
}

json trajectory_to_json(const TrajectoryRecord& record, const NavGraph& graph) {
  json steps = json::array();
  for (const ActionRecord& a : record.steps) {
    json in = nullptr;
    if (a.in_edge) {
      const DirectedEdge& e = graph.edge(*a.in_edge);
      in = json::array({graph.node_id(e.from), graph.node_id(e.to)});
    }
    steps.push_back({{"step", a.step},
                     {"node", graph.node_id(a.node)},
                     {"in_edge", in},
                     {"next", graph.node_id(graph.edge(a.out_edge).to)},
                     {"action", std::string(to_string(a.action))},
                     {"mask", a.truth_mask},
                     {"verdict", a.verdict == SafetyToken::kSafe ? "safe" : "correct_action"},
                     {"mode", std::string(to_string(a.mode))}});
  }
  return {{"episode", record.episode_id},
          {"start", graph.node_id(record.start)},
          {"steps", steps},
          {"final_node", graph.node_id(record.final_node)},
          {"terminated", std::string(to_string(record.terminated))},
          {"detours", record.detours}};
}

TrajectoryRecord trajectory_from_json(const json& doc, const NavGraph& graph) {
  const std::string where = "trajectory";
  TrajectoryRecord r;
  r.episode_id = get_field<std::string>(doc, "episode", where);
  r.start = graph.node_index(get_field<std::string>(doc, "start", where));
  r.final_node = graph.node_index(get_field<std::string>(doc, "final_node", where));
  const auto term = parse_termination(get_field<std::string>(doc, "terminated", where));
  if (!term) throw Error(ErrorCode::kParse, where + ".terminated: unknown value");
  r.terminated = *term;
  r.detours = get_field_or(doc, "detours", where, 0);
  const json& steps = require_array(doc, "steps", where);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string w = where + ".steps[" + std::to_string(i) + "]";
    const json& js = steps[i];
    ActionRecord a;
    a.step = get_field<std::uint64_t>(js, "step", w);
    a.node = graph.node_index(get_field<std::string>(js, "node", w));
    if (js.contains("in_edge") && !js.at("in_edge").is_null()) {
      const json& in = js.at("in_edge");
      if (!in.is_array() || in.size() != 2) throw Error(ErrorCode::kParse, w + ".in_edge: bad");
      a.in_edge = graph.edge_between(graph.node_index(in[0].get<std::string>()),
                                     graph.node_index(in[1].get<std::string>()));
    }
    a.out_edge =
        graph.edge_between(a.node, graph.node_index(get_field<std::string>(js, "next", w)));
    const auto action = parse_action(get_field<std::string>(js, "action", w));
    if (!action) throw Error(ErrorCode::kParse, w + ".action: unknown value");
    a.action = *action;
    a.truth_mask = get_field<int>(js, "mask", w);
    const std::string verdict = get_field<std::string>(js, "verdict", w);
    if (verdict != "safe" && verdict != "correct_action") {
      throw Error(ErrorCode::kParse, w + ".verdict: unknown value");
    }
    a.verdict = verdict == "safe" ? SafetyToken::kSafe : SafetyToken::kCorrectAction;
    const std::string mode = get_field<std::string>(js, "mode", w);
    if (mode != "base" && mode != "detour") throw Error(ErrorCode::kParse, w + ".mode: bad");
    a.mode = mode == "base" ? ControlMode::kBase : ControlMode::kDetour;
    r.steps.push_back(a);
  }
  return r;
}

void emit_trajectories(std::span<const TrajectoryRecord> records, const NavGraph& graph,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const TrajectoryRecord& r : records) {
    write_text_file(dir / (r.episode_id + ".json"), trajectory_to_json(r, graph).dump(1) + "\n");
  }
}

std::string trajectories_svg(const NavGraph& graph, std::span<const TrajectoryRecord> records) {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const Node& n : graph.nodes()) {
    min_x = std::min(min_x, n.position.x);
    min_y = std::min(min_y, n.position.y);
    max_x = std::max(max_x, n.position.x);
    max_y = std::max(max_y, n.position.y);
  }
  const double unit = graph.mean_edge_length();
  const double pad = unit;
  const double scale = 40.0 / unit;
  const auto sx = [&](double x) { return fixed((x - min_x + pad) * scale); };
  // SVG y grows downward; flip so +y points up as in the graph frame.
  const auto sy = [&](double y) { return fixed((max_y - y + pad) * scale); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << fixed((max_x - min_x + 2 * pad) * scale) << "\" height=\""
      << fixed((max_y - min_y + 2 * pad) * scale) << "\">\n";
  out << "<g stroke=\"#bbbbbb\" stroke-width=\"1\">\n";
  for (const DirectedEdge& e : graph.edges()) {
    if (e.from > e.to) continue;
    const Point2 a = graph.node(e.from).position;
    const Point2 b = graph.node(e.to).position;
    out << "<line x1=\"" << sx(a.x) << "\" y1=\"" << sy(a.y) << "\" x2=\"" << sx(b.x)
        << "\" y2=\"" << sy(b.y) << "\"/>\n";
  }
  out << "</g>\n";
  for (const Node& n : graph.nodes()) {
    if (n.signs.empty()) continue;
    out << "<circle cx=\"" << sx(n.position.x) << "\" cy=\"" << sy(n.position.y)
        << "\" r=\"4\" fill=\"#d62728\"/>\n";
  }
  for (const TrajectoryRecord& r : records) {
    out << "<polyline data-episode=\"" << r.episode_id
        << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-opacity=\"0.5\" points=\"";
    const Point2 s = graph.node(r.start).position;
    out << sx(s.x) << ',' << sy(s.y);
    for (const ActionRecord& a : r.steps) {
      const Point2 p = graph.node(graph.edge(a.out_edge).to).position;
      out << ' ' << sx(p.x) << ',' << sy(p.y);
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace rulenav
