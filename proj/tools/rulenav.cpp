// rulenav: graph generation, benchmark construction, score filtering and
// evaluation runs from the command line.
//
// Exit codes: 0 success, 1 validation or runtime error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include "CLI11.hpp"
#include "rulenav/bench_gen.hpp"
#include "rulenav/error.hpp"
#include "rulenav/eval.hpp"
#include "rulenav/experiment.hpp"
#include "rulenav/gmm.hpp"
#include "rulenav/json_util.hpp"
#include "rulenav/nav_graph.hpp"
#include "rulenav/report_io.hpp"
#include "rulenav/rules.hpp"

namespace fs = std::filesystem;
using namespace rulenav;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct GenGraphArgs {
  std::string grid;
  std::uint64_t seed = 7;
  double edge_length = 1.0;
  double jitter = 0.0;
  std::string out;
};

struct GenRoutesArgs {
  std::string graph;
  int count = 200;
  int min_hops = 6;
  std::uint64_t seed = 7;
  std::string out;
};

struct GenBenchArgs {
  std::string graph;
  std::string routes;
  std::string catalog;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct FilterArgs {
  std::string in;
  std::string out;
  int max_iter = 200;
  double tol = 1e-8;
  std::uint64_t seed = 7;
};

struct RunArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool dump_config = false;
};

struct ReportArgs {
  std::string in;
  std::string format = "table";
};

void write_new_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, content);
}

int cmd_gen_graph(const GenGraphArgs& a) {
  static const std::regex kGrid(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(a.grid, m, kGrid)) {
    throw Error(ErrorCode::kValidation, "--grid expects ROWSxCOLS, got '" + a.grid + "'");
  }
  const int rows = std::stoi(m[1]);
  const int cols = std::stoi(m[2]);
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw Error(ErrorCode::kValidation, "--grid needs at least two nodes");
  }
  const NavGraph g = generate_grid(rows, cols, a.edge_length, a.seed, a.jitter);
  write_new_file(a.out, graph_to_json_text(g));
  std::cout << "wrote " << a.out << ": " << g.node_count() << " nodes, " << g.edge_count()
            << " directed edges\n";
  return 0;
}

int cmd_gen_routes(const GenRoutesArgs& a) {
  const NavGraph g = load_graph(a.graph);
  const auto routes = generate_routes(g, a.count, a.min_hops, a.seed);
  const auto episodes = episodes_from_routes(g, routes);
  const std::string text = episodes_to_json(episodes, g).dump(1) + "\n";
  write_new_file(a.out, text);
  std::cout << "wrote " << a.out << ": " << routes.size() << " episodes\n";
  return 0;
}

int cmd_gen_benchmark(const GenBenchArgs& a) {
  const NavGraph g = load_graph(a.graph);
  const auto routes = load_routes(a.routes, g);
  const RuleCatalog catalog = load_catalog(a.catalog);
  GenConfig cfg;
  if (!a.config.empty()) {
    cfg = gen_config_from_json(parse_json_text(read_text_file(a.config), a.config));
  }
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  const Benchmark bench = build_levels(g, routes, catalog, cfg);

  const fs::path out(a.out_dir);
  const bool created = !fs::exists(out);
  try {
    fs::create_directories(out);
    for (const CurriculumLevel& level : bench.levels) {
      emit_level(level, g, level_file(out, level.level));
    }
    write_text_file(out / "budget.txt", bench.budget_report(cfg));
  } catch (...) {
    if (created) {
      std::error_code ec;
      fs::remove_all(out, ec);
    }
    throw;
  }
  std::cout << bench.budget_report(cfg);
  return 0;
}

int cmd_filter(const FilterArgs& a) {
  if (!fs::exists(a.in)) {
    throw Error(ErrorCode::kValidation, "input '" + a.in + "' does not exist");
  }
  GmmConfig cfg;
  cfg.max_iter = a.max_iter;
  cfg.tol = a.tol;
  cfg.seed = a.seed;
  const auto summary = filter_file(a.in, a.out, cfg, std::cout, std::cerr);
  std::cout << "accepted " << summary.accepted << " of " << summary.rows << " rows";
  if (summary.invalid > 0) std::cout << " (" << summary.invalid << " invalid)";
  std::cout << "\n";
  return 0;
}

RunConfig resolve_run_config(const RunArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.out_dir.empty()) cfg.paths.out_dir = a.out_dir;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  return cfg;
}

void print_rows(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << std::left << std::setw(6) << "level" << std::setw(16) << "policy" << std::setw(6)
      << "snrm" << std::setw(6) << "setup" << std::right << std::setw(10) << "TC%"
      << std::setw(10) << "SPD" << std::setw(10) << "CVR%" << std::setw(8) << "n" << "\n";
  out << std::fixed;
  for (const ReportRow& r : rows) {
    out << std::left << std::setw(6) << r.level << std::setw(16) << r.policy << std::setw(6)
        << (r.snrm ? "on" : "off") << std::setw(6) << r.setup << std::right
        << std::setprecision(2) << std::setw(10) << 100.0 * r.tc << std::setw(10) << r.spd
        << std::setw(10) << 100.0 * r.cvr << std::setw(8) << r.n_episodes << "\n";
  }
  if (!rows.empty()) out << "seed " << rows.front().seed << "\n";
}

int cmd_run(const RunArgs& a, bool sweep) {
  const RunConfig cfg = resolve_run_config(a);
  if (a.dump_config) {
    std::cout << run_config_to_json(cfg).dump(2) << "\n";
    return 0;
  }
  const auto results = execute_run(cfg, !sweep, a.threads);
  std::vector<ReportRow> rows;
  for (const CellResult& r : results) {
    rows.push_back(r.row);
    for (const std::string& w : r.metrics.warnings) std::cerr << "warning: " << w << "\n";
  }
  print_rows(rows, std::cout);
  std::cout << "wrote " << (cfg.paths.out_dir / "report.csv").string() << "\n";
  return 0;
}

int cmd_report(const ReportArgs& a) {
  const auto rows = load_report(a.in);
  if (a.format == "csv") {
    std::cout << report_to_csv(rows);
  } else {
    print_rows(rows, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-compliant navigation benchmark and evaluation tools"};
  app.require_subcommand(1);

  GenGraphArgs gg;
  auto* gen_graph = app.add_subcommand("gen-graph", "Generate a grid navigation graph");
  gen_graph->add_option("--grid", gg.grid, "Grid size as ROWSxCOLS, e.g. 15x15")->required();
  gen_graph->add_option("--seed", gg.seed, "Random seed")->capture_default_str();
  gen_graph->add_option("--edge-length", gg.edge_length, "Edge length")->capture_default_str();
  gen_graph->add_option("--jitter", gg.jitter, "Relative edge length jitter")
      ->capture_default_str();
  gen_graph->add_option("--out", gg.out, "Output graph JSON")->required();

  GenRoutesArgs gr;
  auto* gen_routes = app.add_subcommand("gen-routes", "Sample gold routes as an episodes file");
  gen_routes->add_option("--graph", gr.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  gen_routes->add_option("--count", gr.count, "Number of routes")->capture_default_str();
  gen_routes->add_option("--min-hops", gr.min_hops, "Minimum route length in hops")
      ->capture_default_str();
  gen_routes->add_option("--seed", gr.seed, "Random seed")->capture_default_str();
  gen_routes->add_option("--out", gr.out, "Output episodes JSON")->required();

  GenBenchArgs gb;
  auto* gen_bench = app.add_subcommand("gen-benchmark", "Place signs for the four levels");
  gen_bench->add_option("--graph", gb.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  gen_bench->add_option("--routes", gb.routes, "Routes or episodes JSON")
      ->required()
      ->check(CLI::ExistingFile);
  gen_bench->add_option("--catalog", gb.catalog, "Rule catalog JSON")
      ->required()
      ->check(CLI::ExistingFile);
  gen_bench->add_option("--config", gb.config, "Generator config JSON")
      ->check(CLI::ExistingFile);
  gen_bench->add_option("--seed", gb.seed, "Override the generator seed");
  gen_bench->add_option("--out-dir", gb.out_dir, "Directory for level_<k>.json")->required();

  FilterArgs fa;
  auto* filt = app.add_subcommand("filter", "Two-component GMM quality gate over id,score CSV");
  filt->add_option("--in", fa.in, "Input CSV with header id,score")->required();
  filt->add_option("--out", fa.out, "Output CSV")->required();
  filt->add_option("--max-iter", fa.max_iter, "EM iteration cap")->capture_default_str();
  filt->add_option("--tol", fa.tol, "Log-likelihood tolerance")->capture_default_str();
  filt->add_option("--seed", fa.seed, "Seed (recorded only)")->capture_default_str();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Evaluate one policy/snrm/setup over the levels");
  RunArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Evaluate levels x policies x snrm x setups");
  for (auto [cmd, args] : {std::pair{run, &ra}, std::pair{sweep, &sa}}) {
    cmd->add_option("--config", args->config, "Run config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args->out_dir, "Override paths.out_dir");
    cmd->add_option("--seed", args->seed, "Override the root seed");
    cmd->add_option("--threads", args->threads, "Worker threads (default RULENAV_THREADS)");
    cmd->add_flag("--dump-config", args->dump_config,
                  "Print the effective config as JSON and exit");
  }

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Print a report CSV");
  report->add_option("--in", rp.in, "report.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--format", rp.format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_graph) return cmd_gen_graph(gg);
    if (*gen_routes) return cmd_gen_routes(gr);
    if (*gen_bench) return cmd_gen_benchmark(gb);
    if (*filt) return cmd_filter(fa);
    if (*run) return cmd_run(ra, false);
    if (*sweep) return cmd_run(sa, true);
    if (*report) return cmd_report(rp);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
