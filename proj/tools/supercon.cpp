// supercon: runs the verification suites and turns their CSVs into tidy
// plotting tables.
//
//   supercon run --suite com-verify [--config cfg.json] [--seed N] [--trials N]
//                [--dim N] [--out DIR] [--threads N]
//   supercon plotdata --kind drift|scaling|scatter|gap-histogram --input FILE [--output FILE]
//
// Exit status: 0 all criteria pass, 1 a criterion failed, 2 bad config/input.

#include "supercon/suites.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace supercon;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct RunArgs {
  std::string suite;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::int64_t> dim;
  std::string out;
  std::optional<unsigned> threads;
};

std::uint64_t parse_seed_env(const char* text) {
  std::string s(text);
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos, 10);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s.front() == '-') throw ConfigError("SUPERCON_SEED: not an unsigned integer: " + s);
  return v;
}

json table_json(const std::string& contents) {
  std::istringstream in(contents);
  const CsvTable t = read_csv(in);
  return {{"header", t.header}, {"rows", t.rows}};
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

int run_command(const RunArgs& args, const std::string& command_line) {
  const auto wall_start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  std::string seed_source = "default";
  std::uint64_t seed = kDefaultSeed;
  std::string suite;
  SuiteResult result;
  unsigned threads = 1;
  fs::path out_dir;
  try {
    if (!args.config_path.empty()) {
      std::ifstream in(args.config_path);
      if (!in) throw ConfigError("cannot open config " + args.config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON in ") + args.config_path + ": " + e.what());
      }
      cfg = parse_experiment_config(j);
    }
    suite = !args.suite.empty() ? args.suite : cfg.suite.value_or("");
    if (suite.empty()) throw ConfigError("no suite given (use --suite or the config key 'suite')");
    if (!args.suite.empty() && cfg.suite && *cfg.suite != args.suite)
      throw ConfigError("--suite " + args.suite + " conflicts with config suite " + *cfg.suite);
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end()) throw ConfigError("unknown suite '" + suite + "'");

    if (args.seed) {
      seed = *args.seed;
      seed_source = "flag";
    } else if (cfg.seed) {
      seed = *cfg.seed;
      seed_source = "config";
    } else if (const char* env = std::getenv("SUPERCON_SEED"); env && *env) {
      seed = parse_seed_env(env);
      seed_source = "env";
    }
    threads = args.threads.value_or(cfg.threads.value_or(1));
    if (threads < 1) throw ConfigError("--threads must be >= 1");
    if (args.trials && *args.trials < 1) throw ConfigError("--trials must be >= 1");
    out_dir = !args.out.empty() ? fs::path(args.out) : fs::path(cfg.output_dir.value_or("results/" + suite));

    SuiteContext ctx;
    ctx.seed = seed;
    ctx.threads = threads;
    ctx.trials = args.trials;
    ctx.dim = args.dim;
    const json block = cfg.blocks.contains(suite) ? cfg.blocks[suite] : json();
    result = run_suite(suite, block, ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }

  fs::create_directories(out_dir);
  json results = {{"suite", result.suite}, {"seed", seed}, {"config", result.config}, {"summary", result.summary}};
  results["criteria"] = json::array();
  for (const auto& c : result.criteria) results["criteria"].push_back({{"name", c.name}, {"passed", c.passed}});
  results["tables"] = json::object();
  json files = json::array();
  for (const auto& [name, contents] : result.files) {
    write_file(out_dir / name, contents);
    results["tables"][name] = table_json(contents);
    files.push_back({{"name", name}, {"bytes", contents.size()}});
  }
  write_file(out_dir / "results.json", results.dump(2) + "\n");

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  json manifest = {{"tool", "supercon"},
                   {"version", SUPERCON_VERSION},
                   {"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"command", command_line},
                   {"suite", result.suite},
                   {"seed", seed},
                   {"seed_source", seed_source},
                   {"threads", threads},
                   {"config", result.config},
                   {"files", files},
                   {"wall_time_seconds", wall}};
  if (args.trials) manifest["trials_override"] = *args.trials;
  if (args.dim) manifest["dim_override"] = *args.dim;
  manifest["criteria"] = json::array();
  for (const auto& c : result.criteria)
    manifest["criteria"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"seconds", c.seconds}});
  manifest["passed"] = result.passed();
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  for (const auto& c : result.criteria)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  std::cout << result.suite << ": " << (result.passed() ? "all criteria passed" : "criteria failed") << " (" << out_dir.string()
            << ")\n";
  return result.passed() ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------
// plotdata

struct TidyRow {
  double x;
  double y;
  std::string series;
  double stderr_value;
};

int column_or_throw(const CsvTable& t, const std::string& name, const std::string& kind) {
  const int c = t.column(name);
  if (c < 0) throw ConfigError("plotdata " + kind + ": input lacks column '" + name + "'");
  return c;
}

double cell_number(const std::vector<std::string>& row, int col) {
  if (col < 0 || static_cast<std::size_t>(col) >= row.size()) throw ConfigError("plotdata: short row");
  const std::string& s = row[static_cast<std::size_t>(col)];
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("plotdata: not a number: '" + s + "'");
  }
}

std::vector<TidyRow> tidy(const CsvTable& t, const std::string& kind, unsigned bins) {
  std::vector<TidyRow> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (kind == "drift") {
    const int k = column_or_throw(t, "steps", kind), y = column_or_throw(t, "rms_angle", kind),
              se = column_or_throw(t, "stderr", kind), ref = t.column("sqrt_k_over_N");
    for (const auto& r : t.rows) out.push_back({cell_number(r, k), cell_number(r, y), "rms_angle", cell_number(r, se)});
    if (ref >= 0)
      for (const auto& r : t.rows) out.push_back({cell_number(r, k), cell_number(r, ref), "sqrt_k_over_N", nan});
  } else if (kind == "scaling") {
    const int e = column_or_throw(t, "estimator", kind), n = column_or_throw(t, "N", kind),
              d = column_or_throw(t, "deviation", kind), used = t.column("used");
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> points;
    for (const auto& r : t.rows) {
      if (used >= 0 && cell_number(r, used) == 0.0) continue;
      const std::string name = r.at(static_cast<std::size_t>(e));
      const double lx = std::log(cell_number(r, n)), ly = std::log(cell_number(r, d));
      if (!points.count(name)) order.push_back(name);
      points[name].first.push_back(lx);
      points[name].second.push_back(ly);
      out.push_back({lx, ly, name, nan});
    }
    for (const auto& name : order) {
      const auto& [xs, ys] = points[name];
      if (xs.size() < 2) continue;
      const LineFit f = fit_line(xs, ys);
      for (double x : xs) out.push_back({x, f.intercept + f.slope * x, name + ":fit", nan});
      out.push_back({nan, f.slope, name + ":slope", nan});
    }
  } else if (kind == "scatter") {
    const int id = column_or_throw(t, "conclusion_id", kind), p = column_or_throw(t, "predicted", kind),
              m = column_or_throw(t, "mean", kind), s = column_or_throw(t, "std", kind),
              n = column_or_throw(t, "trials", kind);
    for (const auto& r : t.rows)
      out.push_back({cell_number(r, p), cell_number(r, m), r.at(static_cast<std::size_t>(id)),
                     cell_number(r, s) / std::sqrt(cell_number(r, n))});
  } else if (kind == "gap-histogram") {
    const int g = column_or_throw(t, "gap", kind), valid = t.column("valid");
    std::vector<double> gaps;
    for (const auto& r : t.rows)
      if (valid < 0 || cell_number(r, valid) != 0.0) gaps.push_back(cell_number(r, g));
    if (gaps.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(gaps.begin(), gaps.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = hi > lo ? (hi - lo) / bins : 1.0;
    std::vector<std::size_t> counts(bins, 0);
    for (double x : gaps) {
      auto b = hi > lo ? static_cast<std::size_t>((x - lo) / width) : 0;
      counts[std::min<std::size_t>(b, bins - 1)]++;
    }
    for (unsigned b = 0; b < bins; ++b)
      out.push_back({lo + (b + 0.5) * width, double(counts[b]), "gap", std::sqrt(double(counts[b]))});
  } else {
    throw ConfigError("plotdata: unknown kind '" + kind + "'");
  }
  return out;
}

int plotdata_command(const std::string& kind, const std::string& input, const std::string& output, unsigned bins) {
  try {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot open " + input);
    const CsvTable t = read_csv(in);
    if (t.header.empty()) throw ConfigError("plotdata: " + input + " has no header");
    if (bins < 1) throw ConfigError("plotdata: --bins must be >= 1");
    const auto rows = tidy(t, kind, bins);
    std::ostringstream csv;
    csv << "x,y,series,stderr\n";
    auto cell = [](double v) { return std::isnan(v) ? std::string() : csv_number(v); };
    for (const auto& r : rows) csv << cell(r.x) << ',' << cell(r.y) << ',' << r.series << ',' << cell(r.stderr_value) << '\n';
    if (output.empty() || output == "-") {
      std::cout << csv.str();
    } else {
      write_file(output, csv.str());
    }
  } catch (const ConfigError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superiorization and concentration-of-measure experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SUPERCON_VERSION);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a verification suite");
  run_cmd->add_option("--suite", run.suite, "Suite name")
      ->check(CLI::IsMember({"com-verify", "linsup", "projder-check", "supmatrix-trace", "scaling"}));
  run_cmd->add_option("--config", run.config_path, "Experiment config (JSON)");
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides config and SUPERCON_SEED)");
  run_cmd->add_option("--trials", run.trials, "Override the suite's main trial count");
  run_cmd->add_option("--dim", run.dim, "Override the suite's main dimension");
  run_cmd->add_option("--out", run.out, "Output directory (default results/<suite>)");
  run_cmd->add_option("--threads", run.threads, "Worker threads");

  std::string kind, input, output;
  unsigned bins = 20;
  auto* plot_cmd = app.add_subcommand("plotdata", "Convert a results CSV to tidy (x, y, series, stderr) rows");
  plot_cmd->add_option("--kind", kind, "drift | scaling | scatter | gap-histogram")
      ->required()
      ->check(CLI::IsMember({"drift", "scaling", "scatter", "gap-histogram"}));
  plot_cmd->add_option("--input", input, "Results CSV")->required();
  plot_cmd->add_option("--output", output, "Output CSV (default stdout)");
  plot_cmd->add_option("--bins", bins, "Histogram bins for gap-histogram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);
  if (*run_cmd) return run_command(run, command_line);
  return plotdata_command(kind, input, output, bins);
}
