#include "supercon/config.hpp"
#include "supercon/csv.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace supercon;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("supercon_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + SUPERCON_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable load(const fs::path& p) {
  std::ifstream in(p);
  return read_csv(in);
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST(Config, BodyRoundTrip) {
  Eigen::VectorXd c(2), a(2);
  c << 0.5, -1;
  a << 2, 0.25;
  const std::vector<ConvexBody> bodies = {Ball(c, 3.0), Ellipsoid(c, a), HalfSpace(Vector::Unit(2, 1), 0.5),
                                          HalfSpaceSet({HalfSpace(Vector::Unit(2, 0), 1.0)})};
  for (const auto& b : bodies) {
    const json j = body_to_json(b);
    const ConvexBody back = body_from_json(j);
    EXPECT_EQ(back.index(), b.index());
    EXPECT_EQ(body_to_json(back), j);
  }
  EXPECT_THROW(body_from_json(json::parse(R"({"kind":"ball","center":[0],"radius":-1})")), ConfigError);
  EXPECT_THROW(body_from_json(json::parse(R"({"kind":"torus"})")), ConfigError);
  EXPECT_THROW(body_from_json(json::parse(R"({"kind":"ball","center":[0],"radius":1,"color":2})")), ConfigError);
}

TEST(Config, ExperimentParsing) {
  const auto c = parse_experiment_config(json::parse(R"({"suite":"linsup","seed":5,"linsup":{"N":30}})"));
  EXPECT_EQ(*c.suite, "linsup");
  EXPECT_EQ(*c.seed, 5u);
  EXPECT_EQ(c.blocks["linsup"]["N"], 30);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"suite":"nope"})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"sede":1})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"seed":-1})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"threads":0})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(json::parse("[1,2]")), ConfigError);
}

TEST(Config, SuiteBlocksValidated) {
  EXPECT_THROW(parse_block<LinSupSuiteConfig>(json::parse(R"({"N":1})"), "linsup"), ConfigError);
  EXPECT_THROW(parse_block<LinSupSuiteConfig>(json::parse(R"({"decay":1.5})"), "linsup"), ConfigError);
  EXPECT_THROW(parse_block<LinSupSuiteConfig>(json::parse(R"({"unknown":1})"), "linsup"), ConfigError);
  EXPECT_THROW(parse_block<LinSupSuiteConfig>(json::parse(R"({"trials":"many"})"), "linsup"), ConfigError);
  const auto ok = parse_block<LinSupSuiteConfig>(json::parse(R"({"trials":7})"), "linsup");
  EXPECT_EQ(ok.trials, 7u);
  EXPECT_EQ(ok.N, 200);
  EXPECT_EQ(block_to_json(ok)["trials"], 7);
}

TEST(Csv, RoundTrip) {
  const fs::path dir = scratch("csv");
  write(dir / "t.csv", "a,b\n1,2.5\n3,-4e-3\n");
  const CsvTable t = load(dir / "t.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.column("b"), 1);
  EXPECT_EQ(t.column("zz"), -1);
  EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
  fs::remove_all(dir);
}

TEST(Cli, MalformedConfigWritesNothing) {
  const fs::path dir = scratch("malformed");
  write(dir / "bad.json", "{\"suite\": \"linsup\", ");
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "out").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
  write(dir / "unknown.json", R"({"suite":"linsup","linsup":{"Nn":3}})");
  EXPECT_EQ(run_cli("run --config " + (dir / "unknown.json").string() + " --out " + (dir / "out").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_EQ(run_cli("run --suite nope --out " + (dir / "out").string()), 2);
  EXPECT_EQ(run_cli("run --suite scaling --dim 64 --out " + (dir / "out").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
  fs::remove_all(dir);
}

TEST(Cli, ByteIdenticalAcrossRunsAndThreads) {
  const fs::path dir = scratch("determinism");
  const std::string base = "run --suite supmatrix-trace --seed 7 --trials 4 --out ";
  EXPECT_EQ(run_cli(base + (dir / "a").string() + " --threads 1"), 0);
  EXPECT_EQ(run_cli(base + (dir / "b").string() + " --threads 3"), 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 6u);
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  fs::remove_all(dir);
}

TEST(Cli, SeedPrecedence) {
  const fs::path dir = scratch("seed");
  const std::string base = "run --suite supmatrix-trace --trials 2 --out ";
  EXPECT_EQ(run_cli(base + (dir / "env").string(), "SUPERCON_SEED=99"), 0);
  EXPECT_EQ(run_cli(base + (dir / "flag").string() + " --seed 99", "SUPERCON_SEED=5"), 0);
  EXPECT_EQ(run_cli(base + (dir / "dflt").string()), 0);
  EXPECT_EQ(slurp(dir / "env" / "entries.csv"), slurp(dir / "flag" / "entries.csv"));
  EXPECT_NE(slurp(dir / "env" / "entries.csv"), slurp(dir / "dflt" / "entries.csv"));
  EXPECT_EQ(run_cli(base + (dir / "x").string(), "SUPERCON_SEED=abc"), 2);
  fs::remove_all(dir);
}

TEST(Cli, LinSupConfigOutcomes) {
  const fs::path dir = scratch("linsup");
  write(dir / "cfg.json",
        R"({"suite":"linsup","seed":3,"linsup":{"N":30,"I":15,"trials":9,"drift_N":60,"drift_I":60,)"
        R"("drift_trials":2,"drift_rows":[20],"drift_steps":[2,8,32]}})");
  const int code = run_cli("run --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string());
  EXPECT_TRUE(code == 0 || code == 1);
  const CsvTable t = load(dir / "out" / "outcomes.csv");
  EXPECT_EQ(t.rows.size(), 9u);
  EXPECT_GE(t.column("gap"), 0);
  EXPECT_GE(t.column("trial"), 0);
  const json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["config"]["trials"], 9);

  EXPECT_EQ(run_cli("plotdata --kind gap-histogram --input " + (dir / "out" / "outcomes.csv").string() +
                    " --output " + (dir / "hist.csv").string() + " --bins 5"),
            0);
  const CsvTable h = load(dir / "hist.csv");
  EXPECT_EQ(h.header, (std::vector<std::string>{"x", "y", "series", "stderr"}));
  EXPECT_EQ(h.rows.size(), 5u);
  fs::remove_all(dir);
}

TEST(Cli, PlotdataEdgeCases) {
  const fs::path dir = scratch("plot");
  write(dir / "empty.csv", "estimator,N,deviation,used\n");
  EXPECT_EQ(run_cli("plotdata --kind scaling --input " + (dir / "empty.csv").string() + " --output " +
                    (dir / "o.csv").string()),
            0);
  EXPECT_EQ(slurp(dir / "o.csv"), "x,y,series,stderr\n");
  write(dir / "wrong.csv", "a,b\n1,2\n");
  EXPECT_EQ(run_cli("plotdata --kind scaling --input " + (dir / "wrong.csv").string() + " --output " +
                    (dir / "o2.csv").string()),
            2);
  EXPECT_EQ(run_cli("plotdata --kind drift --input " + (dir / "missing.csv").string() + " --output " +
                    (dir / "o3.csv").string()),
            2);
  fs::remove_all(dir);
}
