#include "config.hpp"
#include "io.hpp"

#include "nhocp/dynamics.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nhocp::cli::json;
using namespace nhocp;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("nhocp_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(NHOCP_CLI_PATH) + " " + args + " > " + (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write_config(const std::string& name, const json& doc) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }

  std::string log() const {
    std::ifstream in(dir_ / "log.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

json cvt_simulation(double x0, double T) {
  return json::parse(R"({"model": {"type": "cvt", "m": 1.0, "J1": 1.0, "J2": 1.0},
                         "simulate": {"T": 1.0, "h": 0.001, "start": {"q": [0.0, 0.0, 0.5], "y": [0.1, 0.5]}}})")
      .patch(json::parse(R"([{"op": "replace", "path": "/simulate/start/q/2", "value": )" +
                         nhocp::cli::format_double(x0) + R"(}, {"op": "replace", "path": "/simulate/T", "value": )" +
                         nhocp::cli::format_double(T) + "}]"));
}

}  // namespace

TEST_F(Cli, SimulateSleighConservesEnergy) {
  const fs::path cfg = write_config("c.json", json::parse(R"({"simulate": {"T": 1.0}})"));
  ASSERT_EQ(run("simulate --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0)
      << log();
  const json s = cli::read_json(dir_ / "o" / "summary.json");
  EXPECT_EQ(s["schema_version"], 1);
  EXPECT_EQ(s["command"], "simulate");
  EXPECT_LE(s["energy_drift"].get<double>(), 1e-9);
  EXPECT_TRUE(s["failure"].is_null());
  EXPECT_EQ(s["samples"], 1001);
  EXPECT_EQ(s["parameters"]["model"]["a"], 0.5);
}

TEST_F(Cli, SimulateRoundTripsThroughCsv) {
  ASSERT_EQ(run("simulate --preset paper-cvt --out " + (dir_ / "o").string()), 0) << log();
  const json s = cli::read_json(dir_ / "o" / "summary.json");
  const cli::CsvTable table = cli::read_csv(dir_ / "o" / "trajectory.csv");
  EXPECT_EQ(table.header, (std::vector<std::string>{"t", "q1", "q2", "q3", "y1", "y2"}));
  const Trajectory tr = cli::trajectory_from_table(table, 3, 2);
  const MechanicalModel model = models::cvt({1.0, 1.0, 1.0});
  EXPECT_NEAR(relative_energy_drift(model, tr), s["energy_drift"].get<double>(), 1e-12);
  EXPECT_NEAR(admissibility_defect(model, tr), s["admissibility_residual"].get<double>(), 1e-12);
}

TEST_F(Cli, ZeroVelocityStartIsConstant) {
  const fs::path cfg = write_config("c.json", json::parse(R"({"simulate": {"T": 0.5, "start": {"y": [0.0, 0.0]}}})"));
  ASSERT_EQ(run("simulate --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
  const cli::CsvTable table = cli::read_csv(dir_ / "o" / "trajectory.csv");
  ASSERT_EQ(table.rows.size(), 501u);
  for (const auto& row : table.rows) {
    for (std::size_t c = 1; c < row.size(); ++c) EXPECT_EQ(row[c], table.rows.front()[c]);
  }
}

TEST_F(Cli, OutputIsByteIdenticalAcrossRuns) {
  const fs::path cfg = write_config("c.json", json::parse(R"({"simulate": {"T": 1.0}})"));
  ASSERT_EQ(run("simulate --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("simulate --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "b").string()), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "trajectory.csv"), slurp(dir_ / "b" / "trajectory.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "summary.json"), slurp(dir_ / "b" / "summary.json"));
  EXPECT_NE(slurp(dir_ / "a" / "trajectory.csv").find("\r\n"), std::string::npos);
}

TEST_F(Cli, CvtChartExit) {
  const fs::path cfg = write_config("c.json", cvt_simulation(0.999, 1.0));
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir_ / "o").string()), 5);
  const json s = cli::read_json(dir_ / "o" / "summary.json");
  ASSERT_FALSE(s["failure"].is_null());
  EXPECT_TRUE(s["failure"]["chart_exit"].get<bool>());
  EXPECT_GT(s["failure"]["time"].get<double>(), 0.0);
  EXPECT_LT(s["failure"]["time"].get<double>(), 0.05);
  const cli::CsvTable table = cli::read_csv(dir_ / "o" / "trajectory.csv");
  EXPECT_EQ(cli::parse_double(table.rows.back()[0]), s["failure"]["time"].get<double>());
}

TEST_F(Cli, ConstantInputSimulation) {
  const fs::path cfg =
      write_config("c.json", json::parse(R"({"simulate": {"T": 0.5, "control": [0.5, 0.0]}})"));
  ASSERT_EQ(run("simulate --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
  const cli::CsvTable table = cli::read_csv(dir_ / "o" / "trajectory.csv");
  EXPECT_EQ(table.header.back(), "u2");
  // ydot2 = m u1, so y2 grows linearly from 0.5
  EXPECT_NEAR(cli::parse_double(table.rows.back()[5]), 0.5 + 0.5 * 0.5, 1e-12);
}

TEST_F(Cli, OptimizeObstacleIsCleared) {
  ASSERT_EQ(run("optimize --preset paper-sleigh --out " + (dir_ / "o").string()), 0) << log();
  const json s = cli::read_json(dir_ / "o" / "summary.json");
  EXPECT_TRUE(s["diagnostics"]["converged"].get<bool>());
  EXPECT_LE(s["diagnostics"]["residual"].get<double>(), 1e-10);
  EXPECT_EQ(s["kappa"], 0.25);
  EXPECT_TRUE(s["obstacle_cleared"].get<bool>());
  EXPECT_GT(s["min_distance"].get<double>(), s["clearance"].get<double>());
  const cli::CsvTable table = cli::read_csv(dir_ / "o" / "extremal.csv");
  EXPECT_EQ(table.header,
            (std::vector<std::string>{"t", "q1", "q2", "q3", "y1", "y2", "pb1", "pb2", "pb3", "pf1", "pf2", "u1", "u2"}));
  const Trajectory tr = cli::trajectory_from_table(table, 3, 2);
  double dmin = 1e300;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    dmin = std::min(dmin, models::obstacle_distance({0.25, {0.5, 0.5}}, tr.q(i)));
  }
  EXPECT_NEAR(dmin, s["min_distance"].get<double>(), 1e-12);
}

TEST_F(Cli, OptimizeFreeFlowTarget) {
  const MechanicalModel model = models::chaplygin_sleigh({1.0, 1.0, 0.5});
  const AdaptedState s0{Vec::Zero(3), Vec::Ones(2) * 0.5};
  const Trajectory free = integrate_free(model, s0, 1.0, 1e-3);
  const Vec qT = free.q(free.size() - 1), yT = free.y(free.size() - 1);
  json doc = json::parse(R"({"obstacle": null, "solver": {"initial_costates": null},
                             "boundary": {"start": {"y": [0.5, 0.5]}}})");
  doc["boundary"]["target"]["q"] = {qT(0), qT(1), qT(2)};
  doc["boundary"]["target"]["y"] = {yT(0), yT(1)};
  const fs::path cfg = write_config("c.json", doc);
  ASSERT_EQ(run("optimize --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0)
      << log();
  const json s = cli::read_json(dir_ / "o" / "summary.json");
  EXPECT_NEAR(s["J"].get<double>(), 0.0, 1e-10);
  EXPECT_TRUE(s["kappa"].is_null());
}

TEST_F(Cli, OptimizeNonConvergence) {
  const fs::path cfg = write_config("c.json", json::parse(R"({"solver": {"newton_max_iter": 1}})"));
  EXPECT_EQ(run("optimize --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 2);
  const json s = cli::read_json(dir_ / "o" / "summary.json");
  EXPECT_FALSE(s["diagnostics"]["converged"].get<bool>());
  EXPECT_FALSE(s["diagnostics"]["residual_history"].empty());
  EXPECT_TRUE(fs::exists(dir_ / "o" / "extremal.csv"));
}

TEST_F(Cli, PlantedRecovery) {
  for (const char* preset : {"paper-sleigh", "paper-cvt"}) {
    const fs::path out = dir_ / preset;
    ASSERT_EQ(run(std::string("optimize --planted --preset ") + preset + " --out " + out.string()), 0) << log();
    const json s = cli::read_json(out / "summary.json");
    EXPECT_TRUE(s["planted"]["recovered"].get<bool>());
    EXPECT_LE(s["planted"]["max_error"].get<double>(), 1e-6);
  }
}

TEST_F(Cli, SweepWritesTableAndExtremals) {
  const fs::path cfg = write_config("c.json", json::parse(R"({"sweep": {"kappas": [0.0, 0.01]}})"));
  ASSERT_EQ(run("sweep --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0)
      << log();
  const cli::CsvTable table = cli::read_csv(dir_ / "o" / "sweep.csv");
  EXPECT_EQ(table.header, (std::vector<std::string>{"kappa", "J", "min_distance", "iterations", "converged"}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0][4], "true");
  EXPECT_LE(cli::parse_double(table.rows[0][1]), cli::parse_double(table.rows[1][1]));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "extremal_kappa_0.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "extremal_kappa_0.01.csv"));
}

TEST_F(Cli, CheckDefaultSleighPasses) {
  ASSERT_EQ(run("check --preset paper-sleigh --out " + (dir_ / "o").string()), 0) << log();
  const json s = cli::read_json(dir_ / "o" / "check.json");
  EXPECT_TRUE(s["passed"].get<bool>());
  EXPECT_GE(s["results"].size(), 10u);
}

TEST_F(Cli, CheckDegenerateOffset) {
  const fs::path cfg = write_config("c.json", json::parse(R"({"model": {"a": 0.0}, "obstacle": null})"));
  EXPECT_EQ(run("check --preset paper-sleigh --config " + cfg.string() + " --out " + (dir_ / "o").string()), 3);
  const json s = cli::read_json(dir_ / "o" / "check.json");
  bool reported = false;
  for (const auto& r : s["results"]) {
    if (r["name"] == "regularity_determinant") reported = r["status"] == "degenerate";
  }
  EXPECT_TRUE(reported);
}

TEST_F(Cli, CheckToleranceOverrideSeparatesMisses) {
  EXPECT_EQ(run("check --preset paper-cvt --tol 1e-15 --out " + (dir_ / "o").string()), 3);
  const json s = cli::read_json(dir_ / "o" / "check.json");
  int misses = 0, formula = 0;
  for (const auto& r : s["results"]) {
    misses += r["status"] == "tolerance_miss";
    formula += r["status"] == "formula_error";
  }
  EXPECT_GT(misses, 0);
  EXPECT_EQ(formula, 0);
  EXPECT_EQ(s["tolerance_override"], 1e-15);
}

TEST_F(Cli, ConfigErrors) {
  EXPECT_EQ(run("simulate"), 4);
  EXPECT_EQ(run("simulate --preset nope"), 4);
  EXPECT_EQ(run("simulate --config " + (dir_ / "missing.json").string()), 4);
  EXPECT_EQ(run("frobnicate"), 4);
  EXPECT_EQ(run("optimize --preset paper-sleigh --jobs 0"), 4);
  const fs::path unknown = write_config("u.json", json::parse(R"({"model": {"colour": 1}})"));
  EXPECT_EQ(run("simulate --preset paper-sleigh --config " + unknown.string()), 4);
  EXPECT_NE(log().find("colour"), std::string::npos);
  const fs::path bad = write_config("b.json", json::parse(R"({"model": {"m": -1.0}})"));
  EXPECT_EQ(run("simulate --preset paper-sleigh --config " + bad.string()), 4);
  const fs::path missing = write_config("m.json", json::parse(R"({"model": {"type": "cvt", "m": 1.0}})"));
  EXPECT_EQ(run("simulate --config " + missing.string()), 4);
  std::ofstream(dir_ / "broken.json") << "{ not json";
  EXPECT_EQ(run("simulate --config " + (dir_ / "broken.json").string()), 4);
  const fs::path no_obstacle = write_config("n.json", json::parse(R"({"obstacle": null})"));
  EXPECT_EQ(run("sweep --preset paper-sleigh --config " + no_obstacle.string()), 4);
  EXPECT_EQ(run("--help"), 0);
}
