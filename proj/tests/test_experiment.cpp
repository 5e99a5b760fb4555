#include "tvopt/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tvopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json formation_json() {
  return json::parse(R"({
    "problem": "Formation",
    "solver": {"method": "ForwardBackward", "rho": "balanced", "P": 1, "C": 3, "Ts": 0.1},
    "duration": 6.0,
    "seed": 3
  })");
}

json synthetic_json() {
  return json::parse(R"({
    "problem": "SyntheticSinusoid",
    "synthetic": {"amplitude": 1.0, "omega": 1.0, "dimension": 4},
    "solver": {"method": "ForwardBackward", "rho": 0.5, "P": 1, "C": 3, "Ts": 0.1},
    "duration": 2.0
  })");
}

std::string expect_config_error(const json& j, const std::string& key_fragment) {
  try {
    parse_experiment(j);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(key_fragment), std::string::npos) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError mentioning " << key_fragment;
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tvopt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& body) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << body;
    return p;
  }

  /// Exit status of the CLI; stderr goes to `err.txt` in the scratch dir.
  int cli(const std::string& args) {
    const std::string cmd =
        std::string(TVOPT_CLI_PATH) + " " + args + " > " + (dir_ / "out.txt").string() + " 2> " +
        (dir_ / "err.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string err() const { return slurp(dir_ / "err.txt"); }
  std::string out() const { return slurp(dir_ / "out.txt"); }

  fs::path dir_;
};

}  // namespace

TEST(ParseExperiment, DefaultsAndOverrides) {
  const ExperimentConfig cfg = parse_experiment(formation_json());
  EXPECT_EQ(cfg.problem, ProblemKind::Formation);
  EXPECT_EQ(cfg.formation.N, 10);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.formation.seed, 3u);
  EXPECT_FALSE(cfg.solver.rho);
  EXPECT_EQ(cfg.solver.P, 1);
  EXPECT_EQ(cfg.solver.C, 3);
}

TEST(ParseExperiment, BalancedStepUsesInstanceModuli) {
  const PCConfig pc = resolve_solver(parse_experiment(formation_json()));
  EXPECT_DOUBLE_EQ(pc.split.rho, 2.0 / 26.0);
  json dr = formation_json();
  dr["solver"]["method"] = "DouglasRachford";
  EXPECT_DOUBLE_EQ(resolve_solver(parse_experiment(dr)).split.rho, 1.0 / std::sqrt(160.0));
}

TEST(ParseExperiment, FormationFieldsAreRead) {
  json j = formation_json();
  j["formation"] = json::parse(R"({"N": 4, "d": 2.0, "lambda": 5.0, "sigmas": [0, 0.1, 0.2, 0.3],
    "directions": ["y", "x", "x", "y"], "leader": {"amplitude": 1.0, "ratio": [2, 3], "period": 10, "phase": 0}})");
  const ExperimentConfig cfg = parse_experiment(j);
  EXPECT_EQ(cfg.formation.N, 4);
  EXPECT_EQ(cfg.formation.sigmas[3], 0.3);
  EXPECT_EQ(cfg.formation.directions[0], Axis::Y);
  EXPECT_EQ(cfg.formation.leader.ratio[0], 2);
  EXPECT_EQ(cfg.formation.leader.period, 10.0);
}

TEST(ParseExperiment, RejectsInvalidInput) {
  json j = formation_json();
  j["solver"]["C"] = 0;
  const std::string msg = expect_config_error(j, "solver.C");
  EXPECT_NE(msg.find("C must be >= 1"), std::string::npos);

  j = formation_json();
  j["solver"]["Cc"] = 2;
  expect_config_error(j, "solver.Cc");

  j = formation_json();
  j["colour"] = "red";
  expect_config_error(j, "colour");

  j = formation_json();
  j["problem"] = "Rocket";
  expect_config_error(j, "problem");

  j = formation_json();
  j["solver"]["rho"] = -1.0;
  expect_config_error(j, "solver.rho");

  j = formation_json();
  j["formation"] = json::parse(R"({"directions": ["x","x","x","x","x","x","x","x","x","x"]})");
  expect_config_error(j, "formation");

  j = formation_json();
  j["solver"]["Ts"] = "fast";
  expect_config_error(j, "solver.Ts");

  j = formation_json();
  j.erase("problem");
  expect_config_error(j, "problem");
}

TEST(ParseExperiment, FbStepAboveTwoOverLIsAConfigError) {
  json j = formation_json();
  j["solver"]["rho"] = 0.2;  // 2/L = 0.125
  try {
    resolve_solver(parse_experiment(j));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2/L"), std::string::npos) << e.what();
  }
}

TEST(ParseSweep, ShapeAndErrors) {
  json j;
  j["base"] = formation_json();
  j["ts_values"] = {0.1, 0.2};
  j["noise_rule"] = "ScaledByTs";
  j["variants"] = json::parse(R"([{"P": 0, "C": 3}, {"P": 2, "C": 3, "derivative_mode": "BackwardDifference"}])");
  const SweepConfig cfg = parse_sweep(j);
  EXPECT_EQ(cfg.ts_values.size(), 2u);
  EXPECT_EQ(cfg.noise_rule, NoiseRule::ScaledByTs);
  EXPECT_EQ(cfg.variants[1].derivative_mode, DerivativeMode::BackwardDifference);
  EXPECT_EQ(cfg.variants[1].label(), "P2_C3_BackwardDifference");

  json empty = j;
  empty["ts_values"] = json::array();
  EXPECT_THROW(parse_sweep(empty), ConfigError);
  json no_variants = j;
  no_variants["variants"] = json::array();
  EXPECT_THROW(parse_sweep(no_variants), ConfigError);
  json bad = j;
  bad["base"]["solver"]["P"] = -1;
  try {
    parse_sweep(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "base.solver.P");
  }
}

TEST(RunCsv, RowCountHeaderAndFooter) {
  const ExperimentConfig cfg = parse_experiment(formation_json());
  const TrajectoryRecord rec = run_experiment(cfg);
  const std::string csv = render_run_csv(rec);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,t,E,pred_residual,corr_residual");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      last = line;
      continue;
    }
    ++rows;
  }
  EXPECT_EQ(rows, 60);
  EXPECT_EQ(last, "# asymptotic_error=" + format_double(rec.asymptotic_error));
}

TEST(RunCsv, ValuesRoundTripLosslessly) {
  const TrajectoryRecord rec = run_experiment(parse_experiment(synthetic_json()));
  std::istringstream in(render_run_csv(rec));
  std::string line;
  std::getline(in, line);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    std::getline(in, line);
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(row, field, ',')) f.push_back(field);
    ASSERT_EQ(f.size(), 5u);
    EXPECT_EQ(std::stoul(f[0]), k + 1);
    EXPECT_EQ(std::strtod(f[1].c_str(), nullptr), rec.times[k]);
    EXPECT_EQ(std::strtod(f[2].c_str(), nullptr), rec.errors[k]);
    EXPECT_EQ(std::strtod(f[4].c_str(), nullptr), rec.corr_residuals[k]);
  }
}

TEST(SweepCsv, FourTsTimesTwoVariants) {
  json j;
  j["base"] = formation_json();
  j["ts_values"] = {0.05, 0.1, 0.2, 0.4};
  j["variants"] = json::parse(R"([{"P": 0, "C": 3}, {"P": 1, "C": 3}])");
  const SweepResult r = run_sweep(parse_sweep(j));
  const std::string csv = render_sweep_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "variant,Ts,asymptotic_error,loglog_slope");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const std::string slope = line.substr(line.rfind(',') + 1);
    const auto& s = r.series[rows <= 4 ? 0 : 1];
    EXPECT_EQ(slope, format_double(*s.slope));
  }
  EXPECT_EQ(rows, 8);
}

TEST(SweepCsv, UndefinedSlopeIsNan) {
  json j;
  j["base"] = synthetic_json();
  j["ts_values"] = {0.1};
  j["variants"] = json::parse(R"([{"P": 0, "C": 1}])");
  const std::string csv = render_sweep_csv(run_sweep(parse_sweep(j)));
  EXPECT_NE(csv.find(",nan\n"), std::string::npos) << csv;
}

TEST(Analysis, ExactSyntheticCase) {
  json j = synthetic_json();
  j["solver"]["rho"] = 1.0;
  const AnalysisOutput a = run_analysis(parse_experiment(j));
  EXPECT_EQ(a.report.rate.zeta, 0.0);
  EXPECT_EQ(a.report.theorem1_lhs, 0.0);
  EXPECT_EQ(a.report.asymptote_estimate, 0.0);
}

TEST(Analysis, SyntheticDefaultsMatchEtaFormulas) {
  const AnalysisOutput a = run_analysis(parse_experiment(synthetic_json()));
  const SyntheticSinusoid s;
  const EtaCoefficients q = eta_quadratic(0.5, 0.125, 1.0, s.bounds(), 0.1);
  EXPECT_EQ(a.report.quadratic.eta2, q.eta2);
  EXPECT_EQ(a.report.quadratic.eta1, q.eta1);
  EXPECT_EQ(a.report.quadratic.eta0, q.eta0);
  EXPECT_DOUBLE_EQ(a.report.theorem1_lhs, 0.4375);
  EXPECT_EQ(a.report.ts_bar, std::numeric_limits<double>::infinity());
  const std::string csv = render_analysis_csv(a);
  EXPECT_EQ(csv.rfind("quantity,value\n", 0), 0u);
  EXPECT_NE(csv.find("theorem1_lhs,0.4375\n"), std::string::npos) << csv;
}

TEST(Analysis, FormationDefaultsHoldFlagConsistent) {
  json j = formation_json();
  j["solver"]["rho"] = 1.0 / 16.0;
  j["solver"]["P"] = 0;
  j["solver"]["C"] = 5;
  const AnalysisOutput a = run_analysis(parse_experiment(j));
  EXPECT_EQ(a.report.theorem1_holds, a.report.theorem1_lhs < 1.0);
  EXPECT_NE(render_analysis_text(a).find("theorem1_lhs = "), std::string::npos);
}

TEST(Analysis, DeclaredBoundsOverrideDerived) {
  json j = synthetic_json();
  j["analysis"] = json::parse(R"({"tau": 0.6, "bounds": {"C0": 1, "C1": 1, "C2": 1, "C3": 1}})");
  const AnalysisOutput a = run_analysis(parse_experiment(j));
  EXPECT_EQ(a.bounds.C1, 1.0);
  EXPECT_TRUE(std::isfinite(a.report.ts_bar));
  j["analysis"]["bounds"].erase("C3");
  EXPECT_THROW(parse_experiment(j), ConfigError);
}

TEST(LoadJson, MalformedFileReportsPosition) {
  const fs::path p = fs::temp_directory_path() / "tvopt_malformed.json";
  std::ofstream(p) << "{\n  \"problem\": \"Formation\",\n  oops\n}\n";
  try {
    load_json(p.string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  fs::remove(p);
  EXPECT_THROW(load_json("/nonexistent/tvopt.json"), ConfigError);
}

TEST_F(CliTest, RunWritesCsvAndIsByteIdentical) {
  const fs::path cfg = write("run.json", formation_json().dump());
  const fs::path a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(cli("run " + cfg.string() + " --out " + a.string()), 0) << err();
  ASSERT_EQ(cli("run " + cfg.string() + " --out " + b.string()), 0) << err();
  const std::string first = slurp(a);
  EXPECT_EQ(first, slurp(b));
  EXPECT_EQ(first.rfind("k,t,E,pred_residual,corr_residual\n", 0), 0u);
  EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 62);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  const fs::path cfg = write("run.json", formation_json().dump());
  ASSERT_EQ(cli("run " + cfg.string() + " --out -"), 0);
  const std::string base = out();
  ASSERT_EQ(cli("run " + cfg.string() + " --seed 3 --out -"), 0);
  EXPECT_EQ(out(), base);
  ASSERT_EQ(cli("run " + cfg.string() + " --seed 4 --out -"), 0);
  EXPECT_NE(out(), base);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  json j = formation_json();
  j["solver"]["C"] = 0;
  const fs::path cfg = write("bad.json", j.dump());
  EXPECT_EQ(cli("run " + cfg.string()), 2);
  EXPECT_NE(err().find("C must be >= 1"), std::string::npos) << err();

  const fs::path broken = write("broken.json", "{ \"problem\": ");
  EXPECT_EQ(cli("analyze " + broken.string()), 2);
  EXPECT_EQ(cli("run " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(cli("launch " + cfg.string()), 2);

  json sweep;
  sweep["base"] = formation_json();
  sweep["ts_values"] = json::array();
  sweep["variants"] = json::parse(R"([{"P": 0, "C": 3}])");
  EXPECT_EQ(cli("sweep " + write("sweep.json", sweep.dump()).string()), 2);
  EXPECT_NE(err().find("ts_values"), std::string::npos) << err();
}

TEST_F(CliTest, SolverFailureExitsOneWithStep) {
  // The analytic time derivative a*w*cos(w t) overflows, so the first
  // prediction is already non-finite.
  json j = synthetic_json();
  j["synthetic"]["amplitude"] = 1e300;
  j["synthetic"]["omega"] = 1e300;
  const fs::path cfg = write("overflow.json", j.dump());
  EXPECT_EQ(cli("run " + cfg.string() + " --out " + (dir_ / "o.csv").string()), 1);
  EXPECT_NE(err().find("step 0"), std::string::npos) << err();
  EXPECT_NE(err().find("not finite"), std::string::npos) << err();
}

TEST_F(CliTest, SweepAndAnalyze) {
  json sweep;
  sweep["base"] = synthetic_json();
  sweep["ts_values"] = {0.05, 0.1, 0.2, 0.4};
  sweep["variants"] = json::parse(R"([{"P": 0, "C": 1}, {"P": 1, "C": 1}])");
  const fs::path s = write("sweep.json", sweep.dump());
  ASSERT_EQ(cli("sweep " + s.string() + " --out " + (dir_ / "s.csv").string()), 0) << err();
  const std::string csv = slurp(dir_ / "s.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);

  const fs::path a = write("an.json", synthetic_json().dump());
  ASSERT_EQ(cli("analyze " + a.string() + " --out " + (dir_ / "a.csv").string()), 0) << err();
  EXPECT_NE(out().find("theorem1_lhs = 0.4375"), std::string::npos) << out();
  EXPECT_EQ(slurp(dir_ / "a.csv").rfind("quantity,value\n", 0), 0u);
}

TEST_F(CliTest, ShippedConfigsParse) {
  for (const char* name : {"formation_default.json", "synthetic_analyze.json"}) {
    EXPECT_NO_THROW(parse_experiment(load_json(std::string(TVOPT_CONFIG_DIR) + "/" + name))) << name;
  }
  EXPECT_NO_THROW(parse_sweep(load_json(std::string(TVOPT_CONFIG_DIR) + "/ts_sweep.json")));
}
