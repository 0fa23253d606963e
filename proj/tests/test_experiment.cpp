#include "slns/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace slns;

namespace {

const char* kFkConfig = R"(experiment: scalar_fk
case: {name: heat_slab, nu: 1.0, coefficients: [1.0, 0.5]}
domain: {kind: ChannelX, lower: [0, 0], upper: [1, 1]}
solver: {dt: 1.0e-3, dt_snap: 0.1, shape: [4, 5], n_paths: 4000, seed: 3}
points: [[0.5, 0.25], [0.5, 0.75]]
times: [0.1]
)";

std::string message_of(const std::string& text) {
  try {
    parse_config(text, "test.yaml");
  } catch (const UsageError& e) {
    return e.what();
  }
  return {};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SLNS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAllBlocks) {
  const auto cfg = parse_config(kFkConfig);
  EXPECT_EQ(cfg.experiment, "scalar_fk");
  EXPECT_EQ(cfg.problem.reference.name, reference::CaseName::HeatSlab);
  EXPECT_EQ(cfg.problem.reference.coefficients, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(cfg.solver.nu, 1.0);
  EXPECT_EQ(cfg.solver.n_paths, 4000u);
  ASSERT_EQ(cfg.problem.points.size(), 2u);
  EXPECT_EQ(cfg.problem.points[1], Vec<2>(0.5, 0.75));
  ASSERT_TRUE(cfg.domain.has_value());
  EXPECT_EQ(cfg.domain->kind, DomainKind::ChannelX);
}

TEST(Config, UnknownExperimentListsRegisteredNames) {
  const auto msg = message_of("experiment: foo\n");
  EXPECT_NE(msg.find("foo"), std::string::npos);
  for (const auto& [name, what] : experiment_registry()) EXPECT_NE(msg.find(name), std::string::npos) << name;
}

TEST(Config, ErrorsCarryLineInformation) {
  const auto unknown_key = message_of("experiment: scalar_fk\nsolver:\n  dt: 0.1\n  steps: 4\n");
  EXPECT_NE(unknown_key.find("test.yaml:4:"), std::string::npos) << unknown_key;
  EXPECT_NE(unknown_key.find("steps"), std::string::npos);
  const auto bad_type = message_of("experiment: scalar_fk\nsolver: {dt: fast}\n");
  EXPECT_NE(bad_type.find("test.yaml:2:"), std::string::npos) << bad_type;
  const auto syntax = message_of("experiment: [scalar_fk\n");
  EXPECT_NE(syntax.find("test.yaml:"), std::string::npos) << syntax;
  const auto bad_rule = message_of("experiment: scalar_fk\nsolver:\n  exit_rule: reflect\n");
  EXPECT_NE(bad_rule.find("test.yaml:3:"), std::string::npos) << bad_rule;
  EXPECT_FALSE(message_of("case: {name: heat_slab}\n").empty());
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), UsageError);
}

TEST(Config, ShippedConfigsParse) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SLNS_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 10);
}

TEST(Experiment, ScalarFkCsvIsDeterministicAcrossWorkers) {
  auto cfg = parse_config(kFkConfig);
  const auto one = run_experiment(cfg);
  EXPECT_TRUE(one.pass) << one.summary;
  const std::string& csv = one.files.at("report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,x,y,t,mean,std_error,oracle,error,tolerance,pass,n,seed,dt");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  for (int w : {1, 4, 8}) {
    cfg.solver.workers = w;
    EXPECT_EQ(run_experiment(cfg).files.at("report.csv"), csv) << "workers " << w;
  }
  cfg.solver.seed = 4;
  EXPECT_NE(run_experiment(cfg).files.at("report.csv"), csv);
}

TEST(Experiment, LadderNeedsThreeLevels) {
  auto cfg = parse_config(R"(experiment: convergence_ladder
case: {name: heat_slab, nu: 1.0}
solver: {dt: 1.0e-3, dt_snap: 0.1, shape: [4, 5], n_paths: 100}
points: [[0.5, 0.3]]
times: [0.1]
ladder: {kind: scalar_fk, parameter: n, values: [100, 1000]}
)");
  EXPECT_THROW(run_experiment(cfg), UsageError);
  cfg.ladder.values.clear();
  EXPECT_THROW(run_experiment(cfg), UsageError);
}

TEST(Experiment, NLadderSlopeIsMinusOneHalf) {
  const auto cfg = parse_config(R"(experiment: convergence_ladder
case: {name: heat_slab, nu: 1.0}
solver: {dt: 5.0e-3, dt_snap: 0.1, shape: [4, 5], seed: 9}
points: [[0.5, 0.3]]
times: [0.1]
ladder: {kind: scalar_fk, parameter: n, values: [400, 4000, 40000]}
)");
  const auto r = run_experiment(cfg);
  EXPECT_TRUE(r.pass) << r.summary;
  EXPECT_EQ(r.files.count("ladder.csv"), 1u);
  EXPECT_EQ(r.files.count("fit.csv"), 1u);
}

TEST(Experiment, SlopeFit) {
  const std::vector<double> x{1, 10, 100}, y{3, 0.3, 0.03};
  EXPECT_NEAR(detail::loglog_slope(x, y), -1.0, 1e-12);
}

TEST(Experiment, DomainBlockMustMatchCase) {
  auto cfg = parse_config(kFkConfig);
  cfg.domain->kind = DomainKind::Torus;
  EXPECT_THROW(run_experiment(cfg), UsageError);
}

TEST(Experiment, LerayPropertiesSmall) {
  const auto cfg = parse_config("experiment: leray_properties\nsolver: {shape: [8, 8]}\nleray: {n_fields: 5}\n");
  const auto r = run_experiment(cfg);
  EXPECT_TRUE(r.pass) << r.summary;
  EXPECT_EQ(std::count(r.files.at("leray.csv").begin(), r.files.at("leray.csv").end(), '\n'), 6);
}

TEST(GridDump, HeaderAndRows) {
  const Grid<2> g(Domain<2>::torus(Vec<2>(0, 0), Vec<2>(1, 2)), {4, 3});
  const auto f = VectorField<2>::from_function(g, [](const Vec<2>& x) { return Vec<2>(x[0], -x[1]); });
  std::ostringstream out;
  io::write_grid_dump(out, f, 0.5);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# shape 4 3 spacing 0.25 0.66666666666666663 t 0.5");
  int rows = 0;
  while (std::getline(in, line)) {
    double x, y, u, v;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf %lf %lf %lf", &x, &y, &u, &v), 4);
    EXPECT_EQ(u, x);
    EXPECT_EQ(v, -y);
    ++rows;
  }
  EXPECT_EQ(rows, 12);
}

TEST(Cli, ExitCodesAndOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "slns_cli_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto config = dir / "fk.yaml";
  io::write_file(config.string(), kFkConfig);

  EXPECT_EQ(run_cli("list"), 0);
  EXPECT_EQ(run_cli("run " + config.string() + " -o " + (dir / "a").string()), 0);
  EXPECT_EQ(run_cli("run " + config.string() + " -o " + (dir / "b").string() + " -w 4"), 0);
  EXPECT_EQ(read_file(dir / "a" / "report.csv"), read_file(dir / "b" / "report.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "summary.txt"));

  io::write_file((dir / "foo.yaml").string(), "experiment: foo\n");
  EXPECT_EQ(run_cli("run " + (dir / "foo.yaml").string()), 2);
  EXPECT_EQ(run_cli("run " + (dir / "missing.yaml").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  // A tolerance no estimate can meet.
  io::write_file((dir / "strict.yaml").string(),
                 std::string(kFkConfig) + "tolerances: {se_factor: 0, dt_slack: 0}\noutput: " + (dir / "c").string() + "\n");
  EXPECT_EQ(run_cli("run " + (dir / "strict.yaml").string()), 1);
  std::filesystem::remove_all(dir);
}
