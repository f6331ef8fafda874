#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tphdg/cli_io.hpp"
#include "tphdg/error.hpp"

using namespace tphdg;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& name) {
  return std::string(TPHDG_SOURCE_DIR) + "/configs/" + name;
}

std::string parse_error(const std::string& text) {
  std::istringstream is(text);
  try {
    parse_run_config(is);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tphdg_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, RoundTripEveryShippedFile) {
  for (const auto& entry : fs::directory_iterator(std::string(TPHDG_SOURCE_DIR) + "/configs")) {
    if (entry.path().extension() != ".cfg") continue;
    const RunConfig a = load_run_config(entry.path().string());
    std::stringstream ss;
    write_run_config(ss, a);
    const RunConfig b = parse_run_config(ss);
    EXPECT_TRUE(a == b) << entry.path();
  }
}

TEST(Config, RoundTripNonDefaultValues) {
  RunConfig c;
  c.run.name = "odd";
  c.discretization.dt = 0.1 + 0.2;  // not exactly representable as printed with 15 digits
  c.mesh.seed = 1234567890123LL;
  c.material.overrides["mu"] = 1.0 / 3.0;
  c.material_right = MaterialSpec{"L4", {}};
  c.receivers.push_back({"a", 0.25, 0.75});
  c.outputs.snapshots = {0.1, 0.2};
  std::stringstream ss;
  write_run_config(ss, c);
  EXPECT_TRUE(parse_run_config(ss) == c);
}

TEST(Config, ErrorsNameTheKeyPath) {
  EXPECT_NE(parse_error("[mesh]\nfoo = 1\n").find("mesh.foo"), std::string::npos);
  EXPECT_NE(parse_error("[bogus]\nx = 1\n").find("bogus"), std::string::npos);
  EXPECT_NE(parse_error("[discretization]\ndt = fast\n").find("discretization.dt"), std::string::npos);
  EXPECT_NE(parse_error("[discretization]\nT = nan\n").find("discretization.T"), std::string::npos);
  EXPECT_NE(parse_error("[mesh]\nsplit = zigzag\n").find("mesh.split"), std::string::npos);
  EXPECT_NE(parse_error("[material]\nset = L9\n").find("L9"), std::string::npos);
  EXPECT_NE(parse_error("[material]\ngamma = 2\n").find("material.gamma"), std::string::npos);
  EXPECT_NE(parse_error("[receivers]\nr1 = 2, 0.5\n").find("r1"), std::string::npos);
  EXPECT_FALSE(parse_error("[mesh]\nnx = 2\nnx = 3\n").empty());
  EXPECT_TRUE(parse_error("# only a comment\n[mesh]\nnx = 3\n").empty());
}

TEST(Config, MaterialOverridesApply) {
  std::istringstream is("[material]\nset = L1\nmu = 7\n");
  const RunConfig c = parse_run_config(is);
  const MaterialField f = material_field(c);
  EXPECT_EQ(f.parameters(0).mu, 7.0);
  EXPECT_EQ(f.parameters(0).lambda, 100.0);
}

TEST(Config, OutputDirPrecedence) {
  RunConfig c;
  c.outputs.dir = "from_file";
  unsetenv("TPHDG_OUTPUT_DIR");
  EXPECT_EQ(resolve_output_dir(c), "from_file");
  setenv("TPHDG_OUTPUT_DIR", "from_env", 1);
  EXPECT_EQ(resolve_output_dir(c), "from_env");
  EXPECT_EQ(resolve_output_dir(c, "from_cli"), "from_cli");
  unsetenv("TPHDG_OUTPUT_DIR");
}

TEST(Writers, SeismogramCsv) {
  const Mesh m = build_structured_mesh(1, 1, {0, 0, 1, 1});
  Receiver r("r1", {0.25, 0.25}, {"u2", "theta"});
  r.resolve(m);
  const DiscreteState s(m, DofLayout(0));
  r.record(m, s.layout, s, 0.0);
  r.record(m, s.layout, s, 0.5);
  std::ostringstream os;
  write_seismograms_csv(os, {r});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,receiver_id,field,value");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);

  std::ostringstream d;
  write_difference_csv(d, r, r);
  EXPECT_EQ(d.str().substr(0, d.str().find('\n')), "t,field,full,reduced,difference");
}

TEST(Writers, VtkValidates) {
  Mesh m = build_structured_mesh(2, 2, {0, 0, 1, 1}, SplitPattern::crisscross);
  m.assign_regions([](const Point& c) { return c.x > 0.5 ? 1 : 0; });
  const DofLayout L(1);
  DiscreteState s(m, L);
  s.X.setConstant(0.5);
  std::ostringstream os;
  write_vtk(os, m, L, s, 0.1);
  std::istringstream is(os.str());
  const VtkSummary v = validate_vtk(is);
  EXPECT_EQ(v.cells, m.num_elements());
  EXPECT_EQ(v.points, 3 * m.num_elements());
  for (const char* f : {"u_mag", "u2", "r_mag", "theta", "region"})
    EXPECT_NE(std::find(v.fields.begin(), v.fields.end(), f), v.fields.end()) << f;

  std::string broken = os.str();
  broken.replace(broken.find("CELL_TYPES"), 10, "CELL_TYPEZ");
  std::istringstream bad(broken);
  EXPECT_THROW(validate_vtk(bad), Error);
  std::istringstream truncated(os.str().substr(0, os.str().size() / 2));
  EXPECT_THROW(validate_vtk(truncated), Error);
}

TEST(Commands, CheckPassesOnShippedConfig) {
  const RunConfig c = load_run_config(config_path("check.cfg"));
  std::ostringstream log;
  const fs::path out = scratch("check");
  EXPECT_EQ(cmd_check(c, {out.string(), &log}), kExitOk) << log.str();
  EXPECT_NE(log.str().find("PASS patch"), std::string::npos);
}

TEST(Commands, FlippedStabilizationFailsCheck) {
  RunConfig c = load_run_config(config_path("check.cfg"));
  c.check.suites = {"energy"};
  c.debug.stabilization_sign = -1.0;
  std::ostringstream log;
  EXPECT_EQ(cmd_check(c, {scratch("check_neg").string(), &log}), kExitNumerical);
  EXPECT_NE(log.str().find("FAIL energy"), std::string::npos);
}

TEST(Commands, SimulateWritesOutputs) {
  std::istringstream is(
      "[run]\nname = tiny\n[domain]\nxmax = 1500\nymax = 1500\n[mesh]\nnx = 4\nny = 4\n"
      "split = crisscross\n[discretization]\nk = 1\ndt = 0.02\nT = 0.06\n[material]\nset = L3\n"
      "[receivers]\nr1 = 750, 1125\n[outputs]\nsnapshots = 0.04\n");
  const RunConfig c = parse_run_config(is);
  const fs::path out = scratch("simulate");
  std::ostringstream log;
  ASSERT_EQ(cmd_simulate(c, {out.string(), &log}), kExitOk) << log.str();
  EXPECT_TRUE(fs::exists(out / "tiny_seismograms.csv"));
  EXPECT_TRUE(fs::exists(out / "tiny_energy.csv"));
  std::ifstream vtk(out / "tiny_00002.vtk");
  ASSERT_TRUE(vtk.good());
  EXPECT_EQ(validate_vtk(vtk).cells, 64);
  fs::remove_all(out);
}
