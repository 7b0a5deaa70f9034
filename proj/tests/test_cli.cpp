#include "fdlm/benchmark.hpp"
#include "fdlm/config.hpp"
#include "fdlm/vtk.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace fdlm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fdlm_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FDLM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kSmallBenchmark =
    "# short ring run\n"
    "job = Benchmark\n"
    "rho_f = 1\ndelta_rho = 0.3\nnu_f = 0.05\nkappa = 1\n"
    "n_cells = 8\nsolid_h = 0.125\n"
    "scheme = BE_semi\ndt = 0.05\nT = 0.2   # four steps\n"
    "snapshot_stride = 2\n";

}  // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
  const RunConfig c = parse_config_string(
      "  job=TemporalConvergence  \n# comment\n\nkappa = 10 # trailing\n"
      "dts = 0.1, 0.05\nschemes = BDF2\ncoupling_form = C2_H1\n");
  EXPECT_EQ(c.job, Job::TemporalConvergence);
  EXPECT_EQ(c.params.kappa, 10.0);
  ASSERT_EQ(c.dts.size(), 2u);
  EXPECT_EQ(c.dts[1], 0.05);
  ASSERT_EQ(c.schemes.size(), 1u);
  EXPECT_EQ(c.schemes[0], Scheme::BDF2);
  EXPECT_EQ(c.mesh.form, CouplingForm::C2_H1);
  EXPECT_EQ(c.echo.size(), 5u);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config_string("colour = red\n"), ConfigError);
  EXPECT_THROW(parse_config_string("dt = 0.1\ndt = 0.2\n"), ConfigError);
  EXPECT_THROW(parse_config_string("dt 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("dt = 0.1x\n"), ConfigError);
  EXPECT_THROW(parse_config_string("dt = -0.1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("kappa = 0\n"), ConfigError);
  EXPECT_THROW(parse_config_string("scheme = RK4\n"), ConfigError);
  EXPECT_THROW(parse_config_string("multiplier_degree = 2\n"), ConfigError);
  EXPECT_THROW(parse_config_string("n_cells =\n"), ConfigError);
  EXPECT_THROW(parse_config_string("nu_f = 0.1\nnu_s = 1\n"), ConfigError);
  EXPECT_EQ(parse_config_string("nu_f = 0.1\n").params.nu_s, 0.1);
}

TEST(Cli, MalformedConfigExitsWithoutOutputs) {
  const fs::path dir = scratch("malformed");
  const fs::path out = dir / "out";
  const fs::path cfg = write_config(dir, std::string(kSmallBenchmark) + "mystery = 1\n");
  EXPECT_EQ(run_cli("run " + cfg.string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(run_cli("run " + (dir / "missing.cfg").string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, BenchmarkWritesEnergyManifestAndSnapshots) {
  const fs::path dir = scratch("bench");
  const fs::path cfg = write_config(dir, kSmallBenchmark);
  const fs::path out = dir / "out";
  ASSERT_EQ(run_cli("run " + cfg.string() + " --quiet --out " + out.string()), 0);

  const std::string manifest = slurp(out / "manifest.txt");
  EXPECT_NE(manifest.find("status = ok"), std::string::npos);
  EXPECT_NE(manifest.find("fdlm_version"), std::string::npos);
  EXPECT_NE(manifest.find("wall_time_s"), std::string::npos);
  EXPECT_NE(manifest.find("kappa = 1"), std::string::npos);

  std::ifstream csv(out / "energy.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "n,t,Pi_total,Pi_ratio,kinetic_fluid,kinetic_solid,elastic,div_residual,constraint_residual");
  int rows = 0;
  double prev_ratio = INFINITY;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 9u);
    EXPECT_LE(v[3], prev_ratio);
    prev_ratio = v[3];
    if (rows > 0) {
      EXPECT_LE(v[7], 1e-10);
      EXPECT_LE(v[8], 1e-10);
    }
    ++rows;
  }
  EXPECT_EQ(rows, 5);
  for (const char* f : {"fluid_0000.vtk", "solid_0000.vtk", "fluid_0002.vtk", "fluid_0004.vtk", "solid_0004.vtk"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_FALSE(fs::exists(out / "fluid_0001.vtk"));
  EXPECT_TRUE(fs::exists(out / "final_state.txt"));
}

// Our own VTK files parse back to the mesh within 1e-12.
TEST(Cli, SnapshotsRoundTrip) {
  const fs::path dir = scratch("vtk");
  const fs::path out = dir / "out";
  ASSERT_EQ(run_cli("run " + write_config(dir, kSmallBenchmark).string() + " --quiet --out " + out.string()), 0);
  PhysParams p;
  p.delta_rho = 0.3;
  p.nu_f = 0.05;
  MeshSpec spec;
  const Discretization d = make_ring_discretization(p, spec);

  std::ifstream fluid_file(out / "fluid_0000.vtk");
  const VtkGrid fluid = read_vtk(fluid_file);
  const TriMesh& fm = *d.velocity->mesh;
  ASSERT_EQ(static_cast<int>(fluid.points.size()), fm.n_nodes());
  ASSERT_EQ(static_cast<int>(fluid.tris.size()), fm.n_tris());
  double worst = 0.0;
  for (int i = 0; i < fm.n_nodes(); ++i) worst = std::max(worst, (fluid.points[i] - fm.nodes[i]).norm());
  EXPECT_LE(worst, 1e-12);
  ASSERT_EQ(fluid.point_data.count("velocity"), 1u);
  EXPECT_EQ(fluid.point_data.at("pressure").size(), fluid.points.size());

  std::ifstream solid_file(out / "solid_0000.vtk");
  const VtkGrid solid = read_vtk(solid_file);
  const InitialData init = ring_initial_data(d);
  ASSERT_EQ(static_cast<int>(solid.points.size()), d.position->mesh->n_nodes());
  worst = 0.0;
  for (int i = 0; i < d.position->mesh->n_nodes(); ++i) {
    const Point2 x(init.x0.coeffs[d.position->dof(0, i)], init.x0.coeffs[d.position->dof(1, i)]);
    worst = std::max(worst, (solid.points[i] - x).norm());
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Cli, OutputsAreDeterministic) {
  const fs::path dir = scratch("determinism");
  const fs::path cfg = write_config(dir, kSmallBenchmark);
  ASSERT_EQ(run_cli("run " + cfg.string() + " --quiet --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("run " + cfg.string() + " --quiet --out " + (dir / "b").string()), 0);
  for (const char* f : {"energy.csv", "fluid_0004.vtk", "solid_0004.vtk", "final_state.txt"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Cli, RuntimeFailureLeavesManifest) {
  const fs::path dir = scratch("failure");
  const fs::path cfg = write_config(dir, std::string(kSmallBenchmark) +
                                             "scheme = BE_implicit\npicard_max_iter = 1\npicard_tol = 1e-14\n");
  // The scheme key is repeated on purpose above, so this must be a config error.
  EXPECT_EQ(run_cli("run " + cfg.string() + " --quiet --out " + (dir / "x").string()), 2);

  std::string text = kSmallBenchmark;
  text.replace(text.find("scheme = BE_semi"), 16, "scheme = BE_implicit");
  const fs::path cfg2 = write_config(dir, text + "picard_max_iter = 1\npicard_tol = 1e-14\n");
  const fs::path out = dir / "out";
  EXPECT_EQ(run_cli("run " + cfg2.string() + " --quiet --out " + out.string()), 3);
  const std::string manifest = slurp(out / "manifest.txt");
  EXPECT_NE(manifest.find("NoConvergence"), std::string::npos);
  EXPECT_NE(manifest.find("stage = time stepping"), std::string::npos);
}

TEST(Cli, SelfCheckPasses) { EXPECT_EQ(run_cli("check"), 0); }

TEST(Cli, UsageErrors) {
  EXPECT_NE(run_cli(""), 0);
  EXPECT_NE(run_cli("frobnicate"), 0);
}
