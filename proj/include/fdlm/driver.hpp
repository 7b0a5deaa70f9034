#pragma once

#include "fdlm/analysis.hpp"
#include "fdlm/benchmark.hpp"
#include "fdlm/config.hpp"
#include "fdlm/timestep.hpp"
#include "fdlm/vtk.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace fdlm {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitRuntime = 3 };

struct RunOptions {
  std::string out_dir;  // overrides output_dir when non-empty
  bool quiet = false;
};

namespace detail {

inline std::string fmt16(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

class OutFile {
 public:
  explicit OutFile(const std::string& path) : path_(path), os_(path) {
    if (!os_) throw IoError("cannot open '" + path + "' for writing");
  }
  ~OutFile() = default;
  std::ostream& stream() { return os_; }
  void close() {
    os_.close();
    if (!os_) throw IoError("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream os_;
};

struct JobContext {
  const RunConfig& cfg;
  std::string dir;
  bool quiet;
  std::string stage = "setup";
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> summary;

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return dir + "/" + name;
  }
  void log(const std::string& msg) const {
    if (!quiet) std::cerr << msg << '\n';
  }
};

inline void write_table(JobContext& ctx, const RateTable& t, const std::string& stem) {
  OutFile csv(ctx.path(stem + ".csv"));
  t.write_csv(csv.stream());
  csv.close();
  OutFile txt(ctx.path(stem + ".txt"));
  t.write_text(txt.stream());
  txt.close();
}

inline void run_benchmark(JobContext& ctx) {
  const RunConfig& c = ctx.cfg;
  ctx.stage = "discretization";
  const Discretization d = make_ring_discretization(c.params, c.mesh, c.ring);
  ctx.stage = "initialization";
  SystemState s0 = ring_initial_state(d, c.scheme, c.ring);
  const Energy e0 = energy(s0, d);

  OutFile csv(ctx.path("energy.csv"));
  std::ostream& os = csv.stream();
  os << "n,t,Pi_total,Pi_ratio,kinetic_fluid,kinetic_solid,elastic,div_residual,constraint_residual\n";
  auto row = [&](const SystemState& s) {
    const Energy e = energy(s, d);
    os << s.n << ',' << fmt16(s.t) << ',' << fmt16(e.total) << ',' << fmt16(e.total / e0.total) << ','
       << fmt16(e.kinetic_fluid) << ',' << fmt16(e.kinetic_solid) << ',' << fmt16(e.elastic) << ','
       << fmt16(s.last.divergence_residual) << ',' << fmt16(s.last.constraint_residual) << '\n';
  };
  auto snapshot = [&](const SystemState& s) {
    if (c.snapshot_stride > 0 && s.n % c.snapshot_stride == 0) {
      write_vtk_snapshot(s, d, ctx.dir);
      char name[32];
      std::snprintf(name, sizeof name, "%04d.vtk", s.n);
      ctx.outputs.push_back(std::string("fluid_") + name);
      ctx.outputs.push_back(std::string("solid_") + name);
    }
  };
  row(s0);
  snapshot(s0);

  double max_increase = -INFINITY, max_div = 0.0, max_con = 0.0;
  int max_iter = 0;
  const int steps = c.scheme.n_steps();
  ctx.stage = "time stepping";
  const SystemState end = run_steps(s0, d, c.scheme, [&](const SystemState& a, const SystemState& b) {
    row(b);
    snapshot(b);
    max_increase = std::max(max_increase, (energy(b, d).total - energy(a, d).total) / e0.total);
    max_div = std::max(max_div, b.last.divergence_residual);
    max_con = std::max(max_con, b.last.constraint_residual);
    max_iter = std::max(max_iter, b.last.iterations);
    if (b.n % 10 == 0 || b.n == steps) ctx.log("step " + std::to_string(b.n) + "/" + std::to_string(steps));
  });
  csv.close();

  ctx.stage = "output";
  OutFile st(ctx.path("final_state.txt"));
  write_state(st.stream(), end);
  st.close();
  ctx.summary = {{"steps", std::to_string(steps)},
                 {"Pi_initial", fmt16(e0.total)},
                 {"Pi_final", fmt16(energy(end, d).total)},
                 {"max_relative_energy_increase", fmt16(max_increase)},
                 {"max_div_residual", fmt16(max_div)},
                 {"max_constraint_residual", fmt16(max_con)},
                 {"max_fixed_point_iterations", std::to_string(max_iter)}};
}

inline void run_temporal(JobContext& ctx) {
  const RunConfig& c = ctx.cfg;
  TemporalOptions o;
  o.params = c.params;
  o.mesh = c.mesh;
  o.ring = c.ring;
  o.T = c.scheme.T;
  o.dts = c.dts;
  o.schemes = c.schemes;
  o.reference_factor = c.reference_factor;
  o.bdf2_extrapolate = c.scheme.bdf2_extrapolate;
  ctx.stage = "temporal convergence";
  const TemporalResult r = temporal_convergence(o, [&](const std::string& s) { ctx.log("run " + s); });
  ctx.stage = "output";
  write_table(ctx, r.table, "temporal_rates");
  ctx.summary = {{"max_div_residual", fmt16(r.monitor.max_divergence)},
                 {"max_constraint_residual", fmt16(r.monitor.max_constraint)},
                 {"max_algebraic_residual", fmt16(r.monitor.max_algebraic)},
                 {"solves", std::to_string(r.monitor.solves)}};
}

inline void run_spatial(JobContext& ctx) {
  const RunConfig& c = ctx.cfg;
  SpatialOptions o;
  o.coarsest_cells = c.coarsest_cells;
  o.levels = c.levels;
  o.velocity = c.mesh.velocity;
  o.pressure = c.mesh.pressure;
  o.solid_degree = c.mesh.solid_degree;
  o.multiplier_degree = c.mesh.multiplier_degree;
  o.nu = c.params.nu_f;
  ctx.stage = "spatial convergence";
  const RateTable t = spatial_convergence(o);
  ctx.stage = "output";
  write_table(ctx, t, "spatial_rates");
}

inline void run_infsup(JobContext& ctx) {
  const RunConfig& c = ctx.cfg;
  OutFile csv(ctx.path("infsup.csv"));
  std::ostream& os = csv.stream();
  os << "n_cells,h_fluid,h_solid,zeta_C1,zeta_C2,C0,stokes_beta,alpha1,max_eig_residual\n";
  int skipped = 0;
  // An estimate too large for the dense solvers is written as nan.
  auto guarded = [&](auto&& estimate, double& residual) {
    try {
      const auto r = estimate();
      residual = std::max(residual, r.eig_residual);
      if constexpr (std::is_same_v<std::decay_t<decltype(r)>, KernelCoercivity>) return r.alpha1;
      else return r.value;
    } catch (const DenseLimitExceeded& e) {
      ctx.log(std::string("skipped: ") + e.what());
      ++skipped;
      return std::nan("");
    }
  };
  for (int n : c.infsup_cells) {
    ctx.stage = "inf-sup n=" + std::to_string(n);
    ctx.log(ctx.stage);
    MeshSpec spec = c.mesh;
    spec.fluid_cells = n;
    spec.solid_h = 1.0 / n;
    const Discretization d = make_ring_discretization(c.params, spec, c.ring);
    const InitialData init = ring_initial_data(d, c.ring);
    const double dt = c.scheme.dt;
    double res = 0.0;
    const double z1 = guarded([&] { return estimate_zeta(*d.multiplier, *d.position, CouplingForm::C1_L2); }, res);
    const double z2 = guarded([&] { return estimate_zeta(*d.multiplier, *d.position, CouplingForm::C2_H1); }, res);
    const double c0 = guarded([&] { return estimate_projection_constant(*d.position); }, res);
    const double st = guarded([&] { return estimate_stokes_infsup(*d.velocity, *d.pressure); }, res);
    const double a1 = guarded(
        [&] {
          const BlockSystem sys = build_system(
              d, backward_euler_coefficients(c.params, dt), init.u0, init.x0,
              backward_euler_rhs(c.params, dt, init.u0.coeffs, init.x0.coeffs, init.x0.coeffs));
          return kernel_coercivity(sys, d.h1_u, d.mass_x + d.stiff_x);
        },
        res);
    os << n << ',' << fmt16(1.0 / n) << ',' << fmt16(d.position->mesh->max_diameter()) << ',' << fmt16(z1)
       << ',' << fmt16(z2) << ',' << fmt16(c0) << ',' << fmt16(st) << ',' << fmt16(a1) << ',' << fmt16(res)
       << '\n';
  }
  csv.close();
  ctx.summary = {{"estimates_skipped_dense_limit", std::to_string(skipped)}};
}

inline void write_manifest(const std::string& path, const RunConfig& cfg, const JobContext& ctx,
                           const std::string& status, const std::string& message, double wall) {
  std::ofstream os(path);
  if (!os) return;
  os << "fdlm_version = " << kVersion << '\n'
     << "job = " << to_string(cfg.job) << '\n'
     << "status = " << status << '\n'
     << "stage = " << ctx.stage << '\n';
  if (!message.empty()) os << "message = " << message << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", wall);
  os << "wall_time_s = " << buf << '\n';
  os << "[config]\n";
  for (const auto& [k, v] : cfg.echo) os << k << " = " << v << '\n';
  if (!ctx.summary.empty()) {
    os << "[summary]\n";
    for (const auto& [k, v] : ctx.summary) os << k << " = " << v << '\n';
  }
  os << "[outputs]\n";
  for (const auto& o : ctx.outputs) os << o << '\n';
}

}  // namespace detail

/// Executes one configured job. Returns the process exit code: 2 for an
/// unreadable or invalid configuration (nothing is written), 3 for a runtime
/// failure (the manifest names the failing stage).
inline int run_config(const std::string& config_path, const RunOptions& opt) {
  RunConfig cfg;
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot read config file '" + config_path + "'");
    cfg = parse_config(is);
  } catch (const ConfigError& e) {
    std::cerr << "fdlm: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;

  const auto t0 = std::chrono::steady_clock::now();
  detail::JobContext ctx{cfg, cfg.output_dir, opt.quiet, "setup", {}, {}};
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    std::cerr << "fdlm: cannot create output directory '" << cfg.output_dir << "': " << ec.message() << '\n';
    return kExitRuntime;
  }
  const std::string manifest = cfg.output_dir + "/manifest.txt";
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    switch (cfg.job) {
      case Job::Benchmark: detail::run_benchmark(ctx); break;
      case Job::TemporalConvergence: detail::run_temporal(ctx); break;
      case Job::SpatialConvergence: detail::run_spatial(ctx); break;
      case Job::InfSupReport: detail::run_infsup(ctx); break;
    }
  } catch (const std::exception& e) {
    std::string kind = "Error";
    if (dynamic_cast<const SolidEscaped*>(&e)) kind = "SolidEscaped";
    else if (dynamic_cast<const NoConvergence*>(&e)) kind = "NoConvergence";
    else if (dynamic_cast<const SingularSystem*>(&e)) kind = "SingularSystem";
    else if (dynamic_cast<const IoError*>(&e)) kind = "IoError";
    else if (dynamic_cast<const InvalidArgument*>(&e)) kind = "InvalidArgument";
    std::cerr << "fdlm: " << kind << " during " << ctx.stage << ": " << e.what() << '\n';
    detail::write_manifest(manifest, cfg, ctx, "failed (" + kind + ")", e.what(), elapsed());
    return kExitRuntime;
  }
  detail::write_manifest(manifest, cfg, ctx, "ok", "", elapsed());
  ctx.log("wrote " + std::to_string(ctx.outputs.size()) + " files to " + cfg.output_dir);
  return kExitOk;
}

}  // namespace fdlm
