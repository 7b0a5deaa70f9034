#include "fdlm/driver.hpp"
#include "fdlm/selfcheck.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Fictitious-domain fluid-structure solver"};
  app.set_version_flag("--version", fdlm::kVersion);
  app.require_subcommand(1);

  fdlm::RunOptions opt;
  std::string config;
  CLI::App* run = app.add_subcommand("run", "Run the job described by a config file");
  run->add_option("config", config, "key=value configuration file")->required();
  run->add_option("--out", opt.out_dir, "Output directory (overrides output_dir)");
  run->add_flag("--quiet", opt.quiet, "Suppress progress messages");

  CLI::App* check = app.add_subcommand("check", "Run the invariant self-test suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fdlm::kExitUsage;
  }

  if (*run) return fdlm::run_config(config, opt);

  if (*check) {
    bool ok = true;
    for (const fdlm::CheckResult& r : fdlm::run_selfcheck()) {
      std::printf("%s  %-48s value %.3e  tolerance %.1e\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                  r.value, r.tolerance);
      ok = ok && r.passed;
    }
    return ok ? 0 : 1;
  }
  return fdlm::kExitUsage;
}
