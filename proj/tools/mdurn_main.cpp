// Command-line front end. Talks to the engine exclusively through the
// public C API in mdurn.h.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime model violation,
// 4 insufficient data, 1 anything else.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mdurn.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::int64_t> horizon;
  std::optional<std::int64_t> steps;  // simulate-only alias for horizon
  std::optional<std::int64_t> reps;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> stride;
  std::optional<std::int64_t> jobs;
  std::optional<double> theta;
  std::string delta_grid = "0:0.1:0.005";  // start:stop:step
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_reps) {
  cmd->add_option("-c,--config", flags.config_path, "Config file (JSON)")
      ->required();
  cmd->add_option("-o,--out-dir", flags.out_dir, "Output directory");
  cmd->add_option("--horizon", flags.horizon, "Steps per trajectory");
  cmd->add_option("--seed", flags.seed, "Master seed");
  cmd->add_option("--stride", flags.stride, "Snapshot stride");
  cmd->add_option("--theta", flags.theta, "Test level");
  if (with_reps) {
    cmd->add_option("--reps", flags.reps, "Replications");
    cmd->add_option("--jobs", flags.jobs, "Worker threads");
  }
}

int exit_code_for(mdurn_status status) {
  switch (status) {
    case MDURN_OK:
      return 0;
    case MDURN_ERR_INVALID:
    case MDURN_ERR_CONFIG:
    case MDURN_ERR_IO:
      return 2;
    case MDURN_ERR_MODEL:
      return 3;
    case MDURN_ERR_INSUFFICIENT:
      return 4;
    default:
      return 1;
  }
}

int fail(mdurn_status status) {
  std::fprintf(stderr, "error: %s\n", mdurn_last_error());
  return exit_code_for(status);
}

mdurn_status apply_overrides(mdurn_config* config, const CommonFlags& flags) {
  mdurn_status status = MDURN_OK;
  const auto set_int = [&](const char* key, std::optional<std::int64_t> v) {
    if (status == MDURN_OK && v)
      status = mdurn_config_override_int(config, key, *v);
  };
  set_int("run.horizon", flags.horizon);
  set_int("run.horizon", flags.steps);
  set_int("run.replications", flags.reps);
  set_int("run.seed", flags.seed);
  set_int("run.stride", flags.stride);
  set_int("run.jobs", flags.jobs);
  if (status == MDURN_OK && flags.theta)
    status = mdurn_config_override_real(config, "run.theta", *flags.theta);
  return status;
}

bool parse_delta_grid(const std::string& text, double* start, double* stop,
                      double* step) {
  return std::sscanf(text.c_str(), "%lf:%lf:%lf", start, stop, step) == 3;
}

void print_summary(const char* summary) {
  if (summary) std::printf("%s\n", summary);
}

int run(const std::string& command, const CommonFlags& flags) {
  mdurn_config* config = nullptr;
  mdurn_status status = mdurn_config_load(flags.config_path.c_str(), &config);
  if (status != MDURN_OK) return fail(status);

  status = apply_overrides(config, flags);
  if (status != MDURN_OK) {
    mdurn_config_free(config);
    return fail(status);
  }

  char* summary = nullptr;
  if (command == "simulate") {
    status = mdurn_run_simulate(config, flags.out_dir.c_str(), &summary);
  } else if (command == "test") {
    status = mdurn_run_test(config, flags.out_dir.c_str(), &summary);
  } else if (command == "level") {
    status = mdurn_run_level(config, flags.out_dir.c_str(), &summary);
  } else if (command == "power") {
    double start = 0.0, stop = 0.0, step = 0.0;
    if (!parse_delta_grid(flags.delta_grid, &start, &stop, &step)) {
      std::fprintf(stderr,
                   "error: --delta-grid must look like start:stop:step\n");
      mdurn_config_free(config);
      return 2;
    }
    status = mdurn_run_power(config, flags.out_dir.c_str(), start, stop, step,
                             &summary);
  } else if (command == "diagnose") {
    status = mdurn_run_diagnose(config, flags.out_dir.c_str(), &summary);
  }

  int code = 0;
  if (status == MDURN_OK) {
    print_summary(summary);
  } else {
    code = fail(status);
  }
  mdurn_string_free(summary);
  mdurn_config_free(config);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Two-color urn with random multidrawing and random reinforcement: "
      "simulation, estimation and the one-sided test of equal reinforcement "
      "means"};
  app.set_version_flag("--version", std::string(mdurn_version()));
  app.require_subcommand(1);

  CommonFlags flags;

  CLI::App* simulate =
      app.add_subcommand("simulate", "Run one trajectory and write it as CSV");
  add_common_flags(simulate, flags, /*with_reps=*/false);
  simulate->add_option("--steps", flags.steps,
                       "Trajectory length (alias for --horizon)");

  CLI::App* test = app.add_subcommand(
      "test", "Run one trajectory and test equal reinforcement means");
  add_common_flags(test, flags, /*with_reps=*/false);

  CLI::App* level = app.add_subcommand(
      "level", "Estimate the empirical rejection rate under the configured "
               "model");
  add_common_flags(level, flags, /*with_reps=*/true);

  CLI::App* power = app.add_subcommand(
      "power", "Sweep the mean difference and tabulate empirical and "
               "approximate power");
  add_common_flags(power, flags, /*with_reps=*/true);
  power->add_option("--delta-grid", flags.delta_grid,
                    "Mean-difference grid as start:stop:step");

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Growth-rate diagnostics for the dominant-color regime");
  add_common_flags(diagnose, flags, /*with_reps=*/false);

  CLI11_PARSE(app, argc, argv);

  for (const CLI::App* cmd : {simulate, test, level, power, diagnose})
    if (cmd->parsed()) return run(cmd->get_name(), flags);
  return 2;
}
