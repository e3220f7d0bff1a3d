#include "mdurn/runner.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "mdurn/config.hpp"
#include "mdurn/errors.hpp"
#include "mdurn/version.hpp"

namespace mdurn {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Outputs {
 public:
  Outputs(const ExperimentConfig& config, std::string command,
          std::filesystem::path out_dir)
      : config_(config),
        command_(std::move(command)),
        out_dir_(std::move(out_dir)),
        started_(iso_timestamp()) {
    std::filesystem::create_directories(out_dir_);
  }

  std::ofstream open(const std::string& name) {
    const auto path = out_dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    written_.push_back(name);
    return out;
  }

  // The manifest goes last so that its presence marks a completed run.
  void finish() {
    json manifest;
    manifest["tool"] = "mdurn";
    manifest["version"] = kVersion;
    manifest["command"] = command_;
    manifest["master_seed"] = config_.run.master_seed;
    manifest["started_utc"] = started_;
    manifest["finished_utc"] = iso_timestamp();
    manifest["config"] = config_to_json(config_);
    manifest["outputs"] = written_;
    written_.push_back("manifest.json");
    std::ofstream out(out_dir_ / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  const ExperimentConfig& config_;
  std::string command_;
  std::filesystem::path out_dir_;
  std::string started_;
  std::vector<std::string> written_;
};

constexpr const char* kTrajectoryHeader =
    "n,N,X,A,B,H,K,S,Z,m_hat_A,m_hat_B,sigma2_hat_A,sigma2_hat_B,rho_hat,"
    "mu_hat,q_N_hat,M_n,alloc_A,gamma0,zeta0,band_lo,band_hi";

void write_trajectory_csv(std::ofstream& out,
                          const std::vector<SnapshotRow>& rows, double theta) {
  const double band = normal_quantile(1.0 - theta / 2.0);
  const std::string band_lo = format_double(-band);
  const std::string band_hi = format_double(band);
  out << kTrajectoryHeader << "\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.sample_size << ',' << r.a_in_sample << ','
        << r.reinf_a << ',' << r.reinf_b << ',' << r.count_a << ','
        << r.count_b << ',' << r.total << ',' << format_double(r.proportion_a)
        << ',' << format_double(r.mean_a) << ',' << format_double(r.mean_b)
        << ',' << format_double(r.var_a) << ',' << format_double(r.var_b)
        << ',' << format_double(r.corr_raw) << ',' << format_double(r.size_mean)
        << ',' << format_double(r.size_second) << ','
        << format_double(r.proportion_mean) << ','
        << format_double(r.allocation_a) << ',' << format_double(r.gamma0)
        << ',' << format_double(r.zeta0) << ',' << band_lo << ',' << band_hi
        << "\n";
  }
}

json test_result_json(const TestResult& t, std::int64_t steps) {
  return json{{"n", steps},
              {"zeta0", t.zeta0},
              {"gamma0", t.gamma0},
              {"lambda", t.lambda},
              {"p_value", t.p_value},
              {"reject", t.reject},
              {"theta", t.theta},
              {"approx_power", t.approx_power},
              {"rho_raw", t.corr_raw},
              {"gamma_floored", t.gamma_floored}};
}

void write_aggregate_csv(std::ofstream& out,
                         const std::vector<ReplicationOutcome>& rows) {
  out << "rep,n,zeta0,gamma0,lambda,p_value,reject,approx_power,floored_flag,"
         "status\n";
  for (const auto& row : rows) {
    out << row.replication << ',' << row.steps << ',';
    if (row.decided()) {
      const TestResult& t = *row.test;
      out << format_double(t.zeta0) << ',' << format_double(t.gamma0) << ','
          << format_double(t.lambda) << ',' << format_double(t.p_value) << ','
          << (t.reject ? 1 : 0) << ',' << format_double(t.approx_power) << ','
          << (t.gamma_floored ? 1 : 0) << ",ok\n";
    } else {
      out << "nan,nan,nan,nan,0,nan,0,insufficient\n";
    }
  }
}

}  // namespace

json run_simulate(const ExperimentConfig& config,
                  const std::filesystem::path& out_dir) {
  Outputs outputs(config, "simulate", out_dir);
  TrajectoryOptions options;
  options.linear_snapshots = true;
  const TrajectoryResult traj = run_trajectory(config, 0, options);
  {
    auto out = outputs.open("trajectory.csv");
    write_trajectory_csv(out, traj.snapshots, config.run.theta);
  }
  outputs.finish();

  json summary;
  summary["command"] = "simulate";
  summary["steps"] = traj.final_state.steps;
  summary["rows"] = traj.snapshots.size();
  summary["final"] = {{"H", traj.final_state.count_a},
                      {"K", traj.final_state.count_b},
                      {"S", traj.final_state.total()},
                      {"Z", traj.final_state.proportion_a()}};
  if (traj.test)
    summary["test"] = test_result_json(*traj.test, traj.final_state.steps);
  summary["outputs"] = outputs.written();
  return summary;
}

json run_test_command(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir) {
  Outputs outputs(config, "test", out_dir);
  const TrajectoryResult traj = run_trajectory(config, 0);
  if (!traj.test) {
    // Reconstruct the gate failure as the error the caller sees.
    make_test_inputs(traj.accumulators, config.test);
    throw InsufficientData("trajectory does not support the test");
  }
  const json record = test_result_json(*traj.test, traj.final_state.steps);
  {
    auto out = outputs.open("test_result.json");
    out << record.dump() << "\n";  // one JSON-lines record
  }
  outputs.finish();

  json summary;
  summary["command"] = "test";
  summary["result"] = record;
  summary["outputs"] = outputs.written();
  return summary;
}

json run_level(const ExperimentConfig& config,
               const std::filesystem::path& out_dir) {
  Outputs outputs(config, "level", out_dir);
  const LevelResult level = empirical_rejection_rate(config);
  {
    auto out = outputs.open("aggregate.csv");
    write_aggregate_csv(out, level.rows);
  }
  outputs.finish();

  json summary;
  summary["command"] = "level";
  summary["replications"] = config.run.replications;
  summary["decided"] = level.decided;
  summary["insufficient"] = level.insufficient;
  summary["rejected"] = level.rejected;
  summary["rate"] = level.rate;
  summary["wilson_ci"] = {level.wilson_lo, level.wilson_hi};
  summary["theta"] = config.run.theta;
  if (level.low_replication_warning)
    summary["warning"] = "fewer than 100 replications; the rate is noisy";
  summary["outputs"] = outputs.written();
  return summary;
}

json run_power(const ExperimentConfig& config,
               const std::filesystem::path& out_dir,
               const std::vector<double>& deltas) {
  Outputs outputs(config, "power", out_dir);
  const std::vector<PowerPoint> points = power_curve(config, deltas);
  {
    auto out = outputs.open("power_curve.csv");
    out << "delta,emp_power,approx_power,ci_lo,ci_hi\n";
    for (const auto& p : points)
      out << format_double(p.delta) << ',' << format_double(p.emp_power) << ','
          << format_double(p.approx_power) << ',' << format_double(p.ci_lo)
          << ',' << format_double(p.ci_hi) << "\n";
  }
  outputs.finish();

  json summary;
  summary["command"] = "power";
  summary["points"] = points.size();
  summary["replications_per_point"] = config.run.replications;
  json grid = json::array();
  for (const auto& p : points)
    grid.push_back({{"delta", p.delta},
                    {"emp_power", p.emp_power},
                    {"approx_power", p.approx_power},
                    {"insufficient", p.insufficient}});
  summary["curve"] = std::move(grid);
  summary["outputs"] = outputs.written();
  return summary;
}

json run_diagnose(const ExperimentConfig& config,
                  const std::filesystem::path& out_dir) {
  Outputs outputs(config, "diagnose", out_dir);
  const RateReport report = rate_diagnostics(config, 0);
  {
    auto out = outputs.open("rate_series.csv");
    out << "n,K,Z,ratio_K,residual_Z,ratio_NB,ratio_HK,alloc_A\n";
    for (const auto& p : report.series)
      out << p.step << ',' << p.count_b << ','
          << format_double(p.proportion_a) << ',' << format_double(p.ratio_k)
          << ',' << format_double(p.residual_z) << ','
          << format_double(p.ratio_seen_b) << ',' << format_double(p.ratio_hk)
          << ',' << format_double(p.allocation_a) << "\n";
  }
  outputs.finish();

  json summary;
  summary["command"] = "diagnose";
  summary["exponent_estimate"] = report.exponent_estimate;
  summary["target_exponent"] = report.target_exponent;
  summary["spread_ratio_K"] = report.spread_ratio_k;
  summary["spread_residual_Z"] = report.spread_residual_z;
  summary["spread_ratio_NB"] = report.spread_ratio_seen_b;
  summary["final_alloc_A"] = report.final_allocation_a;
  summary["outputs"] = outputs.written();
  return summary;
}

}  // namespace mdurn
