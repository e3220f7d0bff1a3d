#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mdurn/inference.hpp"
#include "mdurn/models.hpp"

namespace mdurn {

struct RunSettings {
  std::int64_t horizon = 10000;      // steps per trajectory
  std::int64_t stride = 1;           // snapshot every `stride` steps
  std::int64_t replications = 100;
  std::uint64_t master_seed = 1;
  double theta = 0.05;
  int jobs = 1;  // replication-level parallelism
};

struct DiagnosticsSettings {
  double snapshot_growth = 1.1;  // geometric snapshot spacing for rate work
  double slope_window = 0.5;     // trailing fraction of log-horizon to fit
};

struct ExperimentConfig {
  std::int64_t initial_a = 1;
  std::int64_t initial_b = 1;
  ModelSpec models;
  RunSettings run;
  TestOptions test;
  DiagnosticsSettings diagnostics;
};

// One emitted line of a trajectory: the step that just happened, the
// composition after it, and the estimator state at that point.
struct SnapshotRow {
  std::int64_t step = 0;
  std::int64_t sample_size = 0;
  std::int64_t a_in_sample = 0;
  std::int64_t reinf_a = 0;
  std::int64_t reinf_b = 0;
  std::int64_t count_a = 0;  // urn composition after the step
  std::int64_t count_b = 0;
  std::int64_t total = 0;
  double proportion_a = 0.0;
  std::int64_t seen_a = 0;      // cumulative color-A observations
  std::int64_t seen_b = 0;
  std::int64_t sum_sample = 0;  // cumulative sample size
  // Estimator snapshot; NaN when the quantity is still undefined.
  double mean_a = 0.0;
  double mean_b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  double corr_raw = 0.0;
  double size_mean = 0.0;
  double size_second = 0.0;
  double proportion_mean = 0.0;
  double allocation_a = 0.0;
  double gamma0 = 0.0;  // NaN until the test gate is met
  double zeta0 = 0.0;
};

struct TrajectoryOptions {
  bool linear_snapshots = false;    // every run.stride steps
  bool geometric_snapshots = false; // powers of diagnostics.snapshot_growth
  std::vector<StepRecord>* record_sink = nullptr;  // optional full stream
};

struct TrajectoryResult {
  std::int64_t replication = 0;
  UrnState final_state;
  Accumulators accumulators;
  std::optional<TestResult> test;  // empty when the data gate was not met
  std::vector<SnapshotRow> snapshots;
};

// Runs one trajectory in causal order: the sample-size rule sees the past,
// the group is sampled from the urn, and the reinforcement pair comes from a
// substream keyed only by (master seed, replication, step). Deterministic in
// (master seed, replication).
TrajectoryResult run_trajectory(const ExperimentConfig& config,
                                std::int64_t replication,
                                const TrajectoryOptions& options = {});

struct ReplicationOutcome {
  std::int64_t replication = 0;
  std::int64_t steps = 0;
  std::optional<TestResult> test;
  bool decided() const { return test.has_value(); }
};

struct LevelResult {
  std::vector<ReplicationOutcome> rows;  // ordered by replication index
  std::int64_t decided = 0;
  std::int64_t insufficient = 0;
  std::int64_t rejected = 0;
  double rate = 0.0;  // rejected / decided
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  bool low_replication_warning = false;  // fewer than 100 replications
};

// Rejection frequency at the configured level across replications.
// Replications that never meet the data gate are counted separately.
LevelResult empirical_rejection_rate(const ExperimentConfig& config);

// 95% Wilson score interval for a binomial proportion.
void wilson_interval(std::int64_t successes, std::int64_t trials, double* lo,
                     double* hi);

struct PowerPoint {
  double delta = 0.0;       // injected mean difference
  double p_a = 0.0;         // resulting first coordinate probability
  double emp_power = 0.0;   // rejection frequency
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double approx_power = 0.0;  // mean of the per-replication approximations
  std::int64_t decided = 0;
  std::int64_t insufficient = 0;
};

// Sweeps the mean difference by raising the first multinomial probability:
// p_a = p_b + delta / size. Requires a shifted-multinomial reinforcement
// model. Each grid point uses an independent sub-seed; points are
// reproducible in isolation.
std::vector<PowerPoint> power_curve(const ExperimentConfig& config,
                                    const std::vector<double>& deltas);

struct RatePoint {
  std::int64_t step = 0;
  std::int64_t count_b = 0;    // K
  double proportion_a = 0.0;   // Z
  double ratio_k = 0.0;        // K / n^(mB/mA)
  double residual_z = 0.0;     // n^(1 - mB/mA) * (1 - Z)
  double ratio_seen_b = 0.0;   // cumulative B observations / n^(mB/mA)
  double ratio_hk = 0.0;       // H / K^(mA/mB)
  double allocation_a = 0.0;   // cumulative A observations / total sampled
};

struct RateReport {
  double exponent_estimate = 0.0;  // least-squares slope of log K vs log n
  double target_exponent = 0.0;    // mB / mA
  double spread_ratio_k = 0.0;     // relative spread over the last decade
  double spread_residual_z = 0.0;
  double spread_ratio_seen_b = 0.0;
  double final_allocation_a = 0.0;
  std::vector<RatePoint> series;   // geometrically spaced
};

// Growth diagnostics for the dominant-color regime. Requires limit means
// with mean_a > mean_b; refuses to run otherwise.
RateReport rate_diagnostics(const ExperimentConfig& config,
                            std::int64_t replication);

}  // namespace mdurn
