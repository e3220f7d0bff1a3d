#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>

#include "mdurn/errors.hpp"
#include "mdurn/montecarlo.hpp"

using namespace mdurn;

namespace {

// bit-level equality, so that NaN snapshots compare equal to themselves
bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

ExperimentConfig multinomial_h0(std::int64_t horizon, std::int64_t reps,
                                std::uint64_t seed) {
  ExperimentConfig config;
  config.initial_a = 5;
  config.initial_b = 5;
  config.models.sample_size = SampleSizeModel::uniform(5);
  config.models.reinforcement =
      ReinforcementModel::shifted_multinomial(12, 4.0 / 15.0, 4.0 / 15.0);
  config.run.horizon = horizon;
  config.run.replications = reps;
  config.run.master_seed = seed;
  config.run.theta = 0.05;
  return config;
}

}  // namespace

TEST_CASE("worked example trajectory stays interior and conserves balls") {
  ExperimentConfig config = multinomial_h0(20000, 1, 12345);
  TrajectoryOptions options;
  options.linear_snapshots = true;
  config.run.stride = 100;
  std::vector<StepRecord> records;
  options.record_sink = &records;

  const TrajectoryResult traj = run_trajectory(config, 0, options);
  CHECK(traj.final_state.steps == 20000);
  CHECK(records.size() == 20000);
  for (const auto& row : traj.snapshots) {
    CHECK(row.proportion_a > 0.0);
    CHECK(row.proportion_a < 1.0);
  }

  // conservation audit, integer exact
  std::int64_t sum_ax = 0, sum_b_nx = 0;
  for (const auto& rec : records) {
    sum_ax += rec.reinf_a * rec.a_in_sample;
    sum_b_nx += rec.reinf_b * rec.b_in_sample();
  }
  CHECK(traj.final_state.count_a - config.initial_a == sum_ax);
  CHECK(traj.final_state.count_b - config.initial_b == sum_b_nx);

  // estimators land near the analytic moments at this horizon
  REQUIRE(traj.test.has_value());
  const auto mean_a = traj.accumulators.mean_a();
  CHECK(std::abs(*mean_a - 4.2) < 0.2);
}

TEST_CASE("same seed, same trajectory; different replication, different one") {
  const ExperimentConfig config = multinomial_h0(500, 1, 777);
  TrajectoryOptions options;
  options.linear_snapshots = true;

  const TrajectoryResult a = run_trajectory(config, 0, options);
  const TrajectoryResult b = run_trajectory(config, 0, options);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    CHECK(a.snapshots[i].count_a == b.snapshots[i].count_a);
    CHECK(same_bits(a.snapshots[i].zeta0, b.snapshots[i].zeta0));
  }

  const TrajectoryResult c = run_trajectory(config, 1, options);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    if (a.snapshots[i].count_a != c.snapshots[i].count_a) any_difference = true;
  CHECK(any_difference);
}

TEST_CASE("reinforcement stream ignores the urn's evolution") {
  // same master seed and replication, very different urn dynamics
  ExperimentConfig slow = multinomial_h0(300, 1, 4242);
  slow.models.sample_size = SampleSizeModel::constant(1);
  ExperimentConfig fast = multinomial_h0(300, 1, 4242);
  fast.models.sample_size = SampleSizeModel::uniform(5);
  fast.initial_a = 50;
  fast.initial_b = 1;

  std::vector<StepRecord> slow_records, fast_records;
  TrajectoryOptions so, fo;
  so.record_sink = &slow_records;
  fo.record_sink = &fast_records;
  run_trajectory(slow, 3, so);
  run_trajectory(fast, 3, fo);
  REQUIRE(slow_records.size() == fast_records.size());
  for (std::size_t i = 0; i < slow_records.size(); ++i) {
    CHECK(slow_records[i].reinf_a == fast_records[i].reinf_a);
    CHECK(slow_records[i].reinf_b == fast_records[i].reinf_b);
  }
}

TEST_CASE("balanced constant pair keeps the proportion a martingale") {
  ExperimentConfig config;
  config.initial_a = 3;
  config.initial_b = 7;
  config.models.sample_size = SampleSizeModel::constant(1);
  config.models.reinforcement = ReinforcementModel::constant_pair(2, 2);
  config.run.horizon = 200;
  config.run.master_seed = 2718;

  const int reps = 10000;
  double sum_z = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const TrajectoryResult traj = run_trajectory(config, rep);
    sum_z += traj.final_state.proportion_a();
  }
  const double mean_z = sum_z / reps;
  // E Z_n = Z_0 = 0.3; Var Z_n <= 1/4, so 4 se is a generous cap
  const double se = std::sqrt(0.25 / reps);
  CHECK(std::abs(mean_z - 0.3) < 4.0 * se);
}

TEST_CASE("estimator means concentrate on the analytic moments") {
  // reduced-scale consistency check; the full-scale one lives in the
  // acceptance suite
  const ExperimentConfig config = multinomial_h0(4000, 50, 555);
  double sum_mean_a = 0.0, sum_var_a = 0.0, sum_cross = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const TrajectoryResult traj = run_trajectory(config, rep);
    sum_mean_a += *traj.accumulators.mean_a();
    sum_var_a += *traj.accumulators.var_a();
    sum_cross += *traj.accumulators.cross();
  }
  CHECK(std::abs(sum_mean_a / 50 - 4.2) < 0.05);
  CHECK(std::abs(sum_var_a / 50 - 176.0 / 75.0) < 0.15);
  CHECK(std::abs(sum_cross / 50 - 1259.0 / 75.0) < 0.3);
}

TEST_CASE("estimator means track the limit means for every model kind") {
  // reduced scale; one statistical smoke check per reinforcement kind
  struct Case {
    const char* name;
    ReinforcementModel model;
    double tolerance;
    std::int64_t horizon;
  };
  std::vector<ReinforcementModel::Segment> segments;
  segments.push_back({200, ReinforcementModel::constant_pair(4, 4)});
  segments.push_back({std::nullopt, ReinforcementModel::constant_pair(2, 3)});
  const std::vector<Case> cases = {
      {"constant", ReinforcementModel::constant_pair(3, 2), 1e-12, 4000},
      {"product", ReinforcementModel::product({0.3, 0.4, 0.3}, {0.5, 0.5}),
       0.05, 4000},
      {"joint_table",
       ReinforcementModel::joint_table({{1, 2, 0.25}, {2, 1, 0.5}, {3, 3, 0.25}}),
       0.05, 4000},
      // the early segment's weight fades like 1/n; run long enough for the
      // transient to sit inside the tolerance
      {"sequence", ReinforcementModel::sequence(std::move(segments),
                                                MeanEnvelope{1000.0, 1.0}),
       0.08, 20000},
  };
  for (const auto& test_case : cases) {
    CAPTURE(test_case.name);
    ExperimentConfig config = multinomial_h0(test_case.horizon, 30, 1312);
    config.models.reinforcement = test_case.model;
    const double target_a = test_case.model.limit_moments().mean_a;
    const double target_b = test_case.model.limit_moments().mean_b;
    double sum_a = 0.0, sum_b = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
      const TrajectoryResult traj = run_trajectory(config, rep);
      sum_a += *traj.accumulators.mean_a();
      sum_b += *traj.accumulators.mean_b();
    }
    CHECK(std::abs(sum_a / 30 - target_a) < test_case.tolerance);
    CHECK(std::abs(sum_b / 30 - target_b) < test_case.tolerance);
  }
}

TEST_CASE("level sanity: single draws with equal-mean random reinforcement") {
  // with every sample of size one the normalization collapses to 1 and the
  // test must still hold its level
  ExperimentConfig config;
  config.initial_a = 5;
  config.initial_b = 5;
  config.models.sample_size = SampleSizeModel::constant(1);
  config.models.reinforcement =
      ReinforcementModel::product({0.5, 0.25, 0.25}, {0.5, 0.25, 0.25});
  config.run.horizon = 5000;
  config.run.replications = 1000;
  config.run.master_seed = 60601;
  config.run.theta = 0.05;
  config.run.jobs = 2;

  const LevelResult level = empirical_rejection_rate(config);
  CHECK(level.decided == 1000);
  CHECK(level.wilson_lo <= 0.05);
  CHECK(level.wilson_hi >= 0.05);
  for (const auto& row : level.rows)
    if (row.decided()) CHECK(row.test->gamma0 == doctest::Approx(1.0));
}

TEST_CASE("rejection rates are monotone in the level") {
  const ExperimentConfig config = multinomial_h0(2000, 200, 90210);
  const LevelResult level = empirical_rejection_rate(config);
  CHECK(level.decided == 200);
  CHECK(level.insufficient == 0);

  double previous = 0.0;
  for (double theta : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    std::int64_t rejected = 0;
    for (const auto& row : level.rows)
      if (row.test->p_value < theta) ++rejected;
    const double rate = static_cast<double>(rejected) / 200.0;
    CHECK(rate >= previous);
    previous = rate;
  }
}

TEST_CASE("insufficient replications are counted separately") {
  ExperimentConfig config = multinomial_h0(500, 20, 31);
  config.models.reinforcement = ReinforcementModel::constant_pair(2, 2);
  const LevelResult level = empirical_rejection_rate(config);
  CHECK(level.decided == 0);
  CHECK(level.insufficient == 20);
  CHECK(level.rate == 0.0);
}

TEST_CASE("aggregation does not depend on the worker count") {
  ExperimentConfig serial = multinomial_h0(1000, 64, 808);
  serial.run.jobs = 1;
  ExperimentConfig parallel = multinomial_h0(1000, 64, 808);
  parallel.run.jobs = 4;

  const LevelResult a = empirical_rejection_rate(serial);
  const LevelResult b = empirical_rejection_rate(parallel);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rate == b.rate);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].decided() == b.rows[i].decided());
    if (a.rows[i].decided())
      CHECK(same_bits(a.rows[i].test->zeta0, b.rows[i].test->zeta0));
  }
}

TEST_CASE("a single replication rerun in isolation reproduces its row") {
  const ExperimentConfig config = multinomial_h0(1500, 16, 2025);
  const LevelResult level = empirical_rejection_rate(config);
  const TrajectoryResult solo = run_trajectory(config, 5);
  REQUIRE(level.rows[5].decided());
  REQUIRE(solo.test.has_value());
  CHECK(same_bits(level.rows[5].test->zeta0, solo.test->zeta0));
  CHECK(same_bits(level.rows[5].test->p_value, solo.test->p_value));
}

TEST_CASE("low replication counts raise the warning flag") {
  ExperimentConfig config = multinomial_h0(200, 10, 1);
  config.test.min_count_a = 1;
  config.test.min_count_b = 1;
  const LevelResult level = empirical_rejection_rate(config);
  CHECK(level.low_replication_warning);
}

TEST_CASE("power sweep: grid handling and degenerate deltas") {
  ExperimentConfig config = multinomial_h0(800, 40, 99);
  const auto points = power_curve(config, {0.0, 0.05});
  REQUIRE(points.size() == 2);
  CHECK(points[0].delta == 0.0);
  CHECK(points[0].p_a == doctest::Approx(4.0 / 15.0));
  CHECK(points[1].p_a == doctest::Approx(4.0 / 15.0 + 0.05 / 12.0));
  for (const auto& p : points) {
    CHECK(p.decided + p.insufficient == 40);
    CHECK(p.ci_lo <= p.emp_power);
    CHECK(p.ci_hi >= p.emp_power);
  }

  // a delta that pushes p_a + p_b above 1 is a config error
  CHECK_THROWS_AS(power_curve(config, {9.0}), ConfigError);
  // so is a negative delta
  CHECK_THROWS_AS(power_curve(config, {-0.1}), ConfigError);
  // and a non-multinomial model
  ExperimentConfig wrong = config;
  wrong.models.reinforcement = ReinforcementModel::constant_pair(3, 2);
  CHECK_THROWS_AS(power_curve(wrong, {0.0}), ConfigError);
}

TEST_CASE("rate diagnostics: regime guard and coarse slope") {
  ExperimentConfig config;
  config.initial_a = 5;
  config.initial_b = 5;
  config.models.sample_size = SampleSizeModel::constant(1);
  config.models.reinforcement = ReinforcementModel::constant_pair(3, 2);
  config.run.horizon = 100000;
  config.run.master_seed = 5150;

  const RateReport report = rate_diagnostics(config, 0);
  CHECK(report.target_exponent == doctest::Approx(2.0 / 3.0));
  // coarse check at this short horizon; the tight one is in acceptance
  CHECK(std::abs(report.exponent_estimate - 2.0 / 3.0) < 0.15);
  CHECK(report.exponent_estimate > 0.0);
  CHECK(report.exponent_estimate <= 1.0);
  CHECK(report.final_allocation_a > 0.9);
  REQUIRE(!report.series.empty());
  CHECK(report.series.back().step == 100000);

  ExperimentConfig equal = config;
  equal.models.reinforcement = ReinforcementModel::constant_pair(2, 2);
  CHECK_THROWS_AS(rate_diagnostics(equal, 0), ConfigError);
}

TEST_CASE("config validation failures abort runs") {
  ExperimentConfig config = multinomial_h0(100, 5, 1);
  config.run.horizon = 0;
  CHECK_THROWS_AS(empirical_rejection_rate(config), ConfigError);

  ExperimentConfig bad_theta = multinomial_h0(100, 5, 1);
  bad_theta.run.theta = 1.5;
  CHECK_THROWS_AS(run_trajectory(bad_theta, 0), ConfigError);

  ExperimentConfig bad_model = multinomial_h0(100, 5, 1);
  bad_model.models.sample_size = SampleSizeModel::table({0.5, 0.3});
  CHECK_THROWS_AS(run_trajectory(bad_model, 0), ConfigError);
}

TEST_CASE("model violations carry the offending step") {
  ExperimentConfig config = multinomial_h0(100, 1, 64);
  // urn starts with 2 balls. forcing a draw of 5 fails immediately
  config.initial_a = 1;
  config.initial_b = 1;
  config.models.sample_size = SampleSizeModel::table({0, 0, 0, 0, 1.0});
  try {
    run_trajectory(config, 0);
    FAIL("expected a model violation");
  } catch (const ModelViolation& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("wilson interval brackets the point estimate") {
  double lo = 0.0, hi = 0.0;
  wilson_interval(25, 500, &lo, &hi);
  CHECK(lo > 0.03);
  CHECK(hi < 0.08);
  CHECK(lo < 0.05);
  CHECK(hi > 0.05);
  wilson_interval(0, 100, &lo, &hi);
  CHECK(lo == 0.0);
  CHECK(hi > 0.0);
  wilson_interval(100, 100, &lo, &hi);
  CHECK(hi == 1.0);
  CHECK(lo < 1.0);
}
