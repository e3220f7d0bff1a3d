#include "mdurn/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "mdurn/errors.hpp"

namespace mdurn {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double or_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

void fill_estimates(const ExperimentConfig& config, const Accumulators& acc,
                    SnapshotRow& row) {
  row.seen_a = acc.count_a();
  row.seen_b = acc.count_b();
  row.sum_sample = acc.sum_sample();
  row.mean_a = or_nan(acc.mean_a());
  row.mean_b = or_nan(acc.mean_b());
  row.var_a = or_nan(acc.var_a());
  row.var_b = or_nan(acc.var_b());
  row.corr_raw = or_nan(acc.corr_raw());
  row.size_mean = or_nan(acc.sample_size_mean());
  row.size_second = or_nan(acc.sample_size_second());
  row.proportion_mean = or_nan(acc.proportion_mean());
  row.allocation_a = or_nan(acc.allocation_a());
  row.gamma0 = kNaN;
  row.zeta0 = kNaN;
  if (const auto inputs = try_make_test_inputs(acc, config.test)) {
    const TestResult t = run_test(*inputs, config.test);
    row.gamma0 = t.gamma0;
    row.zeta0 = t.zeta0;
  }
}

void check_config(const ExperimentConfig& config) {
  if (config.run.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (config.run.replications < 1)
    throw ConfigError("replications must be >= 1");
  if (config.run.stride < 1) throw ConfigError("stride must be >= 1");
  if (!(config.run.theta > 0.0 && config.run.theta < 1.0))
    throw ConfigError("theta must lie in (0, 1)");
  const ValidationReport report = validate_model(config.models);
  if (!report.ok()) {
    std::string what = "model validation failed:";
    for (const auto& issue : report.issues)
      what += "\n  [" + issue.code + "] " + issue.detail;
    throw ConfigError(what);
  }
}

// Runs `count` tasks indexed 0..count-1 on up to `jobs` threads. Results are
// keyed by index, so scheduling cannot change any output.
template <typename Fn>
void parallel_for(std::int64_t count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(jobs, count));
  std::atomic<std::int64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

TrajectoryResult run_trajectory_impl(const ExperimentConfig& config,
                                     std::int64_t replication,
                                     const TrajectoryOptions& options) {
  const std::uint64_t master = config.run.master_seed;
  Xoshiro256 urn_rng(derive_seed(
      master, {kStreamUrn, static_cast<std::uint64_t>(replication)}));

  TrajectoryResult result;
  result.replication = replication;
  UrnState state = make_urn(config.initial_a, config.initial_b);
  Accumulators acc;
  StepRecord last{};

  std::int64_t next_geometric = 1;
  const double growth = std::max(config.diagnostics.snapshot_growth, 1.0001);

  for (std::int64_t n = 1; n <= config.run.horizon; ++n) {
    PastSummary past;
    past.next_step = n;
    past.total = state.total();
    past.count_a = state.count_a;
    past.proportion_a = state.proportion_a();
    past.last = n > 1 ? &last : nullptr;

    const std::int64_t sample_size =
        config.models.sample_size.draw(past, urn_rng);

    // The reinforcement pair comes from its own substream, keyed by the step
    // index only; neither the urn's history nor the sampled group can reach
    // it, and it cannot perturb the urn stream.
    Xoshiro256 reinf_rng(derive_seed(
        master, {kStreamReinforcement, static_cast<std::uint64_t>(replication),
                 static_cast<std::uint64_t>(n)}));
    const auto [reinf_a, reinf_b] =
        config.models.reinforcement.draw(n, reinf_rng);

    last = step(state, sample_size, reinf_a, reinf_b, urn_rng);
    acc.update(last);
    if (options.record_sink) options.record_sink->push_back(last);

    bool snapshot = false;
    if (options.linear_snapshots &&
        (n % config.run.stride == 0 || n == config.run.horizon))
      snapshot = true;
    if (options.geometric_snapshots &&
        (n >= next_geometric || n == config.run.horizon)) {
      snapshot = true;
      while (next_geometric <= n)
        next_geometric = std::max<std::int64_t>(
            next_geometric + 1,
            static_cast<std::int64_t>(
                std::ceil(static_cast<double>(next_geometric) * growth)));
    }
    if (snapshot) {
      SnapshotRow row;
      row.step = n;
      row.sample_size = last.sample_size;
      row.a_in_sample = last.a_in_sample;
      row.reinf_a = last.reinf_a;
      row.reinf_b = last.reinf_b;
      row.count_a = state.count_a;
      row.count_b = state.count_b;
      row.total = state.total();
      row.proportion_a = state.proportion_a();
      fill_estimates(config, acc, row);
      result.snapshots.push_back(row);
    }
  }

  result.final_state = state;
  result.accumulators = acc;
  if (const auto inputs = try_make_test_inputs(acc, config.test))
    result.test = run_test(*inputs, config.test);
  return result;
}

}  // namespace

TrajectoryResult run_trajectory(const ExperimentConfig& config,
                                std::int64_t replication,
                                const TrajectoryOptions& options) {
  check_config(config);
  return run_trajectory_impl(config, replication, options);
}

void wilson_interval(std::int64_t successes, std::int64_t trials, double* lo,
                     double* hi) {
  if (trials <= 0) {
    *lo = 0.0;
    *hi = 1.0;
    return;
  }
  const double z = normal_quantile(0.975);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  *lo = std::max(0.0, center - half);
  *hi = std::min(1.0, center + half);
}

LevelResult empirical_rejection_rate(const ExperimentConfig& config) {
  check_config(config);
  const std::int64_t reps = config.run.replications;
  LevelResult result;
  result.rows.resize(static_cast<std::size_t>(reps));
  result.low_replication_warning = reps < 100;

  parallel_for(reps, config.run.jobs, [&](std::int64_t rep) {
    const TrajectoryResult traj = run_trajectory_impl(config, rep, {});
    ReplicationOutcome row;
    row.replication = rep;
    row.steps = traj.final_state.steps;
    row.test = traj.test;
    result.rows[static_cast<std::size_t>(rep)] = row;
  });

  for (const auto& row : result.rows) {
    if (!row.decided()) {
      ++result.insufficient;
      continue;
    }
    ++result.decided;
    if (row.test->reject) ++result.rejected;
  }
  result.rate = result.decided > 0 ? static_cast<double>(result.rejected) /
                                         static_cast<double>(result.decided)
                                   : 0.0;
  wilson_interval(result.rejected, result.decided, &result.wilson_lo,
                  &result.wilson_hi);
  return result;
}

std::vector<PowerPoint> power_curve(const ExperimentConfig& config,
                                    const std::vector<double>& deltas) {
  check_config(config);
  const ReinforcementModel& base = config.models.reinforcement;
  if (base.kind() != ReinforcementModel::Kind::ShiftedMultinomial)
    throw ConfigError(
        "the power sweep varies the first multinomial probability and needs "
        "a shifted_multinomial reinforcement model");
  const std::int64_t size = base.multinomial_size();
  const double p_b = base.multinomial_p_b();

  std::vector<PowerPoint> points(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double delta = deltas[i];
    if (delta < 0.0) throw ConfigError("power sweep: delta must be >= 0");
    const double p_a = p_b + delta / static_cast<double>(size);
    if (p_a + p_b > 1.0)
      throw ConfigError("power sweep: delta " + std::to_string(delta) +
                        " pushes p_a + p_b above 1");

    ExperimentConfig point_config = config;
    point_config.models.reinforcement =
        ReinforcementModel::shifted_multinomial(size, p_a, p_b);
    point_config.run.master_seed =
        derive_seed(config.run.master_seed,
                    {kStreamPowerPoint, static_cast<std::uint64_t>(i)});

    const LevelResult level = empirical_rejection_rate(point_config);
    PowerPoint& point = points[i];
    point.delta = delta;
    point.p_a = p_a;
    point.emp_power = level.rate;
    point.ci_lo = level.wilson_lo;
    point.ci_hi = level.wilson_hi;
    point.decided = level.decided;
    point.insufficient = level.insufficient;
    double approx_sum = 0.0;
    for (const auto& row : level.rows)
      if (row.decided()) approx_sum += row.test->approx_power;
    point.approx_power = level.decided > 0
                             ? approx_sum / static_cast<double>(level.decided)
                             : kNaN;
  }
  return points;
}

RateReport rate_diagnostics(const ExperimentConfig& config,
                            std::int64_t replication) {
  check_config(config);
  const ReinforcementModel& model = config.models.reinforcement;
  if (model.regime() != MeanRegime::AGreater)
    throw ConfigError(
        "rate diagnostics require limit means with mean_a > mean_b; "
        "relabel the colors or pick the dominant-color regime");
  const ReinforcementMoments moments = model.limit_moments();
  const double exponent = moments.mean_b / moments.mean_a;  // in (0, 1)

  TrajectoryOptions options;
  options.geometric_snapshots = true;
  const TrajectoryResult traj =
      run_trajectory_impl(config, replication, options);

  RateReport report;
  report.target_exponent = exponent;
  report.series.reserve(traj.snapshots.size());
  for (const auto& row : traj.snapshots) {
    RatePoint point;
    point.step = row.step;
    point.count_b = row.count_b;
    point.proportion_a = row.proportion_a;
    const double n = static_cast<double>(row.step);
    const double scale = std::pow(n, exponent);
    point.ratio_k = static_cast<double>(row.count_b) / scale;
    point.residual_z = std::pow(n, 1.0 - exponent) * (1.0 - row.proportion_a);
    point.ratio_seen_b = static_cast<double>(row.seen_b) / scale;
    point.ratio_hk =
        static_cast<double>(row.count_a) /
        std::pow(static_cast<double>(row.count_b), 1.0 / exponent);
    point.allocation_a = row.allocation_a;
    report.series.push_back(point);
  }
  report.final_allocation_a = report.series.back().allocation_a;

  // Least-squares slope of log K against log n over the trailing window;
  // early steps carry the start-up transient and are excluded.
  const double log_end = std::log(static_cast<double>(config.run.horizon));
  const double window_start = (1.0 - config.diagnostics.slope_window) * log_end;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::int64_t count = 0;
  for (const auto& point : report.series) {
    const double lx = std::log(static_cast<double>(point.step));
    if (lx < window_start || point.count_b <= 0) continue;
    const double ly = std::log(static_cast<double>(point.count_b));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2)
    throw ConfigError(
        "rate diagnostics: not enough points in the slope window; raise the "
        "horizon");
  const double denom = static_cast<double>(count) * sxx - sx * sx;
  report.exponent_estimate =
      (static_cast<double>(count) * sxy - sx * sy) / denom;

  // Relative spread (max - min) / mean over the last decade of steps.
  const auto spread = [&](auto getter) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::int64_t k = 0;
    const std::int64_t start = config.run.horizon / 10;
    for (const auto& point : report.series) {
      if (point.step < start) continue;
      const double v = getter(point);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++k;
    }
    if (k == 0 || sum == 0.0) return kNaN;
    return (hi - lo) / (sum / static_cast<double>(k));
  };
  report.spread_ratio_k = spread([](const RatePoint& p) { return p.ratio_k; });
  report.spread_residual_z =
      spread([](const RatePoint& p) { return p.residual_z; });
  report.spread_ratio_seen_b =
      spread([](const RatePoint& p) { return p.ratio_seen_b; });
  return report;
}

}  // namespace mdurn
