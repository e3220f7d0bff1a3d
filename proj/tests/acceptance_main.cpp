// Acceptance suite: one line per criterion, PASS or FAIL, with the measured
// numbers. Exit status is the number of failed criteria.
//
// Statistical criteria run with a fixed master seed so the suite is
// deterministic; pass --seed N to revalidate with fresh randomness.
// --cli PATH points at the command-line binary (used by the determinism
// criterion); --only K runs a single criterion.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include "mdurn/errors.hpp"
#include "mdurn/montecarlo.hpp"
#include "support/stat_checks.hpp"

using namespace mdurn;
using mdurn::testsupport::anderson_darling_normal;
using mdurn::testsupport::chi_square_gof;

namespace {

std::uint64_t g_seed = 424243;
std::string g_cli;
int g_jobs = 2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ExperimentConfig multinomial_h0(std::int64_t horizon, std::int64_t reps) {
  ExperimentConfig config;
  config.initial_a = 5;
  config.initial_b = 5;
  config.models.sample_size = SampleSizeModel::uniform(5);
  config.models.reinforcement =
      ReinforcementModel::shifted_multinomial(12, 4.0 / 15.0, 4.0 / 15.0);
  config.run.horizon = horizon;
  config.run.replications = reps;
  config.run.theta = 0.05;
  config.run.jobs = g_jobs;
  return config;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

// ---------------------------------------------------------------------
// 1. Exact sampler: chi-square goodness of fit against the pmf.

Outcome criterion1() {
  Xoshiro256 rng(derive_seed(g_seed, {101}));
  double min_p = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t total =
        10 + static_cast<std::int64_t>(uniform_below(rng, 191));  // <= 200
    const std::int64_t count_a =
        1 + static_cast<std::int64_t>(uniform_below(rng, total - 1));
    const std::int64_t sample =
        1 + static_cast<std::int64_t>(uniform_below(rng, total));
    const auto support = hypergeometric_support(sample, total, count_a);

    const int draws = 100000;
    std::vector<std::int64_t> observed(support.size(), 0);
    for (int i = 0; i < draws; ++i)
      observed[sample_hypergeometric(rng, sample, total, count_a) -
               support.lo] += 1;
    std::vector<double> expected(support.size());
    for (std::int64_t k = support.lo; k <= support.hi; ++k)
      expected[k - support.lo] =
          draws * hypergeometric_pmf(sample, total, count_a, k);

    const auto gof = chi_square_gof(expected, observed);
    min_p = std::min(min_p, gof.p_value);
    if (gof.p_value <= 0.001)
      return {false, "trial (" + std::to_string(sample) + "," +
                         std::to_string(total) + "," +
                         std::to_string(count_a) +
                         ") has p = " + fmt(gof.p_value)};
  }
  return {true, "20 configurations, min p = " + fmt(min_p)};
}

// ---------------------------------------------------------------------
// 2. Conditional mean of the sampled group.

Outcome criterion2() {
  Xoshiro256 rng(derive_seed(g_seed, {102}));
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t total =
        20 + static_cast<std::int64_t>(uniform_below(rng, 481));
    const std::int64_t count_a =
        1 + static_cast<std::int64_t>(uniform_below(rng, total - 1));
    const std::int64_t sample =
        1 + static_cast<std::int64_t>(
                uniform_below(rng, std::min<std::int64_t>(total, 30)));

    const int draws = 1000000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i)
      sum += static_cast<double>(
          sample_hypergeometric(rng, sample, total, count_a));
    const double mean = sum / draws;

    const double p = static_cast<double>(count_a) / static_cast<double>(total);
    const double target = static_cast<double>(sample) * p;
    const double variance = static_cast<double>(sample) * p * (1.0 - p) *
                            static_cast<double>(total - sample) /
                            static_cast<double>(total - 1);
    const double se = std::sqrt(variance / draws);
    const double deviation = se > 0.0 ? std::abs(mean - target) / se : 0.0;
    worst = std::max(worst, deviation);
    if (deviation >= 4.0)
      return {false, "state (" + std::to_string(sample) + "," +
                         std::to_string(total) + "," +
                         std::to_string(count_a) + ") deviates by " +
                         fmt(deviation) + " se"};
  }
  return {true, "10 states, worst deviation " + fmt(worst) + " se"};
}

// ---------------------------------------------------------------------
// 3. Estimator consistency on the equal-means example.

Outcome criterion3() {
  ExperimentConfig config = multinomial_h0(20000, 200);
  config.run.master_seed = derive_seed(g_seed, {103});

  std::vector<double> mean_a(200), var_a(200), cross(200);
  std::vector<TrajectoryResult> results(200);
  std::vector<std::thread> pool;
  std::atomic<std::int64_t> next{0};
  for (int w = 0; w < g_jobs; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t rep = next.fetch_add(1);
        if (rep >= 200) return;
        const TrajectoryResult traj = run_trajectory(config, rep);
        mean_a[rep] = *traj.accumulators.mean_a();
        var_a[rep] = *traj.accumulators.var_a();
        cross[rep] = *traj.accumulators.cross();
      }
    });
  for (auto& t : pool) t.join();

  const auto check = [](const std::vector<double>& sample, double target,
                        const char* name) -> std::string {
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(sample.size());
    double var = 0.0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= static_cast<double>(sample.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(sample.size()));
    const double dev = std::abs(mean - target) / se;
    std::ostringstream out;
    out << name << " " << fmt(mean) << " vs " << fmt(target) << " ("
        << fmt(dev) << " se)";
    if (dev >= 3.0) out << " EXCEEDS 3 se";
    return out.str();
  };

  const std::string r1 = check(mean_a, 4.2, "mean_A");
  const std::string r2 = check(var_a, 176.0 / 75.0, "var_A");
  const std::string r3 = check(cross, 1259.0 / 75.0, "cross_AB");
  const bool pass = r1.find("EXCEEDS") == std::string::npos &&
                    r2.find("EXCEEDS") == std::string::npos &&
                    r3.find("EXCEEDS") == std::string::npos;
  return {pass, r1 + "; " + r2 + "; " + r3};
}

// ---------------------------------------------------------------------
// 4 & 5. Level of the test and normality of the null statistic. Both use
// the same 500-replication run at horizon 10000.

LevelResult& h0_level_run() {
  static LevelResult level = [] {
    ExperimentConfig config = multinomial_h0(10000, 500);
    config.run.master_seed = derive_seed(g_seed, {104});
    return empirical_rejection_rate(config);
  }();
  return level;
}

Outcome criterion4() {
  const LevelResult& level = h0_level_run();
  const bool intersects = level.wilson_lo <= 0.08 && level.wilson_hi >= 0.03;
  return {intersects && level.decided == 500,
          "rate " + fmt(level.rate) + ", wilson [" + fmt(level.wilson_lo) +
              ", " + fmt(level.wilson_hi) + "], decided " +
              std::to_string(level.decided) + "/500"};
}

Outcome criterion5() {
  const LevelResult& level = h0_level_run();
  std::vector<double> zetas;
  zetas.reserve(level.rows.size());
  for (const auto& row : level.rows)
    if (row.decided()) zetas.push_back(row.test->zeta0);
  const auto ad = anderson_darling_normal(zetas);
  const bool pass = ad.normal_at_1pct && std::abs(ad.mean) < 0.15 &&
                    std::abs(ad.sd - 1.0) < 0.15;
  return {pass, "A2* = " + fmt(ad.a2_star) + " (1% cutoff 1.092), mean " +
                    fmt(ad.mean) + ", sd " + fmt(ad.sd)};
}

// ---------------------------------------------------------------------
// 6. Growth rate of the minority color in the dominant regime.

Outcome criterion6() {
  ExperimentConfig config;
  config.initial_a = 5;
  config.initial_b = 5;
  config.models.sample_size = SampleSizeModel::constant(1);
  config.models.reinforcement = ReinforcementModel::constant_pair(3, 2);
  config.run.horizon = 1000000;
  config.run.master_seed = derive_seed(g_seed, {106});

  std::vector<double> slopes(10), spreads(10);
  std::vector<std::thread> pool;
  std::atomic<std::int64_t> next{0};
  for (int w = 0; w < g_jobs; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t rep = next.fetch_add(1);
        if (rep >= 10) return;
        const RateReport report = rate_diagnostics(config, rep);
        slopes[rep] = report.exponent_estimate;
        spreads[rep] = report.spread_ratio_k;
      }
    });
  for (auto& t : pool) t.join();

  std::vector<double> sorted = slopes;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[4] + sorted[5]);
  const double max_spread = *std::max_element(spreads.begin(), spreads.end());
  const bool pass =
      std::abs(median - 2.0 / 3.0) < 0.05 && max_spread < 0.25;
  return {pass, "median slope " + fmt(median) + " (target 0.66667), max "
                    "ratio spread " + fmt(max_spread) + " over 10 runs"};
}

// ---------------------------------------------------------------------
// 7. Shape of the power curve and the quality of the normal approximation.

Outcome criterion7() {
  ExperimentConfig config = multinomial_h0(10000, 200);
  config.run.master_seed = derive_seed(g_seed, {107});

  std::vector<double> deltas;
  for (int i = 0; i <= 20; ++i) deltas.push_back(0.005 * i);
  const std::vector<PowerPoint> points = power_curve(config, deltas);

  std::ostringstream detail;
  bool pass = true;

  // (a) nondecreasing up to twice the binomial standard error of the
  // difference of adjacent points (independent sub-seeds)
  double worst_drop = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double p0 = points[i - 1].emp_power;
    const double p1 = points[i].emp_power;
    const double n0 = static_cast<double>(points[i - 1].decided);
    const double n1 = static_cast<double>(points[i].decided);
    const double se =
        std::sqrt(p0 * (1.0 - p0) / n0 + p1 * (1.0 - p1) / n1);
    const double drop = p0 - p1;
    worst_drop = std::max(worst_drop, se > 0 ? drop / se : drop > 0 ? 99 : 0);
  }
  if (worst_drop >= 2.0) {
    pass = false;
    detail << "monotonicity violated (" << fmt(worst_drop) << " se); ";
  } else {
    detail << "monotone within " << fmt(worst_drop) << " se; ";
  }

  // (b) the curve starts at the level
  {
    double lo = 0.0, hi = 0.0;
    wilson_interval(
        static_cast<std::int64_t>(
            std::lround(points[0].emp_power * points[0].decided)),
        points[0].decided, &lo, &hi);
    if (lo <= 0.08 && hi >= 0.03) {
      detail << "level at delta 0: " << fmt(points[0].emp_power) << "; ";
    } else {
      pass = false;
      detail << "level at delta 0 out of range: " << fmt(points[0].emp_power)
             << "; ";
    }
  }

  // (c) mean approximate power within 3 binomial standard errors of the
  // empirical power at every grid point (Agresti-Coull smoothing keeps the
  // yardstick positive at saturated points)
  double worst_gap_se = 0.0;
  double worst_gap = 0.0;
  double worst_delta = 0.0;
  for (const auto& point : points) {
    const double n = static_cast<double>(point.decided);
    const double successes = point.emp_power * n;
    const double p_tilde = (successes + 2.0) / (n + 4.0);
    const double se = std::sqrt(p_tilde * (1.0 - p_tilde) / (n + 4.0));
    const double gap = std::abs(point.approx_power - point.emp_power);
    if (gap / se > worst_gap_se) {
      worst_gap_se = gap / se;
      worst_gap = gap;
      worst_delta = point.delta;
    }
  }
  if (worst_gap_se >= 3.0) {
    pass = false;
    detail << "approx vs empirical gap " << fmt(worst_gap) << " ("
           << fmt(worst_gap_se) << " se) at delta " << fmt(worst_delta)
           << "; the plug-in noncentrality makes the approximation "
              "upward-biased near equal means (mean of Phi(zeta0 - q) is "
              "Phi((mu - q)/sqrt(2)), not Phi(mu - q)), a bias no seed "
              "removes";
  } else {
    detail << "approx within " << fmt(worst_gap_se) << " se everywhere";
  }
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------
// 8. Byte-level determinism of a full level run through the CLI,
// independent of the worker count.

Outcome criterion8() {
  if (g_cli.empty()) return {false, "no --cli path provided"};
  namespace fs = std::filesystem;
  const fs::path work = fs::temp_directory_path() / "mdurn_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const fs::path cfg = work / "h0.json";
  {
    std::ofstream out(cfg);
    out << R"({"urn": {"a": 5, "b": 5},
               "sample_size": {"kind": "uniform", "max": 5},
               "reinforcement": {"kind": "shifted_multinomial", "size": 12,
                                 "p_a": 0.26666666666666666,
                                 "p_b": 0.26666666666666666},
               "run": {"horizon": 2000, "replications": 64, "seed": 97}})";
  }
  const auto run_level_cmd = [&](const fs::path& dir, int jobs) {
    const std::string cmd = g_cli + " level -c " + cfg.string() + " --jobs " +
                            std::to_string(jobs) + " -o " + dir.string() +
                            " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  if (!run_level_cmd(work / "jobs1", 1)) return {false, "level --jobs 1 failed"};
  if (!run_level_cmd(work / "jobs4", 4)) return {false, "level --jobs 4 failed"};
  if (!run_level_cmd(work / "again", 1)) return {false, "repeat run failed"};

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  const std::string a = slurp(work / "jobs1" / "aggregate.csv");
  const std::string b = slurp(work / "jobs4" / "aggregate.csv");
  const std::string c = slurp(work / "again" / "aggregate.csv");
  if (a.empty()) return {false, "aggregate.csv missing"};
  if (a != b) return {false, "aggregate.csv differs between --jobs 1 and 4"};
  if (a != c) return {false, "aggregate.csv differs between repeated runs"};
  return {true, "aggregate.csv byte-identical across reruns and --jobs 1/4"};
}

// ---------------------------------------------------------------------
// 9. Invariant battery.

Outcome criterion9() {
  Xoshiro256 rng(derive_seed(g_seed, {109}));
  std::int64_t checks = 0;

  // conservation audit over random trajectories
  for (int trial = 0; trial < 20; ++trial) {
    UrnState state = make_urn(1 + uniform_below(rng, 10),
                              1 + uniform_below(rng, 10));
    const std::int64_t a0 = state.count_a, b0 = state.count_b;
    std::int64_t sum_ax = 0, sum_b_nx = 0;
    Accumulators acc;
    for (int n = 1; n <= 1000; ++n) {
      const std::int64_t sample = 1 + uniform_below(rng, 4);
      const std::int64_t ra = 1 + uniform_below(rng, 6);
      const std::int64_t rb = 1 + uniform_below(rng, 6);
      const StepRecord rec = step(state, sample, ra, rb, rng);
      acc.update(rec);
      sum_ax += ra * rec.a_in_sample;
      sum_b_nx += rb * rec.b_in_sample();
    }
    if (state.count_a - a0 != sum_ax || state.count_b - b0 != sum_b_nx)
      return {false, "conservation audit failed"};
    if (acc.count_a() + acc.count_b() != acc.sum_sample())
      return {false, "count identity failed"};
    const auto va = acc.var_a();
    const auto vb = acc.var_b();
    if ((va && *va < 0.0) || (vb && *vb < 0.0))
      return {false, "negative weighted variance"};
    checks += 4;
  }

  // lambda in [0,1] and the gamma reductions over random inputs
  for (int trial = 0; trial < 100000; ++trial) {
    const double va = 0.01 + 4.0 * uniform_unit(rng);
    const double vb = 0.01 + 4.0 * uniform_unit(rng);
    const std::int64_t na = 1 + uniform_below(rng, 100000);
    const std::int64_t nb = uniform_below(rng, 100000);
    const double lambda = lambda_mix(va, vb, na, nb);
    if (!(lambda >= 0.0 && lambda <= 1.0))
      return {false, "lambda left [0,1]"};
    const double z = uniform_unit(rng);
    const double corr = 2.0 * uniform_unit(rng) - 1.0;
    if (std::abs(gamma_hat(GammaForm::Null, lambda, z, 1.0, corr) - 1.0) >
        1e-12)
      return {false, "null gamma at unit ratio differs from 1"};
    if (std::abs(gamma_hat(GammaForm::Alt, 0.0, z,
                           1.0 + 10.0 * uniform_unit(rng), corr) -
                 1.0) > 1e-12)
      return {false, "alt gamma at lambda 0 differs from 1"};
    checks += 3;
  }

  // decision / p-value coherence across levels
  TestOptions opt;
  TestInputs in;
  in.count_a = 5000;
  in.count_b = 4000;
  in.var_a = 2.0;
  in.var_b = 2.5;
  in.z_plugin = 0.55;
  in.size_mean = 3.0;
  in.size_second = 11.0;
  in.corr = -0.3;
  in.mean_b = 4.0;
  for (int trial = 0; trial < 100000; ++trial) {
    in.mean_a = 3.9 + 0.2 * uniform_unit(rng);
    opt.theta = 0.001 + 0.998 * uniform_unit(rng);
    const TestResult result = run_test(in, opt);
    if (result.reject != (result.p_value < opt.theta))
      return {false, "reject and p-value disagree"};
    checks += 1;
  }

  return {true, std::to_string(checks) + " invariant checks, zero failures"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--seed") && i + 1 < argc)
      g_seed = std::strtoull(argv[++i], nullptr, 10);
    else if (!std::strcmp(argv[i], "--cli") && i + 1 < argc)
      g_cli = argv[++i];
    else if (!std::strcmp(argv[i], "--only") && i + 1 < argc)
      only = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc)
      g_jobs = std::atoi(argv[++i]);
  }
  if (g_jobs < 1) g_jobs = 1;

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "exact sampler goodness of fit", criterion1},
      {2, "conditional mean identity", criterion2},
      {3, "estimator consistency", criterion3},
      {4, "test level", criterion4},
      {5, "normality of the null statistic", criterion5},
      {6, "minority-color growth rate", criterion6},
      {7, "power curve shape and approximation", criterion7},
      {8, "determinism across reruns and workers", criterion8},
      {9, "invariant battery", criterion9},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s  criterion %d: %s [%s] (%.1fs)\n",
                outcome.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0)
    std::printf("all criteria passed (seed %llu)\n",
                static_cast<unsigned long long>(g_seed));
  else
    std::printf("%d criterion/criteria failed (seed %llu)\n", failures,
                static_cast<unsigned long long>(g_seed));
  return failures;
}
