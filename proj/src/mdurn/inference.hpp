#pragma once

#include <cstdint>
#include <optional>

#include "mdurn/estimators.hpp"
#include "mdurn/models.hpp"

namespace mdurn {

double normal_cdf(double x);
// Inverse of normal_cdf; |normal_cdf(normal_quantile(p)) - p| <= 1e-10 on
// [1e-8, 1 - 1e-8]. Throws std::invalid_argument outside (0, 1).
double normal_quantile(double p);

// Variance-mixing weight: var_a * count_b / (var_a * count_b + var_b * count_a).
// The common 1/n of both terms cancels and is never formed.
double lambda_mix(double var_a, double var_b, std::int64_t count_a,
                  std::int64_t count_b);

enum class GammaForm {
  Null,  // equal-means form, the one the test statistic uses
  Alt,   // unequal-means form, exposed for power diagnostics
};

// Normalization factor. `qn_ratio` is E[N^2]/E[N] (estimated or known),
// `z_plugin` the plug-in for the limit proportion, `corr` the clamped
// correlation estimate. The raw value is returned; flooring is the caller's
// policy.
double gamma_hat(GammaForm form, double lambda, double z_plugin,
                 double qn_ratio, double corr);

enum class ZPlugin {
  ProportionMean,  // mean of per-step sample proportions
  Allocation,      // count_a / total sampled
};

struct TestOptions {
  double theta = 0.05;         // one-sided level
  double gamma_floor = 1e-3;   // smallest usable normalization
  bool error_on_floor = false; // throw instead of flooring
  std::int64_t min_count_a = 30;
  std::int64_t min_count_b = 30;
  ZPlugin z_plugin = ZPlugin::ProportionMean;
  std::optional<SampleSizeMoments> known_size_moments;  // bypasses estimators
};

// Everything the statistic needs, with all entries defined and finite.
struct TestInputs {
  std::int64_t steps = 0;
  std::int64_t count_a = 0;
  std::int64_t count_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  double corr = 0.0;      // clamped to [-1, 1]; 0 when all samples have size 1
  double corr_raw = 0.0;  // diagnostics only
  double z_plugin = 0.0;
  double size_mean = 1.0;
  double size_second = 1.0;
};

struct TestResult {
  double lambda = 0.0;
  double gamma0 = 0.0;  // null-form normalization actually used
  double zeta0 = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double theta = 0.05;
  double approx_power = 0.0;
  double corr_raw = 0.0;
  bool gamma_floored = false;
};

// Builds TestInputs from a trajectory's accumulators, enforcing the minimum
// data gate: both colors observed at least min_count times, both variance
// estimates strictly positive, and a defined cross-moment whenever some
// sample had size > 1 (with all sizes equal to 1 the correlation term is
// multiplied by zero and is not required). Throws InsufficientData.
TestInputs make_test_inputs(const Accumulators& acc, const TestOptions& opt);

// Non-throwing variant for per-snapshot evaluation.
std::optional<TestInputs> try_make_test_inputs(const Accumulators& acc,
                                               const TestOptions& opt);

// The studentized mean difference, normalized by sqrt(gamma) of the chosen
// form. `mean_offset` is subtracted from mean_a - mean_b; the null statistic
// is mean_offset = 0 with the null form. `floored` (optional out) reports
// whether the gamma floor was applied.
double zeta_statistic(const TestInputs& in, double mean_offset, GammaForm form,
                      const TestOptions& opt, bool* floored = nullptr);

// One-sided test of equal reinforcement means against "A larger".
TestResult run_test(const TestInputs& in, const TestOptions& opt);

// Normal approximation of the rejection probability at the observed
// noncentrality.
double approximate_power(const TestInputs& in, const TestOptions& opt);

}  // namespace mdurn
