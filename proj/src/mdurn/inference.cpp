#include "mdurn/inference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mdurn/errors.hpp"

namespace mdurn {

double normal_cdf(double x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  return 0.5 * std::erfc(-x * inv_sqrt2);
}

// Wichura's PPND16 rational approximations (AS 241), accurate to ~1e-16
// relative over the full double range.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                      r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) *
                   r + 5.76949722146069140550e+0) * r +
               4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                      r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) *
                   r + 1.67638483018380384940e+0) * r +
               2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                      r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) *
                   r + 1.78482653991729133580e+0) * r +
               5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                      r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) *
                   r + 1.36929880922735805310e-1) * r +
               5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

double lambda_mix(double var_a, double var_b, std::int64_t count_a,
                  std::int64_t count_b) {
  if (!(var_a > 0.0) || !(var_b > 0.0))
    throw std::invalid_argument("lambda_mix: both variances must be positive");
  if (count_a < 0 || count_b < 0 || (count_a == 0 && count_b == 0))
    throw std::invalid_argument("lambda_mix: no observations");
  const double num = var_a * static_cast<double>(count_b);
  return num / (num + var_b * static_cast<double>(count_a));
}

// Null form: the normalized variance of mean_a_hat - mean_b_hat under equal
// means. The diagonal part reduces to qn + (qn-1)[(2z-1)lambda - z]; the
// cross part is -2 cov(mean_a_hat, mean_b_hat) / se^2. With
// cov = c_ab * sum X(N-X) / (count_a * count_b) and sum X(N-X) growing like
// n z(1-z)(Q-N), that contribution is
// -2 rho (qn-1) sqrt(lambda(1-lambda)) sqrt(z(1-z)).
double gamma_hat(GammaForm form, double lambda, double z_plugin,
                 double qn_ratio, double corr) {
  if (!(qn_ratio >= 1.0))
    throw std::invalid_argument("gamma_hat: E[N^2]/E[N] must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("gamma_hat: lambda must lie in [0, 1]");
  if (!(z_plugin >= 0.0 && z_plugin <= 1.0))
    throw std::invalid_argument(
        "gamma_hat: the proportion plug-in must lie in [0, 1]");
  if (form == GammaForm::Alt) return 1.0 + (qn_ratio - 1.0) * lambda;
  const double mix = (2.0 * z_plugin - 1.0) * lambda -
                     2.0 * corr * std::sqrt(lambda * (1.0 - lambda)) *
                         std::sqrt(z_plugin * (1.0 - z_plugin)) -
                     z_plugin;
  return qn_ratio + (qn_ratio - 1.0) * mix;
}

TestInputs make_test_inputs(const Accumulators& acc, const TestOptions& opt) {
  auto in = try_make_test_inputs(acc, opt);
  if (!in)
    throw InsufficientData(
        "trajectory does not yet support the test: need at least " +
        std::to_string(opt.min_count_a) + " color-A and " +
        std::to_string(opt.min_count_b) +
        " color-B observations, positive variance estimates for both "
        "factors, and a defined cross-moment when samples of size > 1 "
        "occurred");
  return *in;
}

std::optional<TestInputs> try_make_test_inputs(const Accumulators& acc,
                                               const TestOptions& opt) {
  if (acc.count_a() < opt.min_count_a || acc.count_b() < opt.min_count_b)
    return std::nullopt;
  const auto mean_a = acc.mean_a();
  const auto mean_b = acc.mean_b();
  const auto var_a = acc.var_a();
  const auto var_b = acc.var_b();
  if (!mean_a || !mean_b || !var_a || !var_b) return std::nullopt;
  if (!(*var_a > 0.0) || !(*var_b > 0.0)) return std::nullopt;

  TestInputs in;
  in.steps = acc.steps();
  in.count_a = acc.count_a();
  in.count_b = acc.count_b();
  in.mean_a = *mean_a;
  in.mean_b = *mean_b;
  in.var_a = *var_a;
  in.var_b = *var_b;

  // With every sample of size 1 the ratio E[N^2]/E[N] is exactly 1, the
  // correlation term in the null normalization carries weight zero, and the
  // cross-moment (which needs mixed draws) is not required.
  const bool all_size_one = acc.sum_sample_sq() == acc.sum_sample();
  if (all_size_one) {
    in.corr = 0.0;
    in.corr_raw = 0.0;
  } else {
    const auto corr = acc.corr_clamped();
    if (!corr) return std::nullopt;
    in.corr = *corr;
    in.corr_raw = *acc.corr_raw();
  }

  const auto prop = opt.z_plugin == ZPlugin::ProportionMean
                        ? acc.proportion_mean()
                        : acc.allocation_a();
  if (!prop) return std::nullopt;
  in.z_plugin = *prop;

  if (opt.known_size_moments) {
    in.size_mean = opt.known_size_moments->mean;
    in.size_second = opt.known_size_moments->second_moment;
  } else {
    in.size_mean = *acc.sample_size_mean();
    in.size_second = *acc.sample_size_second();
  }
  return in;
}

double zeta_statistic(const TestInputs& in, double mean_offset, GammaForm form,
                      const TestOptions& opt, bool* floored) {
  const double lambda = lambda_mix(in.var_a, in.var_b, in.count_a, in.count_b);
  const double qn_ratio = in.size_second / in.size_mean;
  double gamma = gamma_hat(form, lambda, in.z_plugin, qn_ratio, in.corr);
  bool was_floored = false;
  if (gamma < opt.gamma_floor) {
    if (opt.error_on_floor)
      throw InsufficientData("degenerate normalization: gamma = " +
                             std::to_string(gamma));
    gamma = opt.gamma_floor;
    was_floored = true;
  }
  if (floored) *floored = was_floored;
  const double se2 = in.var_a / static_cast<double>(in.count_a) +
                     in.var_b / static_cast<double>(in.count_b);
  if (!(se2 > 0.0))
    throw InsufficientData("zero standard error for the mean difference");
  return (in.mean_a - in.mean_b - mean_offset) /
         (std::sqrt(se2) * std::sqrt(gamma));
}

TestResult run_test(const TestInputs& in, const TestOptions& opt) {
  if (!(opt.theta > 0.0 && opt.theta < 1.0))
    throw std::invalid_argument("test level must lie in (0, 1)");
  TestResult result;
  result.theta = opt.theta;
  result.corr_raw = in.corr_raw;
  result.lambda = lambda_mix(in.var_a, in.var_b, in.count_a, in.count_b);
  bool floored = false;
  result.zeta0 = zeta_statistic(in, 0.0, GammaForm::Null, opt, &floored);
  result.gamma_floored = floored;
  {
    const double qn_ratio = in.size_second / in.size_mean;
    double gamma = gamma_hat(GammaForm::Null, result.lambda, in.z_plugin,
                             qn_ratio, in.corr);
    result.gamma0 = floored ? opt.gamma_floor : gamma;
  }
  const double threshold = normal_quantile(1.0 - opt.theta);
  result.reject = result.zeta0 > threshold;
  result.p_value = 1.0 - normal_cdf(result.zeta0);
  result.approx_power = approximate_power(in, opt);
  return result;
}

double approximate_power(const TestInputs& in, const TestOptions& opt) {
  // The observed null statistic is exactly the noncentrality of the
  // approximating normal.
  const double noncentrality =
      zeta_statistic(in, 0.0, GammaForm::Null, opt, nullptr);
  const double threshold = normal_quantile(1.0 - opt.theta);
  return 1.0 - normal_cdf(threshold - noncentrality);
}

}  // namespace mdurn
