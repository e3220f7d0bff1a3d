#include "stat_checks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdurn::testsupport {
namespace {

constexpr double kEps = 1e-14;
constexpr double kTiny = 1e-300;

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double chi_square_tail(double statistic, int dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_tail: dof must be >= 1");
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

GofResult chi_square_gof(const std::vector<double>& expected,
                         const std::vector<std::int64_t>& observed,
                         double min_expected) {
  if (expected.size() != observed.size() || expected.empty())
    throw std::invalid_argument("chi_square_gof: size mismatch");

  // Pool adjacent bins until each pooled expectation reaches the floor.
  std::vector<double> exp_pooled;
  std::vector<double> obs_pooled;
  double e_run = 0.0, o_run = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    e_run += expected[i];
    o_run += static_cast<double>(observed[i]);
    if (e_run >= min_expected) {
      exp_pooled.push_back(e_run);
      obs_pooled.push_back(o_run);
      e_run = o_run = 0.0;
    }
  }
  if (e_run > 0.0 || o_run > 0.0) {
    if (exp_pooled.empty()) {
      exp_pooled.push_back(e_run);
      obs_pooled.push_back(o_run);
    } else {
      exp_pooled.back() += e_run;
      obs_pooled.back() += o_run;
    }
  }

  GofResult result;
  if (exp_pooled.size() < 2) {
    result.dof = 0;
    result.p_value = 1.0;
    return result;
  }
  for (std::size_t i = 0; i < exp_pooled.size(); ++i) {
    const double diff = obs_pooled[i] - exp_pooled[i];
    result.statistic += diff * diff / exp_pooled[i];
  }
  result.dof = static_cast<int>(exp_pooled.size()) - 1;
  result.p_value = chi_square_tail(result.statistic, result.dof);
  return result;
}

NormalityResult anderson_darling_normal(std::vector<double> sample) {
  const std::size_t n = sample.size();
  if (n < 8)
    throw std::invalid_argument("anderson_darling_normal: sample too small");
  std::sort(sample.begin(), sample.end());

  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : sample) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);

  double a2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = (sample[i] - mean) / sd;
    const double zr = (sample[n - 1 - i] - mean) / sd;
    double lo = std_normal_cdf(zi);
    double hi = 1.0 - std_normal_cdf(zr);
    lo = std::clamp(lo, 1e-300, 1.0);
    hi = std::clamp(hi, 1e-300, 1.0);
    a2 += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  a2 = -static_cast<double>(n) - a2 / static_cast<double>(n);

  NormalityResult result;
  const double nn = static_cast<double>(n);
  result.a2_star = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  result.normal_at_5pct = result.a2_star < 0.787;
  result.normal_at_1pct = result.a2_star < 1.092;
  result.mean = mean;
  result.sd = sd;
  return result;
}

}  // namespace mdurn::testsupport
