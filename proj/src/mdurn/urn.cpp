#include "mdurn/urn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mdurn/errors.hpp"

namespace mdurn {
namespace {

// Exact binomial coefficients for small totals. C(60,30) < 2^63, and any
// single hypergeometric numerator term C(a,i)*C(b,j) with a+b <= 60 is
// bounded by C(a+b, i+j), so products below stay in range too.
constexpr int kExactLimit = 60;

const std::uint64_t* pascal_row(int n) {
  static const auto table = [] {
    static std::uint64_t rows[kExactLimit + 1][kExactLimit + 1] = {};
    for (int i = 0; i <= kExactLimit; ++i) {
      rows[i][0] = 1;
      for (int j = 1; j <= i; ++j)
        rows[i][j] = rows[i - 1][j - 1] + (j <= i - 1 ? rows[i - 1][j] : 0);
    }
    return &rows[0];
  }();
  return table[n];
}

// Product form of C(a,k)*C(b,n-k)/C(a+b,n) with the running value kept as
// mantissa * 2^exponent. Every factor is an exact integer ratio, so the
// relative error stays near n ulps and nothing can overflow or underflow
// along the way.
double pmf_by_ratio_product(std::int64_t a, std::int64_t b, std::int64_t n,
                            std::int64_t k) {
  double mantissa = 1.0;
  int exponent = 0;
  const auto multiply = [&](double numerator, double denominator) {
    int shift = 0;
    mantissa = std::frexp(mantissa * (numerator / denominator), &shift);
    exponent += shift;
  };
  for (std::int64_t i = 1; i <= k; ++i)
    multiply(static_cast<double>(a - k + i), static_cast<double>(i));
  for (std::int64_t i = 1; i <= n - k; ++i)
    multiply(static_cast<double>(b - (n - k) + i), static_cast<double>(i));
  for (std::int64_t i = 1; i <= n; ++i)
    multiply(static_cast<double>(i), static_cast<double>(a + b - n + i));
  return std::ldexp(mantissa, exponent);
}

void check_draw_args(std::int64_t sample_size, std::int64_t total,
                     std::int64_t count_a) {
  if (total < 1) throw std::invalid_argument("urn total must be >= 1");
  if (count_a < 0 || count_a > total)
    throw std::invalid_argument("color-A count must lie in [0, total]");
  if (sample_size < 1 || sample_size > total)
    throw std::invalid_argument(
        "sample size must lie in [1, total], got " +
        std::to_string(sample_size) + " with total " + std::to_string(total));
}

}  // namespace

UrnState make_urn(std::int64_t a, std::int64_t b) {
  if (a < 1 || b < 1)
    throw ConfigError("urn must start with at least one ball of each color");
  UrnState state;
  state.initial_a = a;
  state.initial_b = b;
  state.count_a = a;
  state.count_b = b;
  state.steps = 0;
  return state;
}

IntegerInterval hypergeometric_support(std::int64_t sample_size,
                                       std::int64_t total,
                                       std::int64_t count_a) {
  check_draw_args(sample_size, total, count_a);
  IntegerInterval support;
  support.lo = std::max<std::int64_t>(0, sample_size - (total - count_a));
  support.hi = std::min(sample_size, count_a);
  return support;
}

double hypergeometric_pmf(std::int64_t sample_size, std::int64_t total,
                          std::int64_t count_a, std::int64_t k) {
  const IntegerInterval support =
      hypergeometric_support(sample_size, total, count_a);
  if (!support.contains(k))
    throw std::invalid_argument("k=" + std::to_string(k) +
                                " is outside the hypergeometric support [" +
                                std::to_string(support.lo) + ", " +
                                std::to_string(support.hi) + "]");
  if (total <= kExactLimit) {
    const std::uint64_t num = pascal_row(static_cast<int>(count_a))[k] *
                              pascal_row(static_cast<int>(total - count_a))
                                        [sample_size - k];
    const std::uint64_t den =
        pascal_row(static_cast<int>(total))[sample_size];
    return static_cast<double>(num) / static_cast<double>(den);
  }
  return pmf_by_ratio_product(count_a, total - count_a, sample_size, k);
}

std::int64_t sample_hypergeometric(Xoshiro256& rng, std::int64_t sample_size,
                                   std::int64_t total, std::int64_t count_a) {
  check_draw_args(sample_size, total, count_a);
  std::int64_t remaining_a = count_a;
  std::int64_t remaining = total;
  std::int64_t drawn_a = 0;
  for (std::int64_t i = 0; i < sample_size; ++i) {
    const auto u = uniform_below(rng, static_cast<std::uint64_t>(remaining));
    if (u < static_cast<std::uint64_t>(remaining_a)) {
      ++drawn_a;
      --remaining_a;
    }
    --remaining;
  }
  return drawn_a;
}

StepRecord step(UrnState& state, std::int64_t sample_size,
                std::int64_t reinf_a, std::int64_t reinf_b, Xoshiro256& rng) {
  if (reinf_a < 1 || reinf_b < 1)
    throw std::invalid_argument("reinforcement factors must be integers >= 1");
  check_draw_args(sample_size, state.total(), state.count_a);
  const std::int64_t drawn_a =
      sample_hypergeometric(rng, sample_size, state.total(), state.count_a);

  StepRecord rec;
  rec.step = state.steps + 1;
  rec.sample_size = sample_size;
  rec.a_in_sample = drawn_a;
  rec.reinf_a = reinf_a;
  rec.reinf_b = reinf_b;
  state.count_a += reinf_a * drawn_a;
  state.count_b += reinf_b * (sample_size - drawn_a);
  state.steps += 1;
  rec.count_a_after = state.count_a;
  rec.count_b_after = state.count_b;
  return rec;
}

StepRecord replay_step(UrnState& state, std::int64_t sample_size,
                       std::int64_t a_in_sample, std::int64_t reinf_a,
                       std::int64_t reinf_b) {
  if (reinf_a < 1 || reinf_b < 1)
    throw std::invalid_argument("reinforcement factors must be integers >= 1");
  const IntegerInterval support =
      hypergeometric_support(sample_size, state.total(), state.count_a);
  if (!support.contains(a_in_sample))
    throw std::invalid_argument(
        "recorded sample is impossible for the current composition");

  StepRecord rec;
  rec.step = state.steps + 1;
  rec.sample_size = sample_size;
  rec.a_in_sample = a_in_sample;
  rec.reinf_a = reinf_a;
  rec.reinf_b = reinf_b;
  state.count_a += reinf_a * a_in_sample;
  state.count_b += reinf_b * (sample_size - a_in_sample);
  state.steps += 1;
  rec.count_a_after = state.count_a;
  rec.count_b_after = state.count_b;
  return rec;
}

}  // namespace mdurn
