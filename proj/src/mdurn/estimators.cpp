#include "mdurn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mdurn {
namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void Accumulators::update(const StepRecord& rec) {
  if (rec.step != steps_ + 1)
    throw std::invalid_argument("accumulator update out of order: got step " +
                                std::to_string(rec.step) + ", expected " +
                                std::to_string(steps_ + 1));
  const std::int64_t n = rec.sample_size;
  const std::int64_t x = rec.a_in_sample;
  const std::int64_t nx = n - x;
  const std::int64_t a = rec.reinf_a;
  const std::int64_t b = rec.reinf_b;

  steps_ += 1;
  sum_sample_ += n;
  sum_sample_sq_ += n * n;
  count_a_ += x;
  count_b_ += nx;
  sum_ax_ += a * x;
  sum_b_nx_ += b * nx;
  sum_a2x_ += a * a * x;
  sum_b2_nx_ += b * b * nx;
  sum_abx_nx_ += a * b * x * nx;
  sum_x_nx_ += x * nx;

  // Kahan step for the proportion sum.
  const double y = static_cast<double>(x) / static_cast<double>(n) -
                   sum_prop_comp_;
  const double t = sum_prop_ + y;
  sum_prop_comp_ = (t - sum_prop_) - y;
  sum_prop_ = t;
}

std::optional<double> Accumulators::mean_a() const {
  return ratio(sum_ax_, count_a_);
}
std::optional<double> Accumulators::mean_b() const {
  return ratio(sum_b_nx_, count_b_);
}
std::optional<double> Accumulators::second_a() const {
  return ratio(sum_a2x_, count_a_);
}
std::optional<double> Accumulators::second_b() const {
  return ratio(sum_b2_nx_, count_b_);
}
std::optional<double> Accumulators::cross() const {
  return ratio(sum_abx_nx_, sum_x_nx_);
}

std::optional<double> Accumulators::var_a() const {
  const auto m = mean_a();
  const auto q = second_a();
  if (!m || !q) return std::nullopt;
  return *q - *m * *m;
}

std::optional<double> Accumulators::var_b() const {
  const auto m = mean_b();
  const auto q = second_b();
  if (!m || !q) return std::nullopt;
  return *q - *m * *m;
}

std::optional<double> Accumulators::corr_raw() const {
  const auto va = var_a();
  const auto vb = var_b();
  const auto c = cross();
  const auto ma = mean_a();
  const auto mb = mean_b();
  if (!va || !vb || !c || !ma || !mb) return std::nullopt;
  if (!(*va > 0.0) || !(*vb > 0.0)) return std::nullopt;
  return (*c - *ma * *mb) / std::sqrt(*va * *vb);
}

std::optional<double> Accumulators::corr_clamped() const {
  const auto r = corr_raw();
  if (!r) return std::nullopt;
  return std::clamp(*r, -1.0, 1.0);
}

std::optional<double> Accumulators::sample_size_mean() const {
  return ratio(sum_sample_, steps_);
}
std::optional<double> Accumulators::sample_size_second() const {
  return ratio(sum_sample_sq_, steps_);
}

std::optional<double> Accumulators::proportion_mean() const {
  if (steps_ == 0) return std::nullopt;
  return sum_prop_ / static_cast<double>(steps_);
}

std::optional<double> Accumulators::allocation_a() const {
  return ratio(count_a_, sum_sample_);
}

}  // namespace mdurn
