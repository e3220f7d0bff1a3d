#pragma once

#include <cstdint>
#include <optional>

#include "mdurn/urn.hpp"

namespace mdurn {

// Streaming sums over a trajectory and the ratio estimators built from them.
// All counting sums are exact 64-bit integers; the only floating accumulator
// (the running sum of sample proportions) uses compensated summation.
//
// The largest per-step integer contribution is reinf_a*reinf_b*X*(N-X)
// <= C^4/4 for factor bound C; keep steps * C^4/4 below 2^63.
//
// Estimators whose denominator is still zero are "undefined" and surface as
// an empty optional; early honest trajectories legitimately lack draws of
// one color.
class Accumulators {
 public:
  // Records must arrive in order: rec.step == steps() + 1.
  void update(const StepRecord& rec);

  std::int64_t steps() const { return steps_; }
  std::int64_t count_a() const { return count_a_; }        // total A balls seen
  std::int64_t count_b() const { return count_b_; }        // total B balls seen
  std::int64_t sum_sample() const { return sum_sample_; }  // sum of N
  std::int64_t sum_sample_sq() const { return sum_sample_sq_; }
  std::int64_t sum_reinf_a_weighted() const { return sum_ax_; }
  std::int64_t sum_reinf_b_weighted() const { return sum_b_nx_; }
  std::int64_t sum_reinf_a_sq_weighted() const { return sum_a2x_; }
  std::int64_t sum_reinf_b_sq_weighted() const { return sum_b2_nx_; }
  std::int64_t sum_cross_weighted() const { return sum_abx_nx_; }
  std::int64_t sum_mixed_weight() const { return sum_x_nx_; }

  std::optional<double> mean_a() const;    // weighted mean of A factors
  std::optional<double> mean_b() const;
  std::optional<double> second_a() const;  // weighted mean of A^2
  std::optional<double> second_b() const;
  std::optional<double> cross() const;     // weighted mean of A*B (mixed draws)
  std::optional<double> var_a() const;     // second_a - mean_a^2, >= 0
  std::optional<double> var_b() const;
  std::optional<double> corr_raw() const;  // can stray outside [-1, 1]
  std::optional<double> corr_clamped() const;

  std::optional<double> sample_size_mean() const;    // sum N / steps
  std::optional<double> sample_size_second() const;  // sum N^2 / steps
  std::optional<double> proportion_mean() const;     // mean of X/N per step
  std::optional<double> allocation_a() const;        // count_a / sum N

 private:
  std::int64_t steps_ = 0;
  std::int64_t sum_sample_ = 0;
  std::int64_t sum_sample_sq_ = 0;
  std::int64_t count_a_ = 0;
  std::int64_t count_b_ = 0;
  std::int64_t sum_ax_ = 0;
  std::int64_t sum_b_nx_ = 0;
  std::int64_t sum_a2x_ = 0;
  std::int64_t sum_b2_nx_ = 0;
  std::int64_t sum_abx_nx_ = 0;
  std::int64_t sum_x_nx_ = 0;
  double sum_prop_ = 0.0;
  double sum_prop_comp_ = 0.0;  // Kahan carry
};

}  // namespace mdurn
