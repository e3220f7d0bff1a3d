#pragma once

#include <cstdint>

#include "mdurn/rng.hpp"

namespace mdurn {

// Composition of a two-color urn. Counts are kept in exact 64-bit integer
// arithmetic; the proportion of color A is computed from the integers on
// demand and never accumulated in floating point.
struct UrnState {
  std::int64_t initial_a = 0;  // balls of color A at creation
  std::int64_t initial_b = 0;  // balls of color B at creation
  std::int64_t count_a = 0;    // current balls of color A
  std::int64_t count_b = 0;    // current balls of color B
  std::int64_t steps = 0;      // updates applied so far

  std::int64_t total() const { return count_a + count_b; }
  double proportion_a() const {
    return static_cast<double>(count_a) / static_cast<double>(total());
  }
};

// One realized time step: the sampled group, the reinforcement pair and the
// composition after the update.
struct StepRecord {
  std::int64_t step = 0;         // 1-based index
  std::int64_t sample_size = 0;  // balls drawn without replacement
  std::int64_t a_in_sample = 0;  // color-A balls among them
  std::int64_t reinf_a = 0;      // per-ball addition factor, color A
  std::int64_t reinf_b = 0;      // per-ball addition factor, color B
  std::int64_t count_a_after = 0;
  std::int64_t count_b_after = 0;

  std::int64_t total_after() const { return count_a_after + count_b_after; }
  std::int64_t b_in_sample() const { return sample_size - a_in_sample; }
};

struct IntegerInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
  std::int64_t size() const { return hi - lo + 1; }
};

// Requires a >= 1 and b >= 1: both colors must be present.
UrnState make_urn(std::int64_t a, std::int64_t b);

// Possible color-A counts in a sample of `sample_size` from `total` balls of
// which `count_a` are color A: [max(0, n - (total - count_a)), min(n, count_a)].
IntegerInterval hypergeometric_support(std::int64_t sample_size,
                                       std::int64_t total,
                                       std::int64_t count_a);

// P(X = k) for the draw above. `k` must lie in the support; asking for the
// probability of an impossible count is treated as a caller bug, not as 0.
double hypergeometric_pmf(std::int64_t sample_size, std::int64_t total,
                          std::int64_t count_a, std::int64_t k);

// Exact draw, by sampling the group one ball at a time without replacement.
// Cost is O(sample_size); sample sizes in this model are small by assumption.
std::int64_t sample_hypergeometric(Xoshiro256& rng, std::int64_t sample_size,
                                   std::int64_t total, std::int64_t count_a);

// Advances the urn one step: samples the group, applies the reinforcement and
// returns the realized record. The caller chooses sample_size and the
// reinforcement pair; the color split of the sample is drawn here and cannot
// be injected.
StepRecord step(UrnState& state, std::int64_t sample_size,
                std::int64_t reinf_a, std::int64_t reinf_b, Xoshiro256& rng);

// Re-applies a recorded step. Validates that a_in_sample is achievable for
// the current composition. Used to replay trajectory files in tests/audits.
StepRecord replay_step(UrnState& state, std::int64_t sample_size,
                       std::int64_t a_in_sample, std::int64_t reinf_a,
                       std::int64_t reinf_b);

}  // namespace mdurn
