#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdurn/rng.hpp"
#include "mdurn/urn.hpp"

namespace mdurn {

// Read-only snapshot of the past offered to sample-size rules. The rule for
// step `next_step` sees the composition after step next_step - 1.
struct PastSummary {
  std::int64_t next_step = 1;  // index of the step about to be generated
  std::int64_t total = 0;      // urn total before the step
  std::int64_t count_a = 0;    // color-A balls before the step
  double proportion_a = 0.0;
  const StepRecord* last = nullptr;  // most recent record, null at step 1
};

struct SampleSizeMoments {
  double mean = 0.0;           // limit of E[N]
  double second_moment = 0.0;  // limit of E[N^2]
};

// Generator of the per-step group size. Draws are validated against the
// current urn total: a model that proposes more balls than the urn holds is
// misconfigured and the draw fails loudly instead of being clamped.
class SampleSizeModel {
 public:
  enum class Kind { Constant, Uniform, Table, ZThreshold };

  SampleSizeModel() = default;  // constant 1, the smallest valid rule

  static SampleSizeModel constant(std::int64_t value);
  static SampleSizeModel uniform(std::int64_t max_value);  // uniform on {1..max}
  // pmf[i] = P(N = i + 1); weights must be nonnegative with positive total.
  static SampleSizeModel table(std::vector<double> pmf);
  // Past-dependent rule: hi when the color-A proportion has reached the
  // threshold, lo otherwise. Limiting moments, if known, can be declared.
  static SampleSizeModel z_threshold(std::int64_t lo, std::int64_t hi,
                                     double threshold,
                                     std::optional<SampleSizeMoments> limits);

  Kind kind() const { return kind_; }
  bool iid() const { return kind_ != Kind::ZThreshold; }
  std::int64_t bound() const { return bound_; }  // largest drawable value

  std::int64_t draw(const PastSummary& past, Xoshiro256& rng) const;

  // Exact for iid kinds; declared (or absent) for past-dependent rules.
  std::optional<SampleSizeMoments> moments() const;

  // Parameter access for serialization.
  std::int64_t constant_value() const { return constant_value_; }
  std::int64_t uniform_max() const { return bound_; }
  const std::vector<double>& table_pmf() const { return pmf_; }
  std::int64_t threshold_lo() const { return lo_; }
  std::int64_t threshold_hi() const { return hi_; }
  double threshold() const { return threshold_; }
  const std::optional<SampleSizeMoments>& declared_limits() const {
    return declared_limits_;
  }

 private:
  Kind kind_ = Kind::Constant;
  std::int64_t bound_ = 1;
  std::int64_t constant_value_ = 1;
  std::vector<double> pmf_;     // Table
  std::vector<double> cum_;     // cumulative weights for Table
  double total_weight_ = 0.0;
  std::int64_t lo_ = 1, hi_ = 1;  // ZThreshold
  double threshold_ = 0.5;
  std::optional<SampleSizeMoments> declared_limits_;
};

struct ReinforcementMoments {
  double mean_a = 0.0;    // E[A]
  double mean_b = 0.0;    // E[B]
  double second_a = 0.0;  // E[A^2]
  double second_b = 0.0;  // E[B^2]
  double cross = 0.0;     // E[AB]

  double var_a() const { return second_a - mean_a * mean_a; }
  double var_b() const { return second_b - mean_b * mean_b; }
  double cov() const { return cross - mean_a * mean_b; }
  double corr() const;  // NaN when either variance is zero
};

enum class MeanRegime { Equal, AGreater, BGreater };

struct JointEntry {
  std::int64_t a = 1;
  std::int64_t b = 1;
  double weight = 0.0;
};

// Caps |mean_a(n)*mean_b - mean_a*mean_b(n)| <= scale * n^(-rate) for models
// whose per-step means vary with n.
struct MeanEnvelope {
  double scale = 0.0;
  double rate = 0.0;
};

// Generator of the per-step reinforcement pair (A, B), both integers >= 1.
// Draws are taken from a dedicated substream keyed by the step index, so the
// pair is independent of the urn's history by construction.
class ReinforcementModel {
 public:
  enum class Kind { ConstantPair, Product, ShiftedMultinomial, JointTable,
                    Sequence };

  ReinforcementModel();  // constant pair (1, 1)

  static ReinforcementModel constant_pair(std::int64_t a, std::int64_t b);
  // Independent coordinates; pmf_x[i] = P(value = i + 1).
  static ReinforcementModel product(std::vector<double> pmf_a,
                                    std::vector<double> pmf_b);
  // A = 1 + Y1, B = 1 + Y2 with (Y1, Y2, Y3) multinomial(size; p_a, p_b, rest).
  static ReinforcementModel shifted_multinomial(std::int64_t size, double p_a,
                                                double p_b);
  static ReinforcementModel joint_table(std::vector<JointEntry> entries);

  struct Segment;  // defined below; vector works with the incomplete type
  static ReinforcementModel sequence(std::vector<Segment> segments,
                                     MeanEnvelope envelope);

  Kind kind() const { return kind_; }
  std::int64_t bound() const { return bound_; }  // largest drawable coordinate

  std::pair<std::int64_t, std::int64_t> draw(std::int64_t step,
                                             Xoshiro256& substream) const;

  ReinforcementMoments moments_at(std::int64_t step) const;
  ReinforcementMoments limit_moments() const;
  MeanRegime regime() const;
  double mean_ratio() const;  // m_B / m_A of the limit moments

  // Parameter access for serialization and the power sweep.
  std::int64_t constant_a() const { return constant_a_; }
  std::int64_t constant_b() const { return constant_b_; }
  const std::vector<double>& product_pmf_a() const { return pmf_a_; }
  const std::vector<double>& product_pmf_b() const { return pmf_b_; }
  std::int64_t multinomial_size() const { return multinomial_size_; }
  double multinomial_p_a() const { return p_a_; }
  double multinomial_p_b() const { return p_b_; }
  const std::vector<JointEntry>& joint_entries() const { return entries_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const MeanEnvelope& envelope() const { return envelope_; }

 private:
  struct Raw {};
  explicit ReinforcementModel(Raw) {}  // factory starting point, no entries

  void build_cumulative();
  void moments_from_entries();

  Kind kind_ = Kind::ConstantPair;
  std::int64_t bound_ = 1;

  // Every non-sequence kind is realized as a finite joint table.
  std::vector<JointEntry> entries_;
  std::vector<double> cum_;
  double total_weight_ = 0.0;
  ReinforcementMoments moments_;

  std::int64_t constant_a_ = 1, constant_b_ = 1;
  std::vector<double> pmf_a_, pmf_b_;
  std::int64_t multinomial_size_ = 0;
  double p_a_ = 0.0, p_b_ = 0.0;

  std::vector<Segment> segments_;
  MeanEnvelope envelope_;
};

// Applies to steps <= until; the last segment must leave `until` empty.
struct ReinforcementModel::Segment {
  std::optional<std::int64_t> until;
  ReinforcementModel model;
};

struct ModelSpec {
  SampleSizeModel sample_size;
  ReinforcementModel reinforcement;
};

struct ValidationIssue {
  std::string code;    // stable identifier, e.g. "pmf_not_normalized"
  std::string detail;  // human-readable context
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Structural checks that go beyond what construction enforces: pmf
// normalization within 1e-9, zero-mass entries, support bounds, and the
// mean-sequence envelope for step-dependent models. Nothing is clamped;
// every problem becomes an issue in the report.
ValidationReport validate_model(const ModelSpec& spec);

struct MomentReport {
  std::optional<SampleSizeMoments> sample_size;  // absent when undeclared
  ReinforcementMoments reinforcement;
  MeanRegime regime = MeanRegime::Equal;
  double mean_ratio = 1.0;  // m_B / m_A
};

MomentReport model_moments(const ModelSpec& spec);

}  // namespace mdurn
