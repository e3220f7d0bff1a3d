#include "mdurn/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdurn/errors.hpp"

namespace mdurn {
namespace {

constexpr double kRegimeTol = 1e-12;

void check_pmf_vector(const std::vector<double>& pmf, const char* what) {
  if (pmf.empty()) throw ConfigError(std::string(what) + ": empty pmf");
  double total = 0.0;
  for (double w : pmf) {
    if (!(w >= 0.0))
      throw ConfigError(std::string(what) + ": negative or NaN weight");
    total += w;
  }
  if (!(total > 0.0))
    throw ConfigError(std::string(what) + ": total mass is zero");
}

void trim_trailing_zeros(std::vector<double>& pmf) {
  while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();
}

// log multinomial weight, tolerating zero probabilities with zero counts
double log_multinomial_term(std::int64_t size,
                            std::initializer_list<std::pair<std::int64_t, double>>
                                counts) {
  double lw = std::lgamma(static_cast<double>(size + 1));
  for (const auto& [count, prob] : counts) {
    if (count > 0 && prob == 0.0)
      return -std::numeric_limits<double>::infinity();
    lw -= std::lgamma(static_cast<double>(count + 1));
    if (count > 0) lw += static_cast<double>(count) * std::log(prob);
  }
  return lw;
}

}  // namespace

// ---------------------------------------------------------------------------
// SampleSizeModel

SampleSizeModel SampleSizeModel::constant(std::int64_t value) {
  if (value < 1) throw ConfigError("constant sample size must be >= 1");
  SampleSizeModel m;
  m.kind_ = Kind::Constant;
  m.constant_value_ = value;
  m.bound_ = value;
  return m;
}

SampleSizeModel SampleSizeModel::uniform(std::int64_t max_value) {
  if (max_value < 1) throw ConfigError("uniform sample-size max must be >= 1");
  SampleSizeModel m;
  m.kind_ = Kind::Uniform;
  m.bound_ = max_value;
  return m;
}

SampleSizeModel SampleSizeModel::table(std::vector<double> pmf) {
  check_pmf_vector(pmf, "sample-size table");
  trim_trailing_zeros(pmf);
  SampleSizeModel m;
  m.kind_ = Kind::Table;
  m.pmf_ = std::move(pmf);
  m.bound_ = static_cast<std::int64_t>(m.pmf_.size());
  m.cum_.reserve(m.pmf_.size());
  double running = 0.0;
  for (double w : m.pmf_) {
    running += w;
    m.cum_.push_back(running);
  }
  m.total_weight_ = running;
  return m;
}

SampleSizeModel SampleSizeModel::z_threshold(
    std::int64_t lo, std::int64_t hi, double threshold,
    std::optional<SampleSizeMoments> limits) {
  if (lo < 1 || hi < lo)
    throw ConfigError("z_threshold needs 1 <= lo <= hi");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("z_threshold threshold must lie in (0, 1)");
  SampleSizeModel m;
  m.kind_ = Kind::ZThreshold;
  m.lo_ = lo;
  m.hi_ = hi;
  m.threshold_ = threshold;
  m.bound_ = hi;
  m.declared_limits_ = limits;
  return m;
}

std::int64_t SampleSizeModel::draw(const PastSummary& past,
                                   Xoshiro256& rng) const {
  std::int64_t value = 1;
  switch (kind_) {
    case Kind::Constant:
      value = constant_value_;
      break;
    case Kind::Uniform:
      value = 1 + static_cast<std::int64_t>(
                      uniform_below(rng, static_cast<std::uint64_t>(bound_)));
      break;
    case Kind::Table: {
      const double u = uniform_unit(rng) * total_weight_;
      const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
      value = 1 + static_cast<std::int64_t>(
                      std::min<std::ptrdiff_t>(it - cum_.begin(),
                                               static_cast<std::ptrdiff_t>(
                                                   cum_.size() - 1)));
      break;
    }
    case Kind::ZThreshold:
      value = past.proportion_a >= threshold_ ? hi_ : lo_;
      break;
  }
  if (value > past.total)
    throw ModelViolation("sample-size model proposed " +
                             std::to_string(value) + " with only " +
                             std::to_string(past.total) + " balls in the urn",
                         past.next_step);
  return value;
}

std::optional<SampleSizeMoments> SampleSizeModel::moments() const {
  switch (kind_) {
    case Kind::Constant: {
      const double v = static_cast<double>(constant_value_);
      return SampleSizeMoments{v, v * v};
    }
    case Kind::Uniform: {
      const double u = static_cast<double>(bound_);
      return SampleSizeMoments{(u + 1.0) / 2.0,
                               (u + 1.0) * (2.0 * u + 1.0) / 6.0};
    }
    case Kind::Table: {
      double mean = 0.0, second = 0.0;
      for (std::size_t i = 0; i < pmf_.size(); ++i) {
        const double v = static_cast<double>(i + 1);
        mean += v * pmf_[i];
        second += v * v * pmf_[i];
      }
      return SampleSizeMoments{mean / total_weight_, second / total_weight_};
    }
    case Kind::ZThreshold:
      return declared_limits_;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ReinforcementModel

double ReinforcementMoments::corr() const {
  const double va = var_a();
  const double vb = var_b();
  if (!(va > 0.0) || !(vb > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return cov() / std::sqrt(va * vb);
}

void ReinforcementModel::build_cumulative() {
  cum_.clear();
  cum_.reserve(entries_.size());
  double running = 0.0;
  bound_ = 1;
  for (const auto& e : entries_) {
    running += e.weight;
    cum_.push_back(running);
    bound_ = std::max({bound_, e.a, e.b});
  }
  total_weight_ = running;
  if (!(total_weight_ > 0.0))
    throw ConfigError("reinforcement model: total mass is zero");
}

void ReinforcementModel::moments_from_entries() {
  ReinforcementMoments m;
  for (const auto& e : entries_) {
    const double w = e.weight / total_weight_;
    const double a = static_cast<double>(e.a);
    const double b = static_cast<double>(e.b);
    m.mean_a += a * w;
    m.mean_b += b * w;
    m.second_a += a * a * w;
    m.second_b += b * b * w;
    m.cross += a * b * w;
  }
  moments_ = m;
}

ReinforcementModel::ReinforcementModel()
    : ReinforcementModel(constant_pair(1, 1)) {}

ReinforcementModel ReinforcementModel::constant_pair(std::int64_t a,
                                                     std::int64_t b) {
  if (a < 1 || b < 1)
    throw ConfigError("reinforcement factors must be integers >= 1");
  ReinforcementModel m{Raw{}};
  m.kind_ = Kind::ConstantPair;
  m.constant_a_ = a;
  m.constant_b_ = b;
  m.entries_ = {JointEntry{a, b, 1.0}};
  m.build_cumulative();
  m.moments_from_entries();
  return m;
}

ReinforcementModel ReinforcementModel::product(std::vector<double> pmf_a,
                                               std::vector<double> pmf_b) {
  check_pmf_vector(pmf_a, "reinforcement pmf_a");
  check_pmf_vector(pmf_b, "reinforcement pmf_b");
  trim_trailing_zeros(pmf_a);
  trim_trailing_zeros(pmf_b);
  ReinforcementModel m{Raw{}};
  m.kind_ = Kind::Product;
  m.pmf_a_ = std::move(pmf_a);
  m.pmf_b_ = std::move(pmf_b);
  for (std::size_t i = 0; i < m.pmf_a_.size(); ++i) {
    if (m.pmf_a_[i] == 0.0) continue;
    for (std::size_t j = 0; j < m.pmf_b_.size(); ++j) {
      if (m.pmf_b_[j] == 0.0) continue;
      m.entries_.push_back(JointEntry{static_cast<std::int64_t>(i + 1),
                                      static_cast<std::int64_t>(j + 1),
                                      m.pmf_a_[i] * m.pmf_b_[j]});
    }
  }
  m.build_cumulative();
  m.moments_from_entries();
  return m;
}

ReinforcementModel ReinforcementModel::shifted_multinomial(std::int64_t size,
                                                           double p_a,
                                                           double p_b) {
  if (size < 1) throw ConfigError("shifted multinomial: size must be >= 1");
  if (!(p_a >= 0.0) || !(p_b >= 0.0) || p_a + p_b > 1.0 + 1e-15)
    throw ConfigError(
        "shifted multinomial: probabilities must be nonnegative with "
        "p_a + p_b <= 1");
  ReinforcementModel m{Raw{}};
  m.kind_ = Kind::ShiftedMultinomial;
  m.multinomial_size_ = size;
  m.p_a_ = p_a;
  m.p_b_ = p_b;
  const double p_rest = std::max(0.0, 1.0 - p_a - p_b);
  for (std::int64_t i = 0; i <= size; ++i) {
    for (std::int64_t j = 0; j + i <= size; ++j) {
      const std::int64_t rest = size - i - j;
      const double lw = log_multinomial_term(
          size, {{i, p_a}, {j, p_b}, {rest, p_rest}});
      if (lw == -std::numeric_limits<double>::infinity()) continue;
      m.entries_.push_back(JointEntry{1 + i, 1 + j, std::exp(lw)});
    }
  }
  m.build_cumulative();
  // Exact first and second moments of the shifted coordinates.
  const double s = static_cast<double>(size);
  ReinforcementMoments mo;
  mo.mean_a = 1.0 + s * p_a;
  mo.mean_b = 1.0 + s * p_b;
  mo.second_a = mo.mean_a * mo.mean_a + s * p_a * (1.0 - p_a);
  mo.second_b = mo.mean_b * mo.mean_b + s * p_b * (1.0 - p_b);
  mo.cross = mo.mean_a * mo.mean_b - s * p_a * p_b;
  m.moments_ = mo;
  return m;
}

ReinforcementModel ReinforcementModel::joint_table(
    std::vector<JointEntry> entries) {
  if (entries.empty()) throw ConfigError("joint table: no entries");
  for (const auto& e : entries) {
    if (e.a < 1 || e.b < 1)
      throw ConfigError(
          "joint table: support must lie in {1,2,...} x {1,2,...}");
    if (!(e.weight >= 0.0))
      throw ConfigError("joint table: negative or NaN weight");
  }
  ReinforcementModel m{Raw{}};
  m.kind_ = Kind::JointTable;
  m.entries_ = std::move(entries);
  m.build_cumulative();
  m.moments_from_entries();
  return m;
}

ReinforcementModel ReinforcementModel::sequence(std::vector<Segment> segments,
                                                MeanEnvelope envelope) {
  if (segments.empty()) throw ConfigError("sequence: no segments");
  std::int64_t prev_until = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].model.kind() == Kind::Sequence)
      throw ConfigError("sequence: segments cannot nest");
    const bool last = i + 1 == segments.size();
    if (last) {
      if (segments[i].until.has_value())
        throw ConfigError("sequence: the last segment must be open-ended");
    } else {
      if (!segments[i].until.has_value())
        throw ConfigError("sequence: only the last segment may be open-ended");
      if (*segments[i].until <= prev_until)
        throw ConfigError("sequence: segment boundaries must increase");
      prev_until = *segments[i].until;
    }
  }
  if (!(envelope.rate > 0.0) || !(envelope.scale >= 0.0))
    throw ConfigError(
        "sequence: a mean envelope with positive rate must be declared");
  ReinforcementModel m{Raw{}};
  m.kind_ = Kind::Sequence;
  m.segments_ = std::move(segments);
  m.envelope_ = envelope;
  m.bound_ = 1;
  for (const auto& seg : m.segments_)
    m.bound_ = std::max(m.bound_, seg.model.bound());
  return m;
}

std::pair<std::int64_t, std::int64_t> ReinforcementModel::draw(
    std::int64_t step, Xoshiro256& substream) const {
  if (kind_ == Kind::Sequence) {
    for (const auto& seg : segments_)
      if (!seg.until.has_value() || step <= *seg.until)
        return seg.model.draw(step, substream);
  }
  if (entries_.size() == 1) return {entries_[0].a, entries_[0].b};
  const double u = uniform_unit(substream) * total_weight_;
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  const auto idx = std::min<std::ptrdiff_t>(
      it - cum_.begin(), static_cast<std::ptrdiff_t>(entries_.size() - 1));
  return {entries_[idx].a, entries_[idx].b};
}

ReinforcementMoments ReinforcementModel::moments_at(std::int64_t step) const {
  if (kind_ == Kind::Sequence) {
    for (const auto& seg : segments_)
      if (!seg.until.has_value() || step <= *seg.until)
        return seg.model.moments_at(step);
  }
  return moments_;
}

ReinforcementMoments ReinforcementModel::limit_moments() const {
  if (kind_ == Kind::Sequence) return segments_.back().model.limit_moments();
  return moments_;
}

MeanRegime ReinforcementModel::regime() const {
  const ReinforcementMoments m = limit_moments();
  const double scale = std::max({1.0, m.mean_a, m.mean_b});
  if (std::abs(m.mean_a - m.mean_b) <= kRegimeTol * scale)
    return MeanRegime::Equal;
  return m.mean_a > m.mean_b ? MeanRegime::AGreater : MeanRegime::BGreater;
}

double ReinforcementModel::mean_ratio() const {
  const ReinforcementMoments m = limit_moments();
  return m.mean_b / m.mean_a;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_normalized(double total, const std::string& what,
                      ValidationReport& report) {
  if (std::abs(total - 1.0) > 1e-9)
    report.issues.push_back(
        {"pmf_not_normalized",
         what + " sums to " + std::to_string(total) + ", expected 1"});
}

void validate_reinforcement(const ReinforcementModel& model,
                            ValidationReport& report,
                            const std::string& where) {
  switch (model.kind()) {
    case ReinforcementModel::Kind::ConstantPair:
      break;  // degenerate, nothing to check
    case ReinforcementModel::Kind::Product: {
      double ta = 0.0, tb = 0.0;
      for (double w : model.product_pmf_a()) ta += w;
      for (double w : model.product_pmf_b()) tb += w;
      check_normalized(ta, where + " pmf_a", report);
      check_normalized(tb, where + " pmf_b", report);
      break;
    }
    case ReinforcementModel::Kind::ShiftedMultinomial:
      break;  // normalized by construction
    case ReinforcementModel::Kind::JointTable: {
      double total = 0.0;
      for (const auto& e : model.joint_entries()) {
        total += e.weight;
        if (e.weight == 0.0)
          report.issues.push_back(
              {"zero_mass_entry",
               where + " entry (" + std::to_string(e.a) + ", " +
                   std::to_string(e.b) + ") has zero mass"});
      }
      check_normalized(total, where + " joint table", report);
      break;
    }
    case ReinforcementModel::Kind::Sequence: {
      std::size_t i = 0;
      for (const auto& seg : model.segments())
        validate_reinforcement(seg.model, report,
                               where + " segment " + std::to_string(i++));
      // Envelope: the cross-mean deviation from the limit must decay at the
      // declared rate over every step-dependent (finite) segment.
      const ReinforcementMoments limit = model.limit_moments();
      const MeanEnvelope env = model.envelope();
      const std::optional<std::int64_t> last_finite =
          model.segments().size() >= 2
              ? model.segments()[model.segments().size() - 2].until
              : std::nullopt;
      for (std::int64_t n = 1; last_finite && n <= *last_finite; ++n) {
        const ReinforcementMoments at = model.moments_at(n);
        const double dev =
            std::abs(at.mean_a * limit.mean_b - limit.mean_a * at.mean_b);
        const double cap =
            env.scale * std::pow(static_cast<double>(n), -env.rate);
        if (dev > cap + 1e-12) {
          report.issues.push_back(
              {"mean_envelope_violated",
               where + " step " + std::to_string(n) + ": deviation " +
                   std::to_string(dev) + " exceeds declared cap " +
                   std::to_string(cap)});
          break;  // one witness is enough
        }
      }
      if (model.regime() == MeanRegime::Equal) {
        for (const auto& seg : model.segments()) {
          const ReinforcementMoments at = seg.model.limit_moments();
          if (std::abs(at.mean_a - at.mean_b) > kRegimeTol) {
            report.issues.push_back(
                {"equal_regime_step_means_differ",
                 where + ": limit means are equal but a segment has "
                         "unequal means"});
            break;
          }
        }
      }
      break;
    }
  }
}

}  // namespace

ValidationReport validate_model(const ModelSpec& spec) {
  ValidationReport report;
  if (spec.sample_size.kind() == SampleSizeModel::Kind::Table) {
    double total = 0.0;
    for (double w : spec.sample_size.table_pmf()) total += w;
    check_normalized(total, "sample-size table", report);
  }
  validate_reinforcement(spec.reinforcement, report, "reinforcement");
  return report;
}

MomentReport model_moments(const ModelSpec& spec) {
  MomentReport report;
  report.sample_size = spec.sample_size.moments();
  report.reinforcement = spec.reinforcement.limit_moments();
  report.regime = spec.reinforcement.regime();
  report.mean_ratio = spec.reinforcement.mean_ratio();
  return report;
}

}  // namespace mdurn
