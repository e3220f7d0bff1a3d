#include "mdurn.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "mdurn/config.hpp"
#include "mdurn/errors.hpp"
#include "mdurn/runner.hpp"
#include "mdurn/version.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Maps the C++ error taxonomy onto status codes.
template <typename Fn>
mdurn_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MDURN_OK;
  } catch (const mdurn::ConfigError& e) {
    set_error(e.what());
    return MDURN_ERR_CONFIG;
  } catch (const mdurn::ModelViolation& e) {
    set_error(e.what());
    return MDURN_ERR_MODEL;
  } catch (const mdurn::InsufficientData& e) {
    set_error(e.what());
    return MDURN_ERR_INSUFFICIENT;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return MDURN_ERR_INVALID;
  } catch (const std::filesystem::filesystem_error& e) {
    set_error(e.what());
    return MDURN_ERR_IO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MDURN_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return MDURN_ERR_INTERNAL;
  }
}

}  // namespace

struct mdurn_rng {
  mdurn::Xoshiro256 engine;
};

struct mdurn_urn {
  mdurn::UrnState state;
};

struct mdurn_config {
  mdurn::ExperimentConfig config;
};

extern "C" {

const char* mdurn_version(void) { return mdurn::kVersion; }

const char* mdurn_last_error(void) { return g_last_error.c_str(); }

void mdurn_string_free(char* s) { delete[] s; }

/* ---- rng ---- */

mdurn_rng* mdurn_rng_new(uint64_t seed) {
  return new (std::nothrow) mdurn_rng{mdurn::Xoshiro256(seed)};
}

void mdurn_rng_free(mdurn_rng* rng) { delete rng; }

/* ---- urn ---- */

mdurn_status mdurn_urn_new(int64_t a, int64_t b, mdurn_urn** out) {
  if (!out) {
    set_error("out pointer is null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] { *out = new mdurn_urn{mdurn::make_urn(a, b)}; });
}

void mdurn_urn_free(mdurn_urn* urn) { delete urn; }

int64_t mdurn_urn_count_a(const mdurn_urn* urn) { return urn->state.count_a; }
int64_t mdurn_urn_count_b(const mdurn_urn* urn) { return urn->state.count_b; }
int64_t mdurn_urn_total(const mdurn_urn* urn) { return urn->state.total(); }
int64_t mdurn_urn_steps(const mdurn_urn* urn) { return urn->state.steps; }
double mdurn_urn_proportion_a(const mdurn_urn* urn) {
  return urn->state.proportion_a();
}

namespace {

void export_record(const mdurn::StepRecord& rec, mdurn_step_record* out) {
  if (!out) return;
  out->step = rec.step;
  out->sample_size = rec.sample_size;
  out->a_in_sample = rec.a_in_sample;
  out->reinf_a = rec.reinf_a;
  out->reinf_b = rec.reinf_b;
  out->count_a_after = rec.count_a_after;
  out->count_b_after = rec.count_b_after;
}

}  // namespace

mdurn_status mdurn_urn_step(mdurn_urn* urn, mdurn_rng* rng,
                            int64_t sample_size, int64_t reinf_a,
                            int64_t reinf_b, mdurn_step_record* record) {
  if (!urn || !rng) {
    set_error("urn and rng must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const mdurn::StepRecord rec =
        mdurn::step(urn->state, sample_size, reinf_a, reinf_b, rng->engine);
    export_record(rec, record);
  });
}

mdurn_status mdurn_urn_replay_step(mdurn_urn* urn, int64_t sample_size,
                                   int64_t a_in_sample, int64_t reinf_a,
                                   int64_t reinf_b, mdurn_step_record* record) {
  if (!urn) {
    set_error("urn must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const mdurn::StepRecord rec = mdurn::replay_step(
        urn->state, sample_size, a_in_sample, reinf_a, reinf_b);
    export_record(rec, record);
  });
}

/* ---- sampling primitives ---- */

mdurn_status mdurn_hypergeometric_support(int64_t sample_size, int64_t total,
                                          int64_t count_a, int64_t* lo,
                                          int64_t* hi) {
  if (!lo || !hi) {
    set_error("output pointers must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const mdurn::IntegerInterval support =
        mdurn::hypergeometric_support(sample_size, total, count_a);
    *lo = support.lo;
    *hi = support.hi;
  });
}

mdurn_status mdurn_hypergeometric_pmf(int64_t sample_size, int64_t total,
                                      int64_t count_a, int64_t k, double* out) {
  if (!out) {
    set_error("out pointer is null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    *out = mdurn::hypergeometric_pmf(sample_size, total, count_a, k);
  });
}

mdurn_status mdurn_hypergeometric_sample(mdurn_rng* rng, int64_t sample_size,
                                         int64_t total, int64_t count_a,
                                         int64_t* out) {
  if (!rng || !out) {
    set_error("rng and out must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    *out = mdurn::sample_hypergeometric(rng->engine, sample_size, total,
                                        count_a);
  });
}

/* ---- normal helpers ---- */

double mdurn_normal_cdf(double x) { return mdurn::normal_cdf(x); }

mdurn_status mdurn_normal_quantile(double p, double* out) {
  if (!out) {
    set_error("out pointer is null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] { *out = mdurn::normal_quantile(p); });
}

/* ---- config ---- */

mdurn_status mdurn_config_load(const char* path, mdurn_config** out) {
  if (!path || !out) {
    set_error("path and out must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded(
      [&] { *out = new mdurn_config{mdurn::load_config(path)}; });
}

mdurn_status mdurn_config_parse(const char* json_text, mdurn_config** out) {
  if (!json_text || !out) {
    set_error("json_text and out must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw mdurn::ConfigError(std::string("config: ") + e.what());
    }
    *out = new mdurn_config{mdurn::parse_config(doc)};
  });
}

void mdurn_config_free(mdurn_config* config) { delete config; }

mdurn_status mdurn_config_override_int(mdurn_config* config, const char* key,
                                       int64_t value) {
  if (!config || !key) {
    set_error("config and key must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const std::string k = key;
    mdurn::RunSettings& run = config->config.run;
    if (k == "run.horizon")
      run.horizon = value;
    else if (k == "run.replications")
      run.replications = value;
    else if (k == "run.seed")
      run.master_seed = static_cast<uint64_t>(value);
    else if (k == "run.stride")
      run.stride = value;
    else if (k == "run.jobs")
      run.jobs = static_cast<int>(value);
    else
      throw mdurn::ConfigError("unknown integer override key \"" + k + "\"");
  });
}

mdurn_status mdurn_config_override_real(mdurn_config* config, const char* key,
                                        double value) {
  if (!config || !key) {
    set_error("config and key must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const std::string k = key;
    if (k == "run.theta") {
      config->config.run.theta = value;
      config->config.test.theta = value;
    } else {
      throw mdurn::ConfigError("unknown real override key \"" + k + "\"");
    }
  });
}

mdurn_status mdurn_config_validate(const mdurn_config* config,
                                   char** report_json) {
  if (!config || !report_json) {
    set_error("config and report_json must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const mdurn::ValidationReport report =
        mdurn::validate_model(config->config.models);
    nlohmann::json doc;
    doc["ok"] = report.ok();
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& issue : report.issues)
      issues.push_back({{"code", issue.code}, {"detail", issue.detail}});
    doc["issues"] = std::move(issues);
    *report_json = dup_string(doc.dump());
  });
}

mdurn_status mdurn_config_moments(const mdurn_config* config,
                                  char** moments_json) {
  if (!config || !moments_json) {
    set_error("config and moments_json must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const mdurn::MomentReport report =
        mdurn::model_moments(config->config.models);
    nlohmann::json doc;
    if (report.sample_size)
      doc["sample_size"] = {{"mean", report.sample_size->mean},
                            {"second", report.sample_size->second_moment}};
    else
      doc["sample_size"] = "unknown";
    const mdurn::ReinforcementMoments& m = report.reinforcement;
    doc["reinforcement"] = {{"mean_a", m.mean_a},     {"mean_b", m.mean_b},
                            {"second_a", m.second_a}, {"second_b", m.second_b},
                            {"cross", m.cross},       {"var_a", m.var_a()},
                            {"var_b", m.var_b()},     {"cov", m.cov()}};
    switch (report.regime) {
      case mdurn::MeanRegime::Equal:
        doc["regime"] = "equal_means";
        break;
      case mdurn::MeanRegime::AGreater:
        doc["regime"] = "a_greater";
        break;
      case mdurn::MeanRegime::BGreater:
        doc["regime"] = "b_greater";
        break;
    }
    doc["mean_ratio"] = report.mean_ratio;
    *moments_json = dup_string(doc.dump());
  });
}

/* ---- runners ---- */

namespace {

using RunnerFn = nlohmann::json (*)(const mdurn::ExperimentConfig&,
                                    const std::filesystem::path&);

mdurn_status run_command(const mdurn_config* config, const char* out_dir,
                         char** summary_json, RunnerFn runner) {
  if (!config || !out_dir) {
    set_error("config and out_dir must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    const nlohmann::json summary = runner(config->config, out_dir);
    if (summary_json) *summary_json = dup_string(summary.dump());
  });
}

}  // namespace

mdurn_status mdurn_run_simulate(const mdurn_config* config, const char* out_dir,
                                char** summary_json) {
  return run_command(config, out_dir, summary_json, mdurn::run_simulate);
}

mdurn_status mdurn_run_test(const mdurn_config* config, const char* out_dir,
                            char** summary_json) {
  return run_command(config, out_dir, summary_json, mdurn::run_test_command);
}

mdurn_status mdurn_run_level(const mdurn_config* config, const char* out_dir,
                             char** summary_json) {
  return run_command(config, out_dir, summary_json, mdurn::run_level);
}

mdurn_status mdurn_run_power(const mdurn_config* config, const char* out_dir,
                             double delta_start, double delta_stop,
                             double delta_step, char** summary_json) {
  if (!config || !out_dir) {
    set_error("config and out_dir must not be null");
    return MDURN_ERR_INVALID;
  }
  return guarded([&] {
    if (!(delta_step > 0.0) || delta_stop < delta_start)
      throw mdurn::ConfigError(
          "power grid needs delta_step > 0 and delta_stop >= delta_start");
    std::vector<double> deltas;
    for (int i = 0;; ++i) {
      // snap each grid value to a clean decimal instead of accumulating
      // floating-point drift
      const double d = std::round((delta_start + i * delta_step) * 1e12) / 1e12;
      if (d > delta_stop + delta_step / 2.0) break;
      deltas.push_back(d);
    }
    const nlohmann::json summary =
        mdurn::run_power(config->config, out_dir, deltas);
    if (summary_json) *summary_json = dup_string(summary.dump());
  });
}

mdurn_status mdurn_run_diagnose(const mdurn_config* config, const char* out_dir,
                                char** summary_json) {
  return run_command(config, out_dir, summary_json, mdurn::run_diagnose);
}

} /* extern "C" */
