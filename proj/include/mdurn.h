/*
 * mdurn -- two-color urn with random multidrawing and random reinforcement:
 * exact simulation, strongly consistent estimators, one-sided test of equal
 * reinforcement means, and Monte Carlo level/power/rate studies.
 *
 * C API over the C++ core. All handles are opaque; every fallible call
 * returns an mdurn_status and leaves a thread-local message readable via
 * mdurn_last_error().
 */
#ifndef MDURN_H
#define MDURN_H

#include <stdint.h>

#if defined(_WIN32)
#define MDURN_API __declspec(dllexport)
#else
#define MDURN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mdurn_status {
  MDURN_OK = 0,
  MDURN_ERR_INVALID = 1,      /* bad argument or precondition */
  MDURN_ERR_CONFIG = 2,       /* configuration / model specification error */
  MDURN_ERR_MODEL = 3,        /* model assumption violated at runtime */
  MDURN_ERR_INSUFFICIENT = 4, /* not enough data for the requested statistic */
  MDURN_ERR_IO = 5,           /* filesystem problem */
  MDURN_ERR_INTERNAL = 6
} mdurn_status;

MDURN_API const char* mdurn_version(void);

/* Message for the most recent failure on this thread; valid until the next
 * mdurn call on the same thread. */
MDURN_API const char* mdurn_last_error(void);

MDURN_API void mdurn_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Random streams                                                      */

typedef struct mdurn_rng mdurn_rng;

MDURN_API mdurn_rng* mdurn_rng_new(uint64_t seed);
MDURN_API void mdurn_rng_free(mdurn_rng* rng);

/* ------------------------------------------------------------------ */
/* Urn state and dynamics                                              */

typedef struct mdurn_urn mdurn_urn;

typedef struct mdurn_step_record {
  int64_t step;          /* 1-based index */
  int64_t sample_size;   /* balls drawn without replacement */
  int64_t a_in_sample;   /* color-A balls among them */
  int64_t reinf_a;       /* addition factor per drawn A ball */
  int64_t reinf_b;       /* addition factor per drawn B ball */
  int64_t count_a_after; /* composition after the update */
  int64_t count_b_after;
} mdurn_step_record;

/* Requires a >= 1 and b >= 1. */
MDURN_API mdurn_status mdurn_urn_new(int64_t a, int64_t b, mdurn_urn** out);
MDURN_API void mdurn_urn_free(mdurn_urn* urn);

MDURN_API int64_t mdurn_urn_count_a(const mdurn_urn* urn);
MDURN_API int64_t mdurn_urn_count_b(const mdurn_urn* urn);
MDURN_API int64_t mdurn_urn_total(const mdurn_urn* urn);
MDURN_API int64_t mdurn_urn_steps(const mdurn_urn* urn);
MDURN_API double mdurn_urn_proportion_a(const mdurn_urn* urn);

/* Samples the group from the urn, applies the reinforcement pair and
 * advances one step. `record` may be NULL. */
MDURN_API mdurn_status mdurn_urn_step(mdurn_urn* urn, mdurn_rng* rng,
                                      int64_t sample_size, int64_t reinf_a,
                                      int64_t reinf_b,
                                      mdurn_step_record* record);

/* Re-applies a recorded step; fails if the recorded group is impossible for
 * the current composition. */
MDURN_API mdurn_status mdurn_urn_replay_step(mdurn_urn* urn,
                                             int64_t sample_size,
                                             int64_t a_in_sample,
                                             int64_t reinf_a, int64_t reinf_b,
                                             mdurn_step_record* record);

/* ------------------------------------------------------------------ */
/* Sampling-without-replacement primitives                             */

MDURN_API mdurn_status mdurn_hypergeometric_support(int64_t sample_size,
                                                    int64_t total,
                                                    int64_t count_a,
                                                    int64_t* lo, int64_t* hi);

/* P(X = k); k outside the support is an error, not probability zero. */
MDURN_API mdurn_status mdurn_hypergeometric_pmf(int64_t sample_size,
                                                int64_t total, int64_t count_a,
                                                int64_t k, double* out);

MDURN_API mdurn_status mdurn_hypergeometric_sample(mdurn_rng* rng,
                                                   int64_t sample_size,
                                                   int64_t total,
                                                   int64_t count_a,
                                                   int64_t* out);

/* ------------------------------------------------------------------ */
/* Normal distribution helpers                                         */

MDURN_API double mdurn_normal_cdf(double x);
MDURN_API mdurn_status mdurn_normal_quantile(double p, double* out);

/* ------------------------------------------------------------------ */
/* Experiment configuration and runners                                */

typedef struct mdurn_config mdurn_config;

MDURN_API mdurn_status mdurn_config_load(const char* path, mdurn_config** out);
MDURN_API mdurn_status mdurn_config_parse(const char* json_text,
                                          mdurn_config** out);
MDURN_API void mdurn_config_free(mdurn_config* config);

/* Dotted-path overrides for the scalar settings, e.g. "run.horizon",
 * "run.replications", "run.seed", "run.stride", "run.jobs", "run.theta". */
MDURN_API mdurn_status mdurn_config_override_int(mdurn_config* config,
                                                 const char* key,
                                                 int64_t value);
MDURN_API mdurn_status mdurn_config_override_real(mdurn_config* config,
                                                  const char* key,
                                                  double value);

/* Structural validation report as JSON (free with mdurn_string_free). */
MDURN_API mdurn_status mdurn_config_validate(const mdurn_config* config,
                                             char** report_json);

/* Analytic/declared model moments as JSON. */
MDURN_API mdurn_status mdurn_config_moments(const mdurn_config* config,
                                            char** moments_json);

/* Each runner writes its CSV outputs plus manifest.json into out_dir and,
 * when summary_json is non-NULL, returns a JSON summary (free with
 * mdurn_string_free).
 *
 *   simulate  one trajectory   -> trajectory.csv
 *   test      one trajectory   -> test_result.json (single JSON line)
 *   level     R replications   -> aggregate.csv
 *   power     delta sweep      -> power_curve.csv
 *   diagnose  growth exponents -> rate_series.csv
 */
MDURN_API mdurn_status mdurn_run_simulate(const mdurn_config* config,
                                          const char* out_dir,
                                          char** summary_json);
MDURN_API mdurn_status mdurn_run_test(const mdurn_config* config,
                                      const char* out_dir,
                                      char** summary_json);
MDURN_API mdurn_status mdurn_run_level(const mdurn_config* config,
                                       const char* out_dir,
                                       char** summary_json);
/* Grid is delta_start, delta_start + delta_step, ..., up to delta_stop
 * (inclusive within a half-step tolerance). */
MDURN_API mdurn_status mdurn_run_power(const mdurn_config* config,
                                       const char* out_dir, double delta_start,
                                       double delta_stop, double delta_step,
                                       char** summary_json);
MDURN_API mdurn_status mdurn_run_diagnose(const mdurn_config* config,
                                          const char* out_dir,
                                          char** summary_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MDURN_H */
