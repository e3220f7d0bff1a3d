#pragma once

#include <string>

#include <json.hpp>

#include "mdurn/montecarlo.hpp"

namespace mdurn {

// Config file schema (JSON; unknown keys are rejected):
//
// {
//   "urn":           {"a": 5, "b": 5},
//   "sample_size":   {"kind": "uniform", "max": 5},
//   "reinforcement": {"kind": "shifted_multinomial",
//                     "size": 12, "p_a": 0.2667, "p_b": 0.2667},
//   "run":  {"horizon": 20000, "replications": 500, "seed": 1,
//            "stride": 1, "theta": 0.05, "jobs": 1},
//   "test": {"min_count_a": 30, "min_count_b": 30, "gamma_floor": 1e-3,
//            "on_floor": "flag" | "error",
//            "z_plugin": "proportion_mean" | "allocation",
//            "known_size_moments": {"mean": 3.0, "second": 11.0}},
//   "diagnostics": {"snapshot_growth": 1.1, "slope_window": 0.5}
// }
//
// sample_size kinds:
//   {"kind": "constant", "value": 1}
//   {"kind": "uniform", "max": 5}
//   {"kind": "table", "pmf": [p1, p2, ...]}          // p_i = P(N = i)
//   {"kind": "z_threshold", "lo": 1, "hi": 4, "threshold": 0.5,
//    "limits": {"mean": 4.0, "second": 16.0}}        // limits optional
//
// reinforcement kinds:
//   {"kind": "constant", "a": 3, "b": 2}
//   {"kind": "product", "pmf_a": [...], "pmf_b": [...]}
//   {"kind": "shifted_multinomial", "size": 12, "p_a": ..., "p_b": ...}
//   {"kind": "joint_table", "entries": [[a, b, prob], ...]}
//   {"kind": "sequence",
//    "segments": [{"until": 1000, "model": {...}}, {"model": {...}}],
//    "envelope": {"scale": 1.0, "rate": 1.0}}

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// Normalized echo of a resolved config; parse_config(config_to_json(c))
// resolves back to an equivalent config.
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace mdurn
