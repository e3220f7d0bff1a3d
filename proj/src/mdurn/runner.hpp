#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdurn/montecarlo.hpp"

namespace mdurn {

// Command-level entry points. Each writes its CSV outputs plus a run
// manifest (written last; its presence signals completion) into `out_dir`
// and returns a short JSON summary.
//
// Output schemas are versioned; column names and order are stable:
//   trajectory.csv  n,N,X,A,B,H,K,S,Z,m_hat_A,m_hat_B,sigma2_hat_A,
//                   sigma2_hat_B,rho_hat,mu_hat,q_N_hat,M_n,alloc_A,
//                   gamma0,zeta0,band_lo,band_hi
//   aggregate.csv   rep,n,zeta0,gamma0,lambda,p_value,reject,approx_power,
//                   floored_flag,status
//   power_curve.csv delta,emp_power,approx_power,ci_lo,ci_hi
//   rate_series.csv n,K,Z,ratio_K,residual_Z,ratio_NB,ratio_HK,alloc_A

nlohmann::json run_simulate(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir);

// Single trajectory to the horizon, then the one-sided test. Throws
// InsufficientData when the trajectory never meets the data gate.
nlohmann::json run_test_command(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

nlohmann::json run_level(const ExperimentConfig& config,
                         const std::filesystem::path& out_dir);

nlohmann::json run_power(const ExperimentConfig& config,
                         const std::filesystem::path& out_dir,
                         const std::vector<double>& deltas);

nlohmann::json run_diagnose(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir);

// Shortest-round-trip text form of a double; integers print without a point,
// undefined values as "nan". Deterministic across runs and thread counts.
std::string format_double(double v);

}  // namespace mdurn
