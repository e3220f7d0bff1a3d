#pragma once

#include <stdexcept>
#include <string>

namespace mdurn {

// Problem in a configuration or model specification, detected before any
// dynamics run (bad parameters, malformed pmf, unusable regime, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The generating mechanism broke a model assumption while running, e.g. a
// sample-size draw larger than the current urn total. Carries the offending
// step index.
class ModelViolation : public std::runtime_error {
 public:
  ModelViolation(const std::string& what, long long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long long step() const { return step_; }

 private:
  long long step_;
};

// The observed trajectory does not yet contain enough information to evaluate
// the requested statistic (empty denominators, zero variance, gate not met).
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdurn
