#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "llfilter/adaptive.hpp"
#include "llfilter/examples.hpp"
#include "llfilter/stats.hpp"

namespace llf {

enum class ErrorKind {
  kFilterMean = 0,
  kFilterVariance = 1,
  kPredictionMean = 2,
  kPredictionVariance = 3,
};
inline constexpr std::array<ErrorKind, 4> kErrorKinds{
    ErrorKind::kFilterMean, ErrorKind::kFilterVariance,
    ErrorKind::kPredictionMean, ErrorKind::kPredictionVariance};

// "filter_mean", "filter_variance", "prediction_mean", "prediction_variance".
std::string error_kind_name(ErrorKind kind);
// Accepts the names above with '-' or '_' and "var" for "variance".
ErrorKind error_kind_from_name(const std::string& name);

struct ExperimentConfig {
  int n_realizations = 200;
  int batches = 20;  // L
  double alpha = 0.1;
  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  bool conventional = true;
  bool adaptive = true;
  AdaptiveConfig adaptive_cfg;
  // Tight-tolerance adaptive reference for models without closed-form
  // moments. Defaults to the example's own reference tolerances.
  std::optional<AdaptiveConfig> reference_cfg;
  Order beta = Order::kOne;
  std::uint64_t seed = 1;
  double path_delta = 1e-3;
  int workers = 0;  // 0: hardware concurrency
};

struct VariantSummary {
  std::string label;  // "h=1/64", "conventional" or "adaptive"
  std::optional<double> h;
  // ci[kind][k]: confidence estimate for observation row k = 0..M-2.
  std::array<std::vector<ConfidenceEstimate>, 4> ci;
  int used = 0;      // realizations entering the statistics
  int excluded = 0;  // realizations dropped by pairwise exclusion
  int diverged = 0;  // divergences of this variant itself
  // Mean accepted/failed adaptive steps per observation interval.
  std::vector<double> mean_accepted;
  std::vector<double> mean_failed;
};

struct ExperimentResult {
  std::string example;
  ExperimentConfig config;
  AdaptiveConfig reference_cfg;
  bool exact_reference = false;
  std::vector<double> obs_times;
  std::vector<VariantSummary> variants;
  // beta_hat[kind][k] fitted over the fixed-h variants (NaN if undefined).
  std::array<std::vector<double>, 4> beta_hat;
  int path_failures = 0;
  int reference_failures = 0;
  int workers = 1;
  double wall_seconds = 0.0;

  const VariantSummary& variant(const std::string& label) const;
  std::string row_label(ErrorKind kind, std::size_t k) const;
};

// Simulates the realizations, runs the reference, conventional, fixed-h and
// adaptive filters on each and collects batch confidence intervals of the
// four error types per observation. Per-realization divergences are
// counted and excluded pairwise.
ExperimentResult run_example_experiment(const ExampleSetup& setup,
                                        const ExperimentConfig& cfg);

// Columns: row_label, variant, mean, delta, beta_hat. beta_hat is filled on
// the fixed-h rows.
void write_error_table_csv(std::ostream& os, const ExperimentResult& r,
                           ErrorKind kind);
// Columns: variant, k, t, mean_accepted, mean_failed (adaptive variants).
void write_steps_csv(std::ostream& os, const ExperimentResult& r);
// Columns: row_label, beta_hat.
void write_order_csv(std::ostream& os, const ExperimentResult& r,
                     ErrorKind kind);
// Run metadata as a JSON object.
std::string experiment_summary_json(const ExperimentResult& r);

}  // namespace llf
