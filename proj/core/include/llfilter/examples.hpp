#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "llfilter/adaptive.hpp"
#include "llfilter/filter.hpp"
#include "llfilter/model.hpp"

namespace llf {

// Parameters of the four benchmark models. Fields a model does not use are
// ignored.
struct ExampleParams {
  double a = 0.0;
  double sigma = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double p = 0.0;
  double varpi = 0.0;
  double t0 = 0.0;
  double obs_variance = 0.0;  // "Sigma" in config files
  Vector x0;
  Matrix q0;  // initial second moment E[x x^T]

  // Throws ConfigError for an unknown id.
  static ExampleParams defaults(const std::string& id);
};

enum class PathScheme { kEuler, kLocalLinear };

struct ExampleSetup {
  std::string id;
  ExampleParams params;
  DiffusionModel model;
  ObservationModel obs;
  FilterInit init;
  // Closed-form moment predictor (ex1, ex2 only).
  std::optional<ExactPredictor> exact;
  // Tolerances of the tight-tolerance adaptive filter for this model.
  AdaptiveConfig reference;
  PathScheme path_scheme = PathScheme::kEuler;
};

const std::vector<std::string>& example_ids();
bool is_example_id(const std::string& id);

// Builds a benchmark problem with n_obs unit-spaced observations from t0.
ExampleSetup make_example(const std::string& id, const ExampleParams& params,
                          int n_obs = 10);
ExampleSetup make_example(const std::string& id);

// JSON model file: {"example": "ex3", "a": 0.5, ..., "x0": [1, 1],
// "Q0": [[1, 1], [1, 1]], "rtol_y": 1e-6, ...}. Parameters override the
// example defaults; the adaptive keys override `adaptive`.
struct ModelFile {
  std::string example;
  ExampleParams params;
  AdaptiveConfig adaptive;
};

ModelFile parse_model_file(std::istream& is, const AdaptiveConfig& adaptive);
ModelFile load_model_file(const std::string& path,
                          const AdaptiveConfig& adaptive);

}  // namespace llf
