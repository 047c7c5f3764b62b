#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llfilter/linalg.hpp"

namespace llf {

// Weak approximation order of the local linearization (1 or 2).
enum class Order { kOne = 1, kTwo = 2 };

inline int to_int(Order o) { return static_cast<int>(o); }
Order order_from_int(int beta);

// Per-component second derivatives: element k is the d x d Hessian of the
// k-th output with respect to the state.
using Hessians = std::vector<Matrix>;

// State equation dx = f(t,x) dt + sum_i g_i(t,x) dw^i with the derivative
// bundles consumed by the local linearization. Diffusion columns are packed
// into a d x m matrix G = [g_1 ... g_m].
//
// All callables must be pure; the harness evaluates them concurrently.
struct DiffusionModel {
  int dim = 0;
  int noise_dim = 0;

  std::function<Vector(double, const Vector&)> drift;
  std::function<Matrix(double, const Vector&)> drift_jac;
  std::function<Vector(double, const Vector&)> drift_dt;
  // Needed only for order 2.
  std::function<Hessians(double, const Vector&)> drift_hess;

  std::function<Matrix(double, const Vector&)> diffusion;
  // Element i is dg_i/dx (d x d).
  std::function<std::vector<Matrix>(double, const Vector&)> diffusion_jac;
  // Column i is dg_i/dt.
  std::function<Matrix(double, const Vector&)> diffusion_dt;
  // Element i holds the component Hessians of g_i. Needed only for order 2.
  std::function<std::vector<Hessians>(double, const Vector&)> diffusion_hess;

  bool has_hessians() const {
    return static_cast<bool>(drift_hess) && static_cast<bool>(diffusion_hess);
  }
  bool has_first_derivatives() const {
    return drift_jac && drift_dt && diffusion_jac && diffusion_dt;
  }
};

// Linear observation z_k = C x(t_k) + e_k, e_k ~ N(0, Sigma(t_k)).
struct ObservationModel {
  Matrix c;
  std::function<Matrix(double)> sigma;
  std::vector<double> times;

  Matrix sigma_at(double t) const { return sigma(t); }
};

ObservationModel make_observation_model(Matrix c, Matrix sigma,
                                        std::vector<double> times);

// Checks shapes, symmetry/PSD of Sigma at every time, and strictly
// increasing times. Throws ConfigError/DimensionError.
void validate_observation_model(const ObservationModel& obs, int state_dim);

// Nonlinear observation function h(t,x) with its derivative bundle. The
// third-order entries are needed only to give an augmented model analytic
// Jacobians.
struct NonlinearObservation {
  int dim = 0;
  std::function<Vector(double, const Vector&)> h;
  std::function<Matrix(double, const Vector&)> h_jac;   // r x d
  std::function<Vector(double, const Vector&)> h_dt;    // r
  std::function<Hessians(double, const Vector&)> h_hess;  // r of d x d

  std::function<Matrix(double, const Vector&)> h_dt_jac;    // d/dx of h_dt
  std::function<Vector(double, const Vector&)> h_dt_dt;     // d2h/dt2
  std::function<Hessians(double, const Vector&)> h_dt_hess;  // d/dt of h_hess
  // Element j, a: d x d matrix d/dx^a of Hessian of h^j.
  std::function<std::vector<Hessians>(double, const Vector&)> h_third;

  bool has_third_order() const {
    return h_dt_jac && h_dt_dt && h_dt_hess && h_third;
  }
};

// State augmentation v = [x; h(t,x)]. The h-part follows the Ito
// differential of h, so the nonlinear observation becomes the linear one
// C' v with C' = [0 I_r].
struct AugmentedModel {
  DiffusionModel model;
  Matrix c;
};

AugmentedModel augment_nonlinear_observation(const DiffusionModel& m,
                                             const NonlinearObservation& h);

struct ValidationReport {
  bool dimensions_ok = true;
  // Max relative deviation between analytic and central finite-difference
  // derivatives, per bundle. Unavailable bundles stay empty.
  std::optional<double> drift_jac_dev;
  std::optional<double> drift_dt_dev;
  std::optional<double> drift_hess_dev;
  std::optional<double> diffusion_jac_dev;
  std::optional<double> diffusion_dt_dev;
  std::optional<double> diffusion_hess_dev;
  std::vector<std::string> problems;

  bool passed() const { return dimensions_ok && problems.empty(); }
  double max_deviation() const;
};

inline constexpr double kDerivativeFlagThreshold = 1e-3;

ValidationReport validate_model(
    const DiffusionModel& m,
    const std::vector<std::pair<double, Vector>>& probes);

}  // namespace llf
