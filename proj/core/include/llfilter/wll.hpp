#pragma once

#include <vector>

#include "llfilter/linalg.hpp"
#include "llfilter/model.hpp"

namespace llf {

// Frozen coefficients of the order-beta weak local linear approximation at
// base point (s, y_base):
//   drift      A y + a0 + a1 (t - s)
//   diffusion  B_i y + b0_i + b1_i (t - s)
// b0 and b1 pack the per-noise vectors as columns (d x m).
struct LinearizationData {
  double base_time = 0.0;
  Order beta = Order::kOne;
  Matrix a;
  std::vector<Matrix> b;
  Vector a0;
  Vector a1;
  Matrix b0;
  Matrix b1;

  int dim() const { return static_cast<int>(a.rows()); }
  int noise_dim() const { return static_cast<int>(b.size()); }
};

// Throws ConfigError when order 2 is requested without Hessians or when a
// first-derivative bundle is missing; DivergenceError on non-finite model
// output at the base point.
LinearizationData linearize(const DiffusionModel& m, double s,
                            const Vector& y_base, Order beta);

}  // namespace llf
