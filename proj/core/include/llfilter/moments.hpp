#pragma once

#include <vector>

#include "llfilter/linalg.hpp"
#include "llfilter/model.hpp"
#include "llfilter/wll.hpp"

namespace llf {

// First two conditional moments at time t: mean y and second moment
// P = E[x x^T]. The variance is derived.
struct MomentState {
  double t = 0.0;
  Vector y;
  Matrix p;

  Matrix variance() const { return p - y * y.transpose(); }
  int dim() const { return static_cast<int>(y.size()); }

  static MomentState from_mean_variance(double t, const Vector& y,
                                        const Matrix& v) {
    return {t, y, v + y * y.transpose()};
  }
};

// Moment state together with its variance, as returned by predictors.
struct Prediction {
  MomentState state;
  Matrix v;
};

// The (d^2+2d+7)-dimensional linear system whose exponential propagates
// both moments over one linearization interval.
//
// Layout of the augmented vector (offsets in units of entries):
//   [0, d^2)              vec(P)
//   [d^2, d^2+d+2)        w2: s * exp(C s) r   (drives the s-linear terms)
//   [d^2+d+2, d^2+2d+4)   w3: exp(C s) r = [y(s) - y_base; s; 1]
//   d^2+2d+4 .. +6        scalars (s^2, s, 1)
struct AugmentedSystem {
  int d = 0;
  Matrix m;
  Vector u;

  Eigen::Index size() const { return m.rows(); }
  Eigen::Index w2_offset() const { return d * d; }
  Eigen::Index w3_offset() const { return d * d + d + 2; }
  Eigen::Index scalar_offset() const { return d * d + 2 * d + 4; }
};

inline Eigen::Index augmented_size(int d) { return d * d + 2 * d + 7; }

AugmentedSystem build_augmented(const LinearizationData& lin,
                                const MomentState& state);

// Applies a precomputed exponential phi = exp(M h) to sys.u and reads off
// the moments at state.t + h. P is symmetrized.
MomentState apply_flow(const AugmentedSystem& sys, const Matrix& phi,
                       const MomentState& state, double h);

// One linearized moment step of size h: one exponential of the augmented
// matrix serves both moments.
MomentState moment_step(const LinearizationData& lin, const MomentState& state,
                        double h);

// Right-hand side of the frozen linear moment ODEs at time t for the
// linearization `lin` (base time s):
//   dy/dt = A y + a(t)
//   dP/dt = A P + P A^T + sum B P B^T + a y^T + y a^T
//           + sum (B y b^T + b y^T B^T + b b^T)
// with a(t) = a0 + a1 (t-s), b(t) = b0 + b1 (t-s).
struct MomentRates {
  Vector dy;
  Matrix dp;
};
MomentRates frozen_moment_rates(const LinearizationData& lin, double t,
                                const Vector& y, const Matrix& p);

// Throws DivergenceError when the state is non-finite or its variance has
// an eigenvalue below -(1e-8 |trace V| + 1e3 eps (1 + max|P|)).
void check_moments(const MomentState& s, const char* where);

// Order-beta LL prediction over a node sequence: relinearize at every node
// around the current predicted mean, then take one moment step.
// nodes.front() must equal state.t; nodes strictly increasing.
Prediction predict_fixed(const DiffusionModel& m, const MomentState& state,
                         const std::vector<double>& nodes, Order beta);

// Uniform nodes t0, t0+h, ... with the last node exactly t1 (the final
// interval is shortened when (t1-t0)/h is not an integer).
std::vector<double> uniform_nodes(double t0, double t1, double h);

}  // namespace llf
