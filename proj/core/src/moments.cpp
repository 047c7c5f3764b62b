#include "llfilter/moments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "llfilter/error.hpp"

namespace llf {

AugmentedSystem build_augmented(const LinearizationData& lin,
                                const MomentState& state) {
  const int d = lin.dim();
  const int nm = lin.noise_dim();
  if (state.dim() != d || state.p.rows() != d || state.p.cols() != d) {
    throw DimensionError("build_augmented: moment state does not match d=" +
                         std::to_string(d));
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(state.t));
  if (std::abs(lin.base_time - state.t) > tol) {
    throw ConfigError("build_augmented: linearization base time differs from "
                      "the moment state time");
  }

  const int d2 = d * d;
  const Matrix eye = Matrix::Identity(d, d);
  const Vector& y = state.y;

  Matrix big_a = kron_sum(lin.a, lin.a);
  Matrix beta1 = Matrix::Zero(d, d);
  Matrix beta2 = Matrix::Zero(d, d);
  Matrix beta3 = Matrix::Zero(d, d);
  Matrix beta4 = vector_kron_sum(lin.a0);
  Matrix beta5 = vector_kron_sum(lin.a1);
  for (int i = 0; i < nm; ++i) {
    const Matrix& bi = lin.b[i];
    const Vector b0 = lin.b0.col(i);
    const Vector b1 = lin.b1.col(i);
    big_a += kron(bi, bi);
    beta1 += b0 * b0.transpose();
    beta2 += b0 * b1.transpose() + b1 * b0.transpose();
    beta3 += b1 * b1.transpose();
    beta4 += kron(b0, bi) + kron(bi, b0);
    beta5 += kron(b1, bi) + kron(bi, b1);
  }

  // L = [I_d 0_{d x 2}] picks the state part of w2/w3.
  Matrix ell = Matrix::Zero(d, d + 2);
  ell.leftCols(d) = eye;

  Matrix cm = Matrix::Zero(d + 2, d + 2);
  cm.topLeftCorner(d, d) = lin.a;
  cm.block(0, d, d, 1) = lin.a1;
  cm.block(0, d + 1, d, 1) = lin.a * y + lin.a0;
  cm(d, d + 1) = 1.0;

  AugmentedSystem sys;
  sys.d = d;
  const Eigen::Index n = augmented_size(d);
  const Eigen::Index o2 = sys.w2_offset();
  const Eigen::Index o3 = sys.w3_offset();
  const Eigen::Index os = sys.scalar_offset();
  sys.m = Matrix::Zero(n, n);
  sys.m.topLeftCorner(d2, d2) = big_a;
  sys.m.block(0, o2, d2, d + 2) = beta5 * ell;
  sys.m.block(0, o3, d2, d + 2) = beta4 * ell;
  sys.m.block(0, os, d2, 1) = vec(beta3);
  sys.m.block(0, os + 1, d2, 1) = vec(beta2) + beta5 * y;
  sys.m.block(0, os + 2, d2, 1) = vec(beta1) + beta4 * y;
  sys.m.block(o2, o2, d + 2, d + 2) = cm;
  sys.m.block(o2, o3, d + 2, d + 2) = Matrix::Identity(d + 2, d + 2);
  sys.m.block(o3, o3, d + 2, d + 2) = cm;
  sys.m(os, os + 1) = 2.0;
  sys.m(os + 1, os + 2) = 1.0;

  sys.u = Vector::Zero(n);
  sys.u.head(d2) = vec(state.p);
  sys.u(o3 + d + 1) = 1.0;
  sys.u(os + 2) = 1.0;
  return sys;
}

MomentState apply_flow(const AugmentedSystem& sys, const Matrix& phi,
                       const MomentState& state, double h) {
  const int d = sys.d;
  const Vector v = phi * sys.u;
  MomentState out;
  out.t = state.t + h;
  out.y = state.y + v.segment(sys.w3_offset(), d);
  out.p = symmetrize(unvec(v.head(d * d), d));
  return out;
}

MomentState moment_step(const LinearizationData& lin, const MomentState& state,
                        double h) {
  if (!(h > 0.0)) {
    throw ConfigError("moment_step: step size must be positive");
  }
  const AugmentedSystem sys = build_augmented(lin, state);
  return apply_flow(sys, expm(h * sys.m), state, h);
}

MomentRates frozen_moment_rates(const LinearizationData& lin, double t,
                                const Vector& y, const Matrix& p) {
  const double s = t - lin.base_time;
  const Vector a = lin.a0 + s * lin.a1;
  MomentRates r;
  r.dy = lin.a * y + a;
  r.dp = lin.a * p + p * lin.a.transpose() + a * y.transpose() +
         y * a.transpose();
  for (int i = 0; i < lin.noise_dim(); ++i) {
    const Matrix& bi = lin.b[i];
    const Vector b = lin.b0.col(i) + s * lin.b1.col(i);
    const Vector by = bi * y;
    r.dp += bi * p * bi.transpose() + by * b.transpose() +
            b * by.transpose() + b * b.transpose();
  }
  return r;
}

void check_moments(const MomentState& s, const char* where) {
  if (!s.y.allFinite() || !s.p.allFinite()) {
    std::ostringstream os;
    os << where << ": non-finite moments at t=" << s.t;
    throw DivergenceError(os.str());
  }
  const Matrix v = s.variance();
  const double tol = 1e-8 * std::abs(v.trace()) +
                     1e3 * std::numeric_limits<double>::epsilon() *
                         (1.0 + s.p.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> es(v, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -tol) {
    std::ostringstream os;
    os << where << ": variance lost positive semi-definiteness at t=" << s.t
       << " (min eigenvalue " << min_eig << ")";
    throw DivergenceError(os.str());
  }
}

Prediction predict_fixed(const DiffusionModel& m, const MomentState& state,
                         const std::vector<double>& nodes, Order beta) {
  if (nodes.size() < 2) {
    throw ConfigError("predict_fixed: need at least two nodes");
  }
  if (nodes.front() != state.t) {
    throw ConfigError("predict_fixed: first node must equal the state time");
  }
  MomentState cur = state;
  for (std::size_t n = 0; n + 1 < nodes.size(); ++n) {
    const double h = nodes[n + 1] - nodes[n];
    if (!(h > 0.0)) {
      throw ConfigError("predict_fixed: nodes must be strictly increasing");
    }
    const LinearizationData lin = linearize(m, cur.t, cur.y, beta);
    cur = moment_step(lin, cur, h);
    cur.t = nodes[n + 1];
    std::ostringstream where;
    where << "predict_fixed node " << n + 1;
    check_moments(cur, where.str().c_str());
  }
  return {cur, cur.variance()};
}

std::vector<double> uniform_nodes(double t0, double t1, double h) {
  if (!(t1 > t0) || !(h > 0.0)) {
    throw ConfigError("uniform_nodes: need t1 > t0 and h > 0");
  }
  std::vector<double> nodes{t0};
  // Treat a remainder below 1e-9 h as landing on t1.
  for (long n = 1;; ++n) {
    const double tn = t0 + static_cast<double>(n) * h;
    if (tn >= t1 - 1e-9 * h) break;
    nodes.push_back(tn);
  }
  nodes.push_back(t1);
  return nodes;
}

}  // namespace llf
