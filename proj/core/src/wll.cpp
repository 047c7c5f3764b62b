#include "llfilter/wll.hpp"

#include <string>

#include "llfilter/error.hpp"

namespace llf {

namespace {

void require_finite_output(const Matrix& m, const char* what, double s) {
  if (!m.allFinite()) {
    throw DivergenceError(std::string("linearize: non-finite ") + what +
                          " at t=" + std::to_string(s));
  }
}

}  // namespace

LinearizationData linearize(const DiffusionModel& m, double s,
                            const Vector& y_base, Order beta) {
  if (!m.has_first_derivatives()) {
    throw ConfigError("linearize: model lacks Jacobian/time-derivative bundle");
  }
  if (beta == Order::kTwo && !m.has_hessians()) {
    throw ConfigError("linearize: order 2 requires drift and diffusion Hessians");
  }
  const int d = m.dim;
  const int nm = m.noise_dim;
  if (y_base.size() != d) {
    throw DimensionError("linearize: base point has dimension " +
                         std::to_string(y_base.size()) + ", model has " +
                         std::to_string(d));
  }

  LinearizationData lin;
  lin.base_time = s;
  lin.beta = beta;

  const Vector f = m.drift(s, y_base);
  const Matrix g = m.diffusion(s, y_base);
  lin.a = m.drift_jac(s, y_base);
  lin.b = m.diffusion_jac(s, y_base);
  const Vector ft = m.drift_dt(s, y_base);
  const Matrix gt = m.diffusion_dt(s, y_base);

  require_finite_output(f, "drift", s);
  require_finite_output(g, "diffusion", s);
  require_finite_output(lin.a, "drift Jacobian", s);
  require_finite_output(ft, "drift time derivative", s);
  require_finite_output(gt, "diffusion time derivative", s);
  if (static_cast<int>(lin.b.size()) != nm || g.cols() != nm) {
    throw DimensionError("linearize: diffusion bundle does not match noise_dim");
  }
  for (const auto& bi : lin.b) require_finite_output(bi, "diffusion Jacobian", s);

  lin.a0 = f - lin.a * y_base;
  lin.a1 = ft;
  lin.b0.resize(d, nm);
  lin.b1 = gt;
  for (int i = 0; i < nm; ++i) {
    lin.b0.col(i) = g.col(i) - lin.b[i] * y_base;
  }

  if (beta == Order::kTwo) {
    const Matrix ggt = g * g.transpose();
    const Hessians hf = m.drift_hess(s, y_base);
    const std::vector<Hessians> hg = m.diffusion_hess(s, y_base);
    // 1/2 sum_{j,l} [G G^T]^{j,l} d2F/dy^j dy^l, componentwise.
    for (int k = 0; k < d; ++k) {
      lin.a1(k) += 0.5 * hf[k].cwiseProduct(ggt).sum();
      for (int i = 0; i < nm; ++i) {
        lin.b1(k, i) += 0.5 * hg[i][k].cwiseProduct(ggt).sum();
      }
    }
    require_finite_output(lin.a1, "second-order drift correction", s);
    require_finite_output(lin.b1, "second-order diffusion correction", s);
  }
  return lin;
}

}  // namespace llf
