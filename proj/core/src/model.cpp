#include "llfilter/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "llfilter/error.hpp"

namespace llf {

Order order_from_int(int beta) {
  if (beta == 1) return Order::kOne;
  if (beta == 2) return Order::kTwo;
  throw ConfigError("order must be 1 or 2, got " + std::to_string(beta));
}

ObservationModel make_observation_model(Matrix c, Matrix sigma,
                                        std::vector<double> times) {
  ObservationModel obs;
  obs.c = std::move(c);
  obs.sigma = [s = std::move(sigma)](double) { return s; };
  obs.times = std::move(times);
  return obs;
}

void validate_observation_model(const ObservationModel& obs, int state_dim) {
  if (obs.c.cols() != state_dim) {
    throw DimensionError("observation matrix has " +
                         std::to_string(obs.c.cols()) + " columns, state has " +
                         std::to_string(state_dim));
  }
  if (!obs.sigma) throw ConfigError("observation noise covariance not set");
  if (obs.times.empty()) throw ConfigError("no observation times");
  for (std::size_t k = 1; k < obs.times.size(); ++k) {
    if (!(obs.times[k] > obs.times[k - 1])) {
      throw ConfigError("observation times must be strictly increasing (index " +
                        std::to_string(k) + ")");
    }
  }
  const Eigen::Index r = obs.c.rows();
  for (double t : obs.times) {
    const Matrix s = obs.sigma(t);
    if (s.rows() != r || s.cols() != r) {
      throw DimensionError("Sigma must be " + std::to_string(r) + "x" +
                           std::to_string(r));
    }
    require_finite(s, "Sigma");
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ConfigError("Sigma is not symmetric at t=" + std::to_string(t));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
      throw ConfigError("Sigma is not positive semi-definite at t=" +
                        std::to_string(t));
    }
  }
}

// ---------------------------------------------------------------------------
// Nonlinear observation augmentation

AugmentedModel augment_nonlinear_observation(const DiffusionModel& m,
                                             const NonlinearObservation& obs) {
  if (!obs.h || !obs.h_jac || !obs.h_dt) {
    throw ConfigError("nonlinear observation needs h, dh/dx and dh/dt");
  }
  if (!obs.h_hess) {
    throw ConfigError(
        "nonlinear observation needs the Hessian of h for the Ito correction");
  }
  const int d = m.dim;
  const int r = obs.dim;
  const int nm = m.noise_dim;

  AugmentedModel out;
  DiffusionModel& a = out.model;
  a.dim = d + r;
  a.noise_dim = nm;

  auto rho = [m, obs, r](double t, const Vector& x) {
    const Vector f = m.drift(t, x);
    const Matrix g = m.diffusion(t, x);
    const Matrix ggt = g * g.transpose();
    const Matrix jh = obs.h_jac(t, x);
    const Hessians hh = obs.h_hess(t, x);
    Vector out = obs.h_dt(t, x) + jh * f;
    for (int j = 0; j < r; ++j) out(j) += 0.5 * (hh[j] * ggt).trace();
    return out;
  };

  a.drift = [m, rho, d, r](double t, const Vector& v) {
    const Vector x = v.head(d);
    Vector out(d + r);
    out << m.drift(t, x), rho(t, x);
    return out;
  };
  a.diffusion = [m, obs, d, r](double t, const Vector& v) {
    const Vector x = v.head(d);
    const Matrix g = m.diffusion(t, x);
    Matrix out(d + r, g.cols());
    out << g, obs.h_jac(t, x) * g;
    return out;
  };

  if (m.has_first_derivatives() && obs.has_third_order()) {
    a.drift_jac = [m, obs, d, r, nm](double t, const Vector& v) {
      const Vector x = v.head(d);
      const Vector f = m.drift(t, x);
      const Matrix jf = m.drift_jac(t, x);
      const Matrix g = m.diffusion(t, x);
      const std::vector<Matrix> jg = m.diffusion_jac(t, x);
      const Matrix ggt = g * g.transpose();
      const Matrix jh = obs.h_jac(t, x);
      const Hessians hh = obs.h_hess(t, x);
      const std::vector<Hessians> h3 = obs.h_third(t, x);
      const Matrix htx = obs.h_dt_jac(t, x);

      Matrix out = Matrix::Zero(d + r, d + r);
      out.topLeftCorner(d, d) = jf;
      for (int j = 0; j < r; ++j) {
        for (int col = 0; col < d; ++col) {
          Matrix dggt = Matrix::Zero(d, d);
          for (int s = 0; s < nm; ++s) {
            const Vector dg = jg[s].col(col);
            dggt += dg * g.col(s).transpose() + g.col(s) * dg.transpose();
          }
          double val = htx(j, col) + jh.row(j).dot(jf.col(col)) +
                       hh[j].col(col).dot(f);
          val += 0.5 * (hh[j] * dggt).trace() + 0.5 * (h3[j][col] * ggt).trace();
          out(d + j, col) = val;
        }
      }
      return out;
    };
    a.drift_dt = [m, obs, d, r](double t, const Vector& v) {
      const Vector x = v.head(d);
      const Vector f = m.drift(t, x);
      const Vector ft = m.drift_dt(t, x);
      const Matrix g = m.diffusion(t, x);
      const Matrix gt = m.diffusion_dt(t, x);
      const Matrix ggt = g * g.transpose();
      const Matrix dggt = gt * g.transpose() + g * gt.transpose();
      const Matrix jh = obs.h_jac(t, x);
      const Hessians hh = obs.h_hess(t, x);
      const Hessians hth = obs.h_dt_hess(t, x);
      const Matrix htx = obs.h_dt_jac(t, x);
      const Vector htt = obs.h_dt_dt(t, x);

      Vector out(d + r);
      out.head(d) = ft;
      for (int j = 0; j < r; ++j) {
        out(d + j) = htt(j) + jh.row(j).dot(ft) + htx.row(j).dot(f) +
                     0.5 * (hh[j] * dggt).trace() + 0.5 * (hth[j] * ggt).trace();
      }
      return out;
    };
    a.diffusion_jac = [m, obs, d, r, nm](double t, const Vector& v) {
      const Vector x = v.head(d);
      const Matrix g = m.diffusion(t, x);
      const std::vector<Matrix> jg = m.diffusion_jac(t, x);
      const Matrix jh = obs.h_jac(t, x);
      const Hessians hh = obs.h_hess(t, x);
      std::vector<Matrix> out;
      out.reserve(nm);
      for (int s = 0; s < nm; ++s) {
        Matrix js = Matrix::Zero(d + r, d + r);
        js.topLeftCorner(d, d) = jg[s];
        Matrix lower = jh * jg[s];
        for (int j = 0; j < r; ++j) {
          lower.row(j) += (hh[j] * g.col(s)).transpose();
        }
        js.bottomLeftCorner(r, d) = lower;
        out.push_back(std::move(js));
      }
      return out;
    };
    a.diffusion_dt = [m, obs, d, r](double t, const Vector& v) {
      const Vector x = v.head(d);
      const Matrix g = m.diffusion(t, x);
      const Matrix gt = m.diffusion_dt(t, x);
      Matrix out(d + r, g.cols());
      out << gt, obs.h_jac(t, x) * gt + obs.h_dt_jac(t, x) * g;
      return out;
    };
  }

  out.c = Matrix::Zero(r, d + r);
  out.c.rightCols(r) = Matrix::Identity(r, r);
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference validation

namespace {

double fd_step(double x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) *
         std::max(1.0, std::abs(x));
}

double relative_dev(const Matrix& analytic, const Matrix& fd) {
  if (analytic.size() == 0) return 0.0;
  return (analytic - fd).cwiseAbs().maxCoeff() /
         (1.0 + fd.cwiseAbs().maxCoeff());
}

void bump(std::optional<double>& slot, double dev) {
  slot = std::max(slot.value_or(0.0), dev);
}

// Central difference of a matrix-valued function of the state, one state
// direction at a time: result[a] = dF/dx^a.
template <typename F>
std::vector<Matrix> fd_state(F&& fn, double t, const Vector& x) {
  std::vector<Matrix> out;
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    const double h = fd_step(x(a));
    Vector xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    out.push_back((Matrix(fn(t, xp)) - Matrix(fn(t, xm))) / (2.0 * h));
  }
  return out;
}

template <typename F>
Matrix fd_time(F&& fn, double t, const Vector& x) {
  const double h = fd_step(t);
  return (Matrix(fn(t + h, x)) - Matrix(fn(t - h, x))) / (2.0 * h);
}

void check_shape(ValidationReport& rep, const Matrix& m, Eigen::Index rows,
                 Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    rep.dimensions_ok = false;
    std::ostringstream os;
    os << what << " has shape " << m.rows() << "x" << m.cols() << ", expected "
       << rows << "x" << cols;
    rep.problems.push_back(os.str());
  }
}

}  // namespace

double ValidationReport::max_deviation() const {
  double out = 0.0;
  for (const auto& s : {drift_jac_dev, drift_dt_dev, drift_hess_dev,
                        diffusion_jac_dev, diffusion_dt_dev,
                        diffusion_hess_dev}) {
    if (s) out = std::max(out, *s);
  }
  return out;
}

ValidationReport validate_model(
    const DiffusionModel& m,
    const std::vector<std::pair<double, Vector>>& probes) {
  if (probes.empty()) throw ConfigError("validate_model: no probe points");
  if (!m.drift || !m.diffusion) {
    throw ConfigError("validate_model: drift and diffusion are required");
  }
  ValidationReport rep;
  const int d = m.dim;
  const int nm = m.noise_dim;

  for (const auto& [t, x] : probes) {
    if (x.size() != d) {
      rep.dimensions_ok = false;
      rep.problems.push_back("probe state has wrong dimension");
      continue;
    }
    const Vector f = m.drift(t, x);
    const Matrix g = m.diffusion(t, x);
    check_shape(rep, f, d, 1, "drift");
    check_shape(rep, g, d, nm, "diffusion");
    if (!f.allFinite() || !g.allFinite()) {
      rep.problems.push_back("non-finite drift/diffusion at t=" +
                             std::to_string(t));
    }
    if (!rep.dimensions_ok) continue;

    if (m.drift_jac) {
      const Matrix jf = m.drift_jac(t, x);
      check_shape(rep, jf, d, d, "drift_jac");
      if (rep.dimensions_ok) {
        const auto fd = fd_state(m.drift, t, x);
        Matrix jfd(d, d);
        for (int a = 0; a < d; ++a) jfd.col(a) = fd[a];
        bump(rep.drift_jac_dev, relative_dev(jf, jfd));
      }
    }
    if (m.drift_dt) {
      const Vector ft = m.drift_dt(t, x);
      check_shape(rep, ft, d, 1, "drift_dt");
      if (rep.dimensions_ok) {
        bump(rep.drift_dt_dev, relative_dev(ft, fd_time(m.drift, t, x)));
      }
    }
    if (m.drift_hess && m.drift_jac) {
      const Hessians hf = m.drift_hess(t, x);
      if (static_cast<int>(hf.size()) != d) {
        rep.dimensions_ok = false;
        rep.problems.push_back("drift_hess must hold one Hessian per component");
      } else {
        // d/dx^a of the Jacobian gives column a of each component Hessian.
        const auto fd = fd_state(m.drift_jac, t, x);
        for (int k = 0; k < d; ++k) {
          check_shape(rep, hf[k], d, d, "drift_hess component");
          if (!rep.dimensions_ok) break;
          Matrix hfd(d, d);
          for (int a = 0; a < d; ++a) hfd.col(a) = fd[a].row(k).transpose();
          bump(rep.drift_hess_dev, relative_dev(hf[k], hfd));
        }
      }
    }
    if (m.diffusion_jac) {
      const std::vector<Matrix> jg = m.diffusion_jac(t, x);
      if (static_cast<int>(jg.size()) != nm) {
        rep.dimensions_ok = false;
        rep.problems.push_back("diffusion_jac must hold one matrix per noise");
      } else {
        const auto fd = fd_state(m.diffusion, t, x);
        for (int s = 0; s < nm; ++s) {
          check_shape(rep, jg[s], d, d, "diffusion_jac entry");
          if (!rep.dimensions_ok) break;
          Matrix jfd(d, d);
          for (int a = 0; a < d; ++a) jfd.col(a) = fd[a].col(s);
          bump(rep.diffusion_jac_dev, relative_dev(jg[s], jfd));
        }
      }
    }
    if (m.diffusion_dt) {
      const Matrix gt = m.diffusion_dt(t, x);
      check_shape(rep, gt, d, nm, "diffusion_dt");
      if (rep.dimensions_ok) {
        bump(rep.diffusion_dt_dev,
             relative_dev(gt, fd_time(m.diffusion, t, x)));
      }
    }
    if (m.diffusion_hess && m.diffusion_jac) {
      const std::vector<Hessians> hg = m.diffusion_hess(t, x);
      if (static_cast<int>(hg.size()) != nm) {
        rep.dimensions_ok = false;
        rep.problems.push_back("diffusion_hess must hold one entry per noise");
      } else {
        std::vector<std::vector<Matrix>> fd;  // fd[a][s]
        for (int a = 0; a < d; ++a) {
          const double h = fd_step(x(a));
          Vector xp = x, xm = x;
          xp(a) += h;
          xm(a) -= h;
          const auto jp = m.diffusion_jac(t, xp);
          const auto jm = m.diffusion_jac(t, xm);
          std::vector<Matrix> col;
          for (int s = 0; s < nm; ++s) col.push_back((jp[s] - jm[s]) / (2 * h));
          fd.push_back(std::move(col));
        }
        for (int s = 0; s < nm && rep.dimensions_ok; ++s) {
          if (static_cast<int>(hg[s].size()) != d) {
            rep.dimensions_ok = false;
            rep.problems.push_back("diffusion_hess entry has wrong length");
            break;
          }
          for (int k = 0; k < d; ++k) {
            Matrix hfd(d, d);
            for (int a = 0; a < d; ++a) hfd.col(a) = fd[a][s].row(k).transpose();
            bump(rep.diffusion_hess_dev, relative_dev(hg[s][k], hfd));
          }
        }
      }
    }
  }

  auto flag = [&rep](const std::optional<double>& dev, const char* name) {
    if (dev && *dev > kDerivativeFlagThreshold) {
      std::ostringstream os;
      os << name << " deviates from finite differences by " << *dev;
      rep.problems.push_back(os.str());
    }
  };
  flag(rep.drift_jac_dev, "drift_jac");
  flag(rep.drift_dt_dev, "drift_dt");
  flag(rep.drift_hess_dev, "drift_hess");
  flag(rep.diffusion_jac_dev, "diffusion_jac");
  flag(rep.diffusion_dt_dev, "diffusion_dt");
  flag(rep.diffusion_hess_dev, "diffusion_hess");
  return rep;
}

}  // namespace llf
