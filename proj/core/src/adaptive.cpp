#include "llfilter/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "llfilter/error.hpp"

namespace llf {

void AdaptiveConfig::validate() const {
  if (!(rtol_y > 0 && atol_y > 0 && rtol_p > 0 && atol_p > 0)) {
    throw ConfigError("adaptive tolerances must be positive");
  }
  if (!(prs > 0)) throw ConfigError("prs must be positive");
  if (!(h_min > 0)) throw ConfigError("h_min must be positive");
  if (h_max && !(*h_max >= h_min)) {
    throw ConfigError("h_max must be at least h_min");
  }
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
}

namespace {

// sqrt(mean((v_i / sc_i)^2)) with sc_i = atol + rtol * |ref_i|.
double scaled_norm(const Vector& v, const Vector& ref, double atol,
                   double rtol) {
  const Vector sc = (atol + rtol * ref.array().abs()).matrix();
  return std::sqrt((v.array() / sc.array()).square().mean());
}

double order_exponent(Order beta) { return 1.0 / (to_int(beta) + 1.0); }

}  // namespace

double initial_delta1(double d0, double d1, double atol) {
  if (d0 < 10.0 * atol || d1 < 10.0 * atol) return atol;
  return 0.01 * d0 / d1;
}

double initial_delta2(double d1, double d2, double delta1, double atol,
                      double rtol, double prs, Order beta) {
  const double dmax = std::max(d1, d2);
  if (dmax <= prs) return std::max(atol, delta1 * rtol);
  return std::pow(0.01 / dmax, order_exponent(beta));
}

double initial_stepsize(const DiffusionModel& m, const MomentState& state,
                        const AdaptiveConfig& cfg, double t0, double t1,
                        Order beta) {
  if (!(t1 > t0)) throw ConfigError("initial_stepsize: need t1 > t0");
  const LinearizationData lin = linearize(m, t0, state.y, beta);
  const MomentRates f0 = frozen_moment_rates(lin, t0, state.y, state.p);
  if (!f0.dy.allFinite() || !f0.dp.allFinite()) {
    throw DivergenceError("initial_stepsize: non-finite moment vector field");
  }

  // Second time derivative along the flow by a forward difference of F.
  const Vector p0 = vec(state.p);
  const double v0_norm = std::sqrt(state.y.squaredNorm() + p0.squaredNorm());
  const double eps = std::sqrt(cfg.prs) * (1.0 + v0_norm);
  const MomentRates f1 = frozen_moment_rates(
      lin, t0 + eps, state.y + eps * f0.dy, state.p + eps * f0.dp);
  const Vector ddy = (f1.dy - f0.dy) / eps;
  const Vector ddp = vec(Matrix((f1.dp - f0.dp) / eps));
  if (!ddy.allFinite() || !ddp.allFinite()) {
    throw DivergenceError("initial_stepsize: non-finite second derivative");
  }

  auto delta = [&](const Vector& v0, const Vector& dv, const Vector& ddv,
                   double atol, double rtol) {
    const double d0 = scaled_norm(v0, v0, atol, rtol);
    const double d1 = scaled_norm(dv, v0, atol, rtol);
    const double d2 = scaled_norm(ddv, v0, atol, rtol);
    const double delta1 = initial_delta1(d0, d1, atol);
    const double delta2 =
        initial_delta2(d1, d2, delta1, atol, rtol, cfg.prs, beta);
    return std::min(100.0 * delta1, delta2);
  };

  const double dy = delta(state.y, f0.dy, ddy, cfg.atol_y, cfg.rtol_y);
  const double dp = delta(p0, vec(f0.dp), ddp, cfg.atol_p, cfg.rtol_p);
  return std::max(cfg.h_min, std::min({dy, dp, t1 - t0}));
}

DoubleStep double_step(const DiffusionModel& m, const LinearizationData& lin,
                       const MomentState& state, double h) {
  if (!(h > 0.0)) throw ConfigError("double_step: h must be positive");
  const AugmentedSystem sys = build_augmented(lin, state);
  const Matrix phi = expm(h * sys.m);

  const MomentState mid = apply_flow(sys, phi, state, h);
  DoubleStep out;
  if (mid.y.allFinite() && mid.p.allFinite()) {
    const LinearizationData lin_mid = linearize(m, mid.t, mid.y, lin.beta);
    out.fine = moment_step(lin_mid, mid, h);
  } else {
    out.fine = mid;
  }
  out.coarse = apply_flow(sys, phi * phi, state, 2.0 * h);
  out.fine.t = state.t + 2.0 * h;
  out.coarse.t = out.fine.t;
  return out;
}

std::pair<double, double> step_errors(const MomentState& fine,
                                      const MomentState& coarse,
                                      const MomentState& prev,
                                      const AdaptiveConfig& cfg) {
  const Eigen::Index d = fine.y.size();
  if (coarse.y.size() != d || prev.y.size() != d) {
    throw DimensionError("step_errors: moment dimensions differ");
  }
  const Vector yref = prev.y.cwiseAbs().cwiseMax(fine.y.cwiseAbs());
  const Vector pf = vec(fine.p);
  const Vector pref = vec(prev.p).cwiseAbs().cwiseMax(pf.cwiseAbs());
  const double e1 =
      scaled_norm(fine.y - coarse.y, yref, cfg.atol_y, cfg.rtol_y);
  const double e2 = scaled_norm(pf - vec(coarse.p), pref, cfg.atol_p,
                                cfg.rtol_p);
  return {e1, e2};
}

double propose_stepsize(double e1, double e2, double h,
                        const AdaptiveConfig& cfg, Order beta) {
  const double ex = order_exponent(beta);
  auto delta_new = [&](double e) {
    if (std::isnan(e)) e = std::numeric_limits<double>::infinity();
    if (e <= 1.0) {
      if (e == 0.0) return 5.0 * h;
      return h * std::min(5.0, std::max(0.25, 0.8 * std::pow(1.0 / e, ex)));
    }
    return h * std::min(1.0, std::max(0.1, 0.2 * std::pow(1.0 / e, ex)));
  };
  return std::max(cfg.h_min, std::min(delta_new(e1), delta_new(e2)));
}

AdaptivePrediction adaptive_predict(const DiffusionModel& m,
                                    const MomentState& state, double t_k1,
                                    const AdaptiveConfig& cfg, Order beta,
                                    std::optional<double> h_carry) {
  cfg.validate();
  const double t_k = state.t;
  if (!(t_k1 > t_k)) throw ConfigError("adaptive_predict: need t_k1 > t_k");
  const double h_max = cfg.h_max.value_or((t_k1 - t_k) / 2.0);
  const double land_tol = 4.0 * cfg.prs * std::abs(t_k1);

  AdaptivePrediction out;
  double h = h_carry ? *h_carry
                     : initial_stepsize(m, state, cfg, t_k, t_k1, beta);
  out.h_next = h;
  MomentState cur = state;
  long iterations = 0;

  for (;;) {
    if (++iterations > cfg.max_steps) {
      std::ostringstream os;
      os << "adaptive_predict: step budget of " << cfg.max_steps
         << " exhausted at t=" << cur.t << " before reaching " << t_k1;
      throw DivergenceError(os.str());
    }
    h = std::min(std::max(h, cfg.h_min), h_max);
    bool last = false;
    if (cur.t + 2.0 * h >= t_k1 - land_tol) {
      h = (t_k1 - cur.t) / 2.0;
      last = true;
    }

    const LinearizationData lin = linearize(m, cur.t, cur.y, beta);
    const DoubleStep ds = double_step(m, lin, cur, h);
    double e1 = std::numeric_limits<double>::infinity();
    double e2 = e1;
    if (ds.fine.y.allFinite() && ds.fine.p.allFinite() &&
        ds.coarse.y.allFinite() && ds.coarse.p.allFinite()) {
      std::tie(e1, e2) = step_errors(ds.fine, ds.coarse, cur, cfg);
    }
    const double h_new = propose_stepsize(e1, e2, h, cfg, beta);
    const bool accepted = std::max(e1, e2) <= 1.0 || h <= cfg.h_min;
    out.records.push_back({cur.t, h, e1, e2, accepted});

    if (!accepted) {
      ++out.failed;
      h = h_new;
      continue;
    }
    ++out.accepted;
    cur = ds.fine;
    if (last) cur.t = t_k1;
    std::ostringstream where;
    where << "adaptive_predict step " << out.accepted;
    check_moments(cur, where.str().c_str());
    out.h_next = h_new;
    if (last) break;
    h = h_new;
  }
  out.pred = {cur, cur.variance()};
  return out;
}

FilterRun run_adaptive_filter(const DiffusionModel& m,
                              const ObservationModel& obs,
                              const ObservationSeries& data,
                              const FilterInit& init,
                              const AdaptiveConfig& cfg, Order beta) {
  cfg.validate();
  std::optional<double> carry;
  auto predict = [&](const MomentState& s, int k) {
    AdaptivePrediction ap =
        adaptive_predict(m, s, obs.times[k + 1], cfg, beta, carry);
    carry = ap.h_next;
    return IntervalPrediction{ap.pred, ap.accepted, ap.failed};
  };
  return run_filter_loop(predict, obs, data, init);
}

}  // namespace llf
