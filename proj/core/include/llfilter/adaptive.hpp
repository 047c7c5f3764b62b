#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "llfilter/filter.hpp"
#include "llfilter/model.hpp"
#include "llfilter/moments.hpp"
#include "llfilter/wll.hpp"

namespace llf {

// Tolerances and bounds of the step-doubling controller. h_max unset means
// half of each observation interval.
struct AdaptiveConfig {
  double rtol_y = 1e-6;
  double atol_y = 1e-6;
  double rtol_p = 1e-6;
  double atol_p = 1e-9;
  double h_min = 1e-8;
  std::optional<double> h_max;
  double prs = 2.2e-16;
  long max_steps = 1'000'000;

  // Throws ConfigError unless tolerances, prs and 0 < h_min <= h_max hold.
  void validate() const;
};

struct StepRecord {
  double tau = 0.0;  // start of the double step
  double h = 0.0;    // half step
  double e1 = 0.0;
  double e2 = 0.0;
  bool accepted = false;
};

// Initial stepsize h1 for the first observation interval [t0, t1].
double initial_stepsize(const DiffusionModel& m, const MomentState& state,
                        const AdaptiveConfig& cfg, double t0, double t1,
                        Order beta);

// Building blocks of initial_stepsize, exposed for testing.
double initial_delta1(double d0, double d1, double atol);
double initial_delta2(double d1, double d2, double delta1, double atol,
                      double rtol, double prs, Order beta);

struct DoubleStep {
  MomentState fine;    // two steps of size h, relinearized at tau + h
  MomentState coarse;  // one step of size 2h with the tau linearization
};

// `lin` must be the linearization at state.t around state.y. The coarse
// estimate reuses exp(h M)^2.
DoubleStep double_step(const DiffusionModel& m, const LinearizationData& lin,
                       const MomentState& state, double h);

// Scaled RMS differences between fine and coarse estimates for the mean
// (E1) and vec(P) (E2), scales taken from max(|prev|, |fine|).
std::pair<double, double> step_errors(const MomentState& fine,
                                      const MomentState& coarse,
                                      const MomentState& prev,
                                      const AdaptiveConfig& cfg);

// Next half-step from the error norms (safety factors 0.8/0.25/5 on
// acceptance, 0.2/0.1/1 on rejection).
double propose_stepsize(double e1, double e2, double h,
                        const AdaptiveConfig& cfg, Order beta);

struct AdaptivePrediction {
  Prediction pred;
  std::vector<StepRecord> records;
  double h_next = 0.0;
  long accepted = 0;
  long failed = 0;
};

// Adaptive prediction from state (at t_k) to t_k1. Without h_carry the
// initial stepsize estimate seeds the first step.
AdaptivePrediction adaptive_predict(const DiffusionModel& m,
                                    const MomentState& state, double t_k1,
                                    const AdaptiveConfig& cfg, Order beta,
                                    std::optional<double> h_carry);

// Adaptive LL filter: adaptive prediction and update at each observation,
// with the stepsize carried across intervals.
FilterRun run_adaptive_filter(const DiffusionModel& m,
                              const ObservationModel& obs,
                              const ObservationSeries& data,
                              const FilterInit& init,
                              const AdaptiveConfig& cfg, Order beta);

}  // namespace llf
