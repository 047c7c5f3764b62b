#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "llfilter/linalg.hpp"
#include "llfilter/model.hpp"
#include "llfilter/moments.hpp"

namespace llf {

// Observed values z_k at the observation model's times.
struct ObservationSeries {
  std::vector<double> times;
  std::vector<Vector> values;

  std::size_t size() const { return times.size(); }
};

// Initial filter values y_{t0/t0} = x0, P_{t0/t0} = Q0 (second moment).
// An observation at t0 is used only when update_at_t0 is set.
struct FilterInit {
  Vector x0;
  Matrix q0;
  bool update_at_t0 = false;
};

struct UpdateResult {
  MomentState state;
  Matrix v;
  Matrix gain;
  Vector innovation;
};

// y+ = y + K (z - C y), V+ = V - K C V (symmetrized), P+ = V+ + y+ y+^T.
UpdateResult update(const Prediction& pred, const Vector& z,
                    const ObservationModel& obs, double t);

// One record per observation t_{k+1}, k = 0..M-2.
struct FilterStep {
  int k = 0;
  double t = 0.0;
  Vector y_pred;
  Matrix v_pred;
  Vector y_filt;
  Matrix v_filt;
  Matrix gain;
  Vector innovation;
  long accepted_steps = 0;
  long failed_steps = 0;
};

struct FilterRun {
  std::vector<FilterStep> steps;
  std::optional<UpdateResult> initial_update;
};

// Writes columns k, t, y_pred_*, V_pred_*_*, y_filt_*, V_filt_*_*, K_*_*,
// accepted_steps, failed_steps. Matrix entries are indexed (row, col) and
// listed in column-major order. Values use 17 significant digits.
void write_filter_run_csv(std::ostream& os, const FilterRun& run);

struct GridSpec {
  enum class Kind { kConventional, kUniform };
  Kind kind = Kind::kConventional;
  double h = 0.0;

  static GridSpec conventional() { return {Kind::kConventional, 0.0}; }
  static GridSpec uniform(double h) { return {Kind::kUniform, h}; }
};

// Order-beta LL filter on a fixed grid. The conventional grid uses the
// observation times as the only nodes.
FilterRun run_ll_filter(const DiffusionModel& m, const ObservationModel& obs,
                        const ObservationSeries& data, const FilterInit& init,
                        const GridSpec& grid, Order beta);

// Closed-form moment prediction from (state at t_k) to t_{k+1}.
using ExactPredictor =
    std::function<MomentState(const MomentState&, double t_next)>;

// LMV filter driven by an exact moment predictor and the shared update.
FilterRun run_exact_lmv_filter(const ExactPredictor& predict,
                               const ObservationModel& obs,
                               const ObservationSeries& data,
                               const FilterInit& init);

// Exact moments of dx = a t x dt + sigma sqrt(t) x dw.
std::pair<double, double> exact_predict_example1(double x, double q,
                                                 double t_k, double t_k1,
                                                 double a, double sigma);

// Exact moments of dx = a t x dt + sigma1 t^p e^{a t^2/2} dw1
// + sigma2 sqrt(t) dw2. Throws ConfigError for a = 0.
std::pair<double, double> exact_predict_example2(double x, double q,
                                                 double t_k, double t_k1,
                                                 double a, double p,
                                                 double sigma1, double sigma2);

// Shared driver: predict over each observation interval, then update.
// `predict(state, k)` must return the prediction at obs.times[k+1] plus
// accepted/failed step counts.
struct IntervalPrediction {
  Prediction pred;
  long accepted = 0;
  long failed = 0;
};
FilterRun run_filter_loop(
    const std::function<IntervalPrediction(const MomentState&, int)>& predict,
    const ObservationModel& obs, const ObservationSeries& data,
    const FilterInit& init);

}  // namespace llf
