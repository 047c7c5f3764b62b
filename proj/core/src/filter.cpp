#include "llfilter/filter.hpp"

#include <cmath>
#include <ostream>

#include "llfilter/error.hpp"
#include "llfilter/io.hpp"

namespace llf {

UpdateResult update(const Prediction& pred, const Vector& z,
                    const ObservationModel& obs, double t) {
  const Matrix& c = obs.c;
  if (z.size() != c.rows()) {
    throw DimensionError("update: observation has length " +
                         std::to_string(z.size()) + ", C has " +
                         std::to_string(c.rows()) + " rows");
  }
  UpdateResult out;
  out.gain = solve_gain(pred.v, c, obs.sigma_at(t));
  out.innovation = z - c * pred.state.y;
  const Vector y = pred.state.y + out.gain * out.innovation;
  out.v = symmetrize(pred.v - out.gain * c * pred.v);
  out.state = MomentState::from_mean_variance(t, y, out.v);
  return out;
}

FilterRun run_filter_loop(
    const std::function<IntervalPrediction(const MomentState&, int)>& predict,
    const ObservationModel& obs, const ObservationSeries& data,
    const FilterInit& init) {
  const std::size_t m = obs.times.size();
  if (data.size() != m) {
    throw DimensionError("observation series has " +
                         std::to_string(data.size()) + " values, schedule has " +
                         std::to_string(m));
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (data.times[k] != obs.times[k]) {
      throw ConfigError("observation series times differ from the schedule");
    }
  }
  validate_observation_model(obs, static_cast<int>(init.x0.size()));

  FilterRun run;
  MomentState state{obs.times.front(), init.x0, init.q0};
  if (init.update_at_t0) {
    Prediction p0{state, state.variance()};
    run.initial_update = update(p0, data.values.front(), obs, state.t);
    state = run.initial_update->state;
  }
  for (std::size_t k = 0; k + 1 < m; ++k) {
    IntervalPrediction ip = predict(state, static_cast<int>(k));
    ip.pred.state.t = obs.times[k + 1];
    UpdateResult up = update(ip.pred, data.values[k + 1], obs, obs.times[k + 1]);

    FilterStep step;
    step.k = static_cast<int>(k);
    step.t = obs.times[k + 1];
    step.y_pred = ip.pred.state.y;
    step.v_pred = ip.pred.v;
    step.y_filt = up.state.y;
    step.v_filt = up.v;
    step.gain = up.gain;
    step.innovation = up.innovation;
    step.accepted_steps = ip.accepted;
    step.failed_steps = ip.failed;
    run.steps.push_back(std::move(step));
    state = up.state;
  }
  return run;
}

FilterRun run_ll_filter(const DiffusionModel& m, const ObservationModel& obs,
                        const ObservationSeries& data, const FilterInit& init,
                        const GridSpec& grid, Order beta) {
  if (grid.kind == GridSpec::Kind::kUniform && !(grid.h > 0.0)) {
    throw ConfigError("uniform grid needs h > 0");
  }
  auto predict = [&](const MomentState& s, int k) {
    const double t0 = obs.times[k];
    const double t1 = obs.times[k + 1];
    std::vector<double> nodes =
        grid.kind == GridSpec::Kind::kConventional
            ? std::vector<double>{t0, t1}
            : uniform_nodes(t0, t1, grid.h);
    IntervalPrediction ip{predict_fixed(m, s, nodes, beta), 0, 0};
    ip.accepted = static_cast<long>(nodes.size()) - 1;
    return ip;
  };
  return run_filter_loop(predict, obs, data, init);
}

FilterRun run_exact_lmv_filter(const ExactPredictor& predict,
                               const ObservationModel& obs,
                               const ObservationSeries& data,
                               const FilterInit& init) {
  auto step = [&](const MomentState& s, int k) {
    MomentState next = predict(s, obs.times[k + 1]);
    next.t = obs.times[k + 1];
    return IntervalPrediction{{next, next.variance()}, 0, 0};
  };
  return run_filter_loop(step, obs, data, init);
}

std::pair<double, double> exact_predict_example1(double x, double q,
                                                 double t_k, double t_k1,
                                                 double a, double sigma) {
  const double dt2 = t_k1 * t_k1 - t_k * t_k;
  return {x * std::exp(a * dt2 / 2.0),
          q * std::exp((a + sigma * sigma / 2.0) * dt2)};
}

std::pair<double, double> exact_predict_example2(double x, double q,
                                                 double t_k, double t_k1,
                                                 double a, double p,
                                                 double sigma1, double sigma2) {
  if (a == 0.0) {
    throw ConfigError("exact_predict_example2: a = 0 is a pole of the formula");
  }
  const double dt2 = t_k1 * t_k1 - t_k * t_k;
  const double c2 = sigma2 * sigma2 / (2.0 * a);
  const double x_pred = x * std::exp(a * dt2 / 2.0);
  const double q_pred =
      (q + c2) * std::exp(a * dt2) +
      sigma1 * sigma1 / (2.0 * p + 1.0) *
          (std::pow(t_k1, 2.0 * p + 1.0) - std::pow(t_k, 2.0 * p + 1.0)) *
          std::exp(a * t_k1 * t_k1) -
      c2;
  return {x_pred, q_pred};
}

void write_filter_run_csv(std::ostream& os, const FilterRun& run) {
  CsvWriter csv(os);
  if (run.steps.empty()) {
    csv.row({"k", "t", "accepted_steps", "failed_steps"});
    return;
  }
  const auto& s0 = run.steps.front();
  const Eigen::Index d = s0.y_pred.size();
  const Eigen::Index r = s0.gain.cols();
  std::vector<std::string> header{"k", "t"};
  auto vec_cols = [&](const std::string& name) {
    for (Eigen::Index i = 0; i < d; ++i) header.push_back(name + "_" + std::to_string(i));
  };
  auto mat_cols = [&](const std::string& name, Eigen::Index rows,
                      Eigen::Index cols) {
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        header.push_back(name + "_" + std::to_string(i) + "_" + std::to_string(j));
  };
  vec_cols("y_pred");
  mat_cols("V_pred", d, d);
  vec_cols("y_filt");
  mat_cols("V_filt", d, d);
  mat_cols("K", d, r);
  header.push_back("accepted_steps");
  header.push_back("failed_steps");
  csv.row(header);

  for (const auto& s : run.steps) {
    std::vector<std::string> row{std::to_string(s.k), format_double(s.t)};
    auto put = [&row](const Matrix& m) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          row.push_back(format_double(m(i, j)));
    };
    put(s.y_pred);
    put(s.v_pred);
    put(s.y_filt);
    put(s.v_filt);
    put(s.gain);
    row.push_back(std::to_string(s.accepted_steps));
    row.push_back(std::to_string(s.failed_steps));
    csv.row(row);
  }
}

}  // namespace llf
