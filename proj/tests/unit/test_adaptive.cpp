#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "llfilter/adaptive.hpp"
#include "llfilter/error.hpp"
#include "llfilter/examples.hpp"
#include "test_support.hpp"

using namespace llf;
using llf::testing::rel_diff;

namespace {

AdaptiveConfig tol(double rtol, double atol_y, double atol_p) {
  AdaptiveConfig c;
  c.rtol_y = c.rtol_p = rtol;
  c.atol_y = atol_y;
  c.atol_p = atol_p;
  return c;
}

// Checks acceptance soundness and node alignment of one interval.
void check_interval(const AdaptivePrediction& ap, double t_k, double t_k1,
                    const AdaptiveConfig& cfg) {
  const double h_max = cfg.h_max.value_or((t_k1 - t_k) / 2);
  double tau = t_k;
  long accepted = 0;
  long failed = 0;
  for (std::size_t i = 0; i < ap.records.size(); ++i) {
    const StepRecord& r = ap.records[i];
    EXPECT_EQ(r.accepted, std::max(r.e1, r.e2) <= 1.0 || r.h <= cfg.h_min);
    EXPECT_LE(r.h, h_max * (1 + 1e-15));
    EXPECT_NEAR(r.tau, tau, 1e-12 * (1 + std::abs(tau)));
    const bool final_step = i + 1 == ap.records.size();
    if (!final_step) EXPECT_GE(r.h, cfg.h_min);
    if (r.accepted) {
      ++accepted;
      tau = r.tau + 2 * r.h;
    } else {
      ++failed;
    }
  }
  ASSERT_FALSE(ap.records.empty());
  EXPECT_TRUE(ap.records.back().accepted);
  EXPECT_NEAR(tau, t_k1, 1e-12 * (1 + std::abs(t_k1)));
  EXPECT_EQ(ap.pred.state.t, t_k1);
  EXPECT_EQ(ap.accepted, accepted);
  EXPECT_EQ(ap.failed, failed);
}

}  // namespace

TEST(AdaptiveConfig, Validate) {
  AdaptiveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rtol_y = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AdaptiveConfig{};
  c.h_max = 1e-9;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AdaptiveConfig{};
  c.h_min = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(InitialStepsize, DeltaFormulas) {
  EXPECT_DOUBLE_EQ(initial_delta1(1.0, 1.0, 1e-8), 0.01);
  EXPECT_DOUBLE_EQ(initial_delta1(1e-9, 1.0, 1e-8), 1e-8);
  EXPECT_DOUBLE_EQ(initial_delta1(1.0, 1e-9, 1e-8), 1e-8);
  EXPECT_DOUBLE_EQ(
      initial_delta2(1.0, 100.0, 0.01, 1e-8, 1e-6, 2.2e-16, Order::kOne),
      0.01);
  EXPECT_NEAR(
      initial_delta2(1.0, 100.0, 0.01, 1e-8, 1e-6, 2.2e-16, Order::kTwo),
      std::cbrt(1e-4), 1e-15);
  // Stationary branch.
  EXPECT_DOUBLE_EQ(
      initial_delta2(0.0, 0.0, 1e-8, 1e-8, 1e-3, 2.2e-16, Order::kOne), 1e-8);
  EXPECT_DOUBLE_EQ(
      initial_delta2(0.0, 0.0, 10.0, 1e-8, 1e-3, 2.2e-16, Order::kOne), 1e-2);
}

TEST(InitialStepsize, StationaryPoint) {
  // Zero dynamics: h1 = max{h_min, min{100 atol, max{atol, atol rtol}, dt}}.
  const DiffusionModel m = llf::testing::linear_additive(
      Matrix::Zero(1, 1), Vector::Zero(1), Matrix::Zero(1, 1));
  AdaptiveConfig cfg = tol(1e-3, 1e-6, 1e-6);
  cfg.h_min = 1e-9;
  const MomentState st{0.0, Vector{{1e-7}}, Matrix{{1e-14}}};
  EXPECT_DOUBLE_EQ(initial_stepsize(m, st, cfg, 0.0, 1.0, Order::kOne), 1e-6);
  cfg.h_min = 1e-5;
  EXPECT_DOUBLE_EQ(initial_stepsize(m, st, cfg, 0.0, 1.0, Order::kOne), 1e-5);
}

TEST(InitialStepsize, FirstExampleIsReasonable) {
  const ExampleSetup e = make_example("ex1");
  const MomentState st{0.5, Vector{{1.0}}, Matrix{{1.0}}};
  const double h1 =
      initial_stepsize(e.model, st, tol(5e-9, 5e-9, 5e-12), 0.5, 1.5,
                       Order::kOne);
  EXPECT_GT(h1, 1e-8);
  EXPECT_LT(h1, 1.0);
  EXPECT_THROW(initial_stepsize(e.model, st, AdaptiveConfig{}, 1.5, 0.5,
                                Order::kOne),
               ConfigError);
}

TEST(ProposeStepsize, Branches) {
  AdaptiveConfig cfg;
  cfg.h_min = 1e-12;
  const double h = 0.01;
  EXPECT_DOUBLE_EQ(propose_stepsize(0.0, 0.0, h, cfg, Order::kOne), 5 * h);
  EXPECT_DOUBLE_EQ(propose_stepsize(1.0, 1.0, h, cfg, Order::kOne), 0.8 * h);
  EXPECT_DOUBLE_EQ(propose_stepsize(64.0, 0.0, h, cfg, Order::kOne), 0.1 * h);
  EXPECT_DOUBLE_EQ(propose_stepsize(0.25, 0.0, h, cfg, Order::kOne), 1.6 * h);
  EXPECT_DOUBLE_EQ(propose_stepsize(1e-4, 1e-4, h, cfg, Order::kOne), 5 * h);
  EXPECT_DOUBLE_EQ(propose_stepsize(1.0 / 0.99, 0.0, h, cfg, Order::kOne),
                   h * 0.2 * std::sqrt(0.99));
  EXPECT_DOUBLE_EQ(propose_stepsize(0.125, 0.5, h, cfg, Order::kTwo),
                   h * 0.8 * std::cbrt(2.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_DOUBLE_EQ(propose_stepsize(nan, 0.0, h, cfg, Order::kOne), 0.1 * h);
  cfg.h_min = 0.005;
  EXPECT_DOUBLE_EQ(propose_stepsize(64.0, 0.0, h, cfg, Order::kOne), 0.005);
}

TEST(StepErrors, Arithmetic) {
  AdaptiveConfig cfg = tol(1e-30, 1e-8, 1e-8);
  const MomentState prev{0, Vector{{0.0}}, Matrix{{0.0}}};
  const MomentState fine{1, Vector{{1e-8}}, Matrix{{0.0}}};
  const MomentState coarse{1, Vector{{0.0}}, Matrix{{0.0}}};
  auto [e1, e2] = step_errors(fine, coarse, prev, cfg);
  EXPECT_NEAR(e1, 1.0, 1e-12);
  EXPECT_EQ(e2, 0.0);
  cfg.atol_y = 2e-8;
  std::tie(e1, e2) = step_errors(fine, coarse, prev, cfg);
  EXPECT_NEAR(e1, 0.5, 1e-12);
  std::tie(e1, e2) = step_errors(fine, fine, prev, cfg);
  EXPECT_EQ(e1, 0.0);
  EXPECT_EQ(e2, 0.0);
}

TEST(StepErrors, RmsOverComponents) {
  AdaptiveConfig cfg = tol(0.5, 1.0, 1.0);
  const MomentState prev{0, Vector{{2.0, 0.0}}, Matrix::Zero(2, 2)};
  const MomentState fine{1, Vector{{1.0, 0.0}}, Matrix::Identity(2, 2)};
  MomentState coarse = fine;
  coarse.y << 1.0 + 2.0, 1.0;  // scales 2 and 1
  coarse.p(0, 1) = 3.0;        // scale 1 of 4 entries
  const auto [e1, e2] = step_errors(fine, coarse, prev, cfg);
  EXPECT_NEAR(e1, std::sqrt((1.0 + 1.0) / 2), 1e-15);
  EXPECT_NEAR(e2, std::sqrt(9.0 / 4), 1e-15);
}

TEST(DoubleStep, LinearModelsHaveNoDoublingError) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = llf::testing::random_stable(rng, 2);
    const DiffusionModel m =
        trial % 2 == 0
            ? llf::testing::linear_additive(
                  a, llf::testing::random_matrix(rng, 2, 1),
                  llf::testing::random_matrix(rng, 2, 2))
            : llf::testing::linear_multiplicative(
                  a, {llf::testing::random_matrix(rng, 2, 2, 0.3)});
    const MomentState st = MomentState::from_mean_variance(
        0.0, llf::testing::random_matrix(rng, 2, 1),
        llf::testing::random_spd(rng, 2));
    const DoubleStep ds =
        double_step(m, linearize(m, 0.0, st.y, Order::kOne), st, 0.3);
    EXPECT_LT(rel_diff(ds.fine.y, ds.coarse.y), 1e-11);
    EXPECT_LT(rel_diff(ds.fine.p, ds.coarse.p), 1e-11);
    EXPECT_DOUBLE_EQ(ds.fine.t, 0.6);
    EXPECT_DOUBLE_EQ(ds.coarse.t, 0.6);
  }
}

TEST(DoubleStep, ZeroModel) {
  const DiffusionModel m = llf::testing::linear_additive(
      Matrix::Zero(2, 2), Vector::Zero(2), Matrix::Zero(2, 1));
  const MomentState st{0.0, Vector{{1.0, 2.0}}, Matrix{{2.0, 1.0}, {1.0, 5.0}}};
  const DoubleStep ds =
      double_step(m, linearize(m, 0.0, st.y, Order::kOne), st, 0.1);
  EXPECT_LT((ds.fine.y - st.y).norm(), 1e-15);
  EXPECT_LT((ds.coarse.p - st.p).norm(), 1e-14);
}

TEST(DoubleStep, FirstExampleDifferenceShrinks) {
  const ExampleSetup e = make_example("ex1");
  const MomentState st{0.5, Vector{{1.0}}, Matrix{{1.0}}};
  const LinearizationData lin = linearize(e.model, 0.5, st.y, Order::kOne);
  const DoubleStep a = double_step(e.model, lin, st, 1.0 / 64);
  const DoubleStep b = double_step(e.model, lin, st, 1.0 / 128);
  const double da = std::abs(a.fine.y(0) - a.coarse.y(0));
  const double db = std::abs(b.fine.y(0) - b.coarse.y(0));
  EXPECT_GT(db, 0.0);
  EXPECT_NEAR(da / db, 8.0, 0.4);
}

TEST(AdaptivePredict, LinearModelOneStepPerInterval) {
  const DiffusionModel m = llf::testing::ou_model(-1.0, 0.5);
  const MomentState st{0.0, Vector{{1.0}}, Matrix{{1.5}}};
  // Loose tolerances keep scaled rounding noise far below 1e-11.
  const AdaptiveConfig cfg = tol(1e-3, 1e-3, 1e-3);
  const AdaptivePrediction ap =
      adaptive_predict(m, st, 1.0, cfg, Order::kOne, 0.5);
  ASSERT_EQ(ap.records.size(), 1u);
  EXPECT_TRUE(ap.records[0].accepted);
  EXPECT_DOUBLE_EQ(ap.records[0].h, 0.5);
  EXPECT_LE(std::max(ap.records[0].e1, ap.records[0].e2), 1e-11);
  EXPECT_NEAR(ap.pred.state.y(0), std::exp(-1.0), 1e-15);
}

TEST(AdaptivePredict, RandomLinearModelsAcceptEverything) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 1 + trial % 3;
    const Matrix a = llf::testing::random_stable(rng, d);
    const DiffusionModel m =
        trial % 2 == 0
            ? llf::testing::linear_additive(
                  a, llf::testing::random_matrix(rng, d, 1),
                  llf::testing::random_matrix(rng, d, 2))
            : llf::testing::linear_multiplicative(
                  a, {llf::testing::random_matrix(rng, d, d, 0.3)});
    const MomentState st = MomentState::from_mean_variance(
        0.0, llf::testing::random_matrix(rng, d, 1),
        llf::testing::random_spd(rng, d));
    const AdaptiveConfig cfg = tol(1e-3, 1e-3, 1e-3);
    const AdaptivePrediction ap =
        adaptive_predict(m, st, 2.0, cfg, Order::kOne, std::nullopt);
    check_interval(ap, 0.0, 2.0, cfg);
    EXPECT_EQ(ap.failed, 0);
    for (const StepRecord& r : ap.records) {
      EXPECT_LE(std::max(r.e1, r.e2), 1e-11);
    }
  }
}

TEST(AdaptivePredict, SoundnessOnExamples) {
  for (const std::string id : {"ex1", "ex2", "ex3", "ex4"}) {
    const ExampleSetup e = make_example(id);
    const MomentState st{e.params.t0, e.params.x0, e.params.q0};
    for (double rtol : {1e-4, 1e-7}) {
      AdaptiveConfig cfg = tol(rtol, rtol, rtol * 1e-3);
      const double t1 = e.params.t0 + 1.0;
      const AdaptivePrediction ap =
          adaptive_predict(e.model, st, t1, cfg, Order::kOne, std::nullopt);
      SCOPED_TRACE(id + " rtol " + std::to_string(rtol));
      check_interval(ap, e.params.t0, t1, cfg);
      cfg.h_max = 0.01;
      const AdaptivePrediction capped =
          adaptive_predict(e.model, st, t1, cfg, Order::kOne, std::nullopt);
      check_interval(capped, e.params.t0, t1, cfg);
      EXPECT_GE(capped.accepted, 50);
    }
  }
}

TEST(AdaptivePredict, TighterToleranceMoreStepsLessError) {
  for (const std::string id : {"ex1", "ex2"}) {
    const ExampleSetup e = make_example(id);
    const MomentState st{e.params.t0, e.params.x0, e.params.q0};
    const double t1 = e.params.t0 + 1.0;
    const MomentState exact = (*e.exact)(st, t1);
    long prev_steps = 0;
    double prev_err = std::numeric_limits<double>::infinity();
    for (double rtol : {1e-5, 1e-7, 1e-9}) {
      const AdaptivePrediction ap = adaptive_predict(
          e.model, st, t1, tol(rtol, rtol, rtol * 1e-3), Order::kOne,
          std::nullopt);
      const double err = std::abs(ap.pred.state.y(0) - exact.y(0));
      EXPECT_GT(ap.accepted, prev_steps) << id << " " << rtol;
      EXPECT_LT(err, prev_err) << id << " " << rtol;
      prev_steps = ap.accepted;
      prev_err = err;
    }
  }
}

TEST(AdaptivePredict, FirstExamplePaperTolerances) {
  const ExampleSetup e = make_example("ex1");
  const MomentState st{0.5, Vector{{1.0}}, Matrix{{1.0}}};
  const AdaptivePrediction ap = adaptive_predict(
      e.model, st, 1.5, tol(5e-9, 5e-9, 5e-12), Order::kOne, std::nullopt);
  const double err = std::abs(ap.pred.state.y(0) - (*e.exact)(st, 1.5).y(0));
  // Global error stays within a small multiple of the tolerance and far below
  // the conventional filter (2.79e-3). The published value is 5.09e-10.
  EXPECT_LT(err, 20 * 5e-9);
  EXPECT_GT(err, 0.0);
}

TEST(AdaptivePredict, StepBudget) {
  const ExampleSetup e = make_example("ex1");
  const MomentState st{0.5, Vector{{1.0}}, Matrix{{1.0}}};
  AdaptiveConfig cfg = tol(1e-10, 1e-10, 1e-13);
  cfg.max_steps = 3;
  EXPECT_THROW(
      adaptive_predict(e.model, st, 1.5, cfg, Order::kOne, std::nullopt),
      DivergenceError);
  EXPECT_THROW(adaptive_predict(e.model, st, 0.5, AdaptiveConfig{},
                                Order::kOne, std::nullopt),
               ConfigError);
}

TEST(AdaptiveFilter, CarriesStepAndMatchesKalman) {
  const double a = -1.0;
  const double sigma = 0.5;
  const DiffusionModel m = llf::testing::ou_model(a, sigma);
  std::vector<double> times;
  for (int k = 0; k < 10; ++k) times.push_back(k);
  const ObservationModel obs =
      make_observation_model(Matrix{{1.0}}, Matrix{{0.01}}, times);
  ObservationSeries data;
  data.times = times;
  for (int k = 0; k < 10; ++k) data.values.push_back(Vector{{std::cos(k)}});
  const FilterInit init{Vector{{1.0}}, Matrix{{1.0}}, false};
  const FilterRun run =
      run_adaptive_filter(m, obs, data, init, AdaptiveConfig{}, Order::kOne);
  const auto kf = llf::testing::kalman_filter(
      Matrix{{a}}, Vector::Zero(1), Matrix{{sigma}}, obs, data, Vector{{1.0}},
      Matrix::Zero(1, 1));
  ASSERT_EQ(run.steps.size(), 9u);
  for (std::size_t k = 0; k < kf.size(); ++k) {
    EXPECT_LT(rel_diff(run.steps[k].y_filt, kf[k].y_filt), 1e-9);
    EXPECT_LT(rel_diff(run.steps[k].v_filt, kf[k].v_filt), 1e-9);
    EXPECT_EQ(run.steps[k].failed_steps, 0);
  }
  // The step grows to the cap and the carried step spans later intervals.
  EXPECT_EQ(run.steps.back().accepted_steps, 1);
}
