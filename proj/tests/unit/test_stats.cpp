#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "llfilter/error.hpp"
#include "llfilter/stats.hpp"

using namespace llf;

TEST(StudentT, ClosedForms) {
  for (double p : {0.55, 0.75, 0.9, 0.95, 0.99, 0.999, 0.1, 0.01}) {
    // dof 1: Cauchy.
    EXPECT_NEAR(student_t_quantile(p, 1.0),
                std::tan(std::numbers::pi * (p - 0.5)),
                1e-11 * (1 + std::abs(std::tan(std::numbers::pi * (p - 0.5)))));
    // dof 2: t = (2p - 1) / sqrt(2 p (1 - p)).
    EXPECT_NEAR(student_t_quantile(p, 2.0),
                (2 * p - 1) / std::sqrt(2 * p * (1 - p)), 1e-11);
  }
  EXPECT_NEAR(student_t_quantile(0.95, 1.0), 6.3138, 5e-5);
  EXPECT_NEAR(student_t_quantile(0.95, 19.0), 1.7291, 5e-5);
  EXPECT_EQ(student_t_quantile(0.5, 7.0), 0.0);
}

TEST(StudentT, CdfRoundTrip) {
  for (double dof : {1.0, 3.0, 19.0, 99.0, 1e4}) {
    const boost::math::students_t dist(dof);
    for (double p : {1e-6, 0.05, 0.3, 0.7, 0.95, 1 - 1e-6}) {
      const double t = student_t_quantile(p, dof);
      EXPECT_NEAR(boost::math::cdf(dist, t), p, 1e-12) << dof << " " << p;
      EXPECT_NEAR(t, boost::math::quantile(dist, p),
                  1e-9 * (1 + std::abs(t)));
    }
  }
}

TEST(StudentT, Errors) {
  EXPECT_THROW(student_t_quantile(0.0, 3.0), ConfigError);
  EXPECT_THROW(student_t_quantile(1.0, 3.0), ConfigError);
  EXPECT_THROW(student_t_quantile(0.5, 0.5), ConfigError);
}

TEST(BatchCi, ConstantErrors) {
  const std::vector<double> e(20 * 5, 0.125);
  const ConfidenceEstimate ci = batch_ci(e, 20, 5, 0.1);
  EXPECT_DOUBLE_EQ(ci.mean, 0.125);
  EXPECT_NEAR(ci.delta, 0.0, 1e-15);
  EXPECT_EQ(ci.batches, 20);
  EXPECT_EQ(ci.batch_size, 5);
}

TEST(BatchCi, TwoBatches) {
  const ConfidenceEstimate ci = batch_ci({0.0, 2.0}, 2, 1, 0.1);
  EXPECT_DOUBLE_EQ(ci.mean, 1.0);
  EXPECT_NEAR(ci.delta, 6.3138, 5e-5);
}

TEST(BatchCi, BatchMeansNotRawValues) {
  // Batches {0, 2} and {4, 6}: means 1 and 5, sd of means 2*sqrt(2).
  const ConfidenceEstimate ci = batch_ci({0.0, 2.0, 4.0, 6.0}, 2, 2, 0.1);
  EXPECT_DOUBLE_EQ(ci.mean, 3.0);
  EXPECT_NEAR(ci.delta, student_t_quantile(0.95, 1) * std::sqrt(8.0 / 2),
              1e-12);
}

TEST(BatchCi, Errors) {
  EXPECT_THROW(batch_ci({1.0, 2.0, 3.0}, 2, 2, 0.1), DimensionError);
  EXPECT_THROW(batch_ci({1.0}, 1, 1, 0.1), ConfigError);
  EXPECT_THROW(batch_ci({1.0, 2.0}, 2, 1, 1.5), ConfigError);
}

TEST(FitOrder, ExactLines) {
  const std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> e1;
  std::vector<double> e2;
  for (double h : hs) {
    e1.push_back(3.0 * h);
    e2.push_back(0.2 * h * h);
  }
  EXPECT_NEAR(fit_order(hs, e1), 1.0, 1e-13);
  EXPECT_NEAR(fit_order(hs, e2), 2.0, 1e-13);
}

TEST(FitOrder, PublishedRow) {
  const std::vector<double> hs{1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  const double b = fit_order(hs, {7.35e-7, 1.84e-7, 4.60e-8, 1.15e-8});
  EXPECT_NEAR(b, 2.00, 0.005);
}

TEST(FitOrder, Errors) {
  EXPECT_THROW(fit_order({0.1}, {1.0}), ConfigError);
  EXPECT_THROW(fit_order({0.1, 0.2}, {1.0}), DimensionError);
  EXPECT_THROW(fit_order({0.1, 0.2}, {1.0, 0.0}), ConfigError);
  EXPECT_THROW(fit_order({0.1, 0.1}, {1.0, 2.0}), ConfigError);
}
