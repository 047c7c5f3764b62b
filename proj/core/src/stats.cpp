#include "llfilter/stats.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "llfilter/error.hpp"

namespace llf {

ConfidenceEstimate batch_ci(const std::vector<double>& errors, int batches,
                            int batch_size, double alpha) {
  if (batches < 2 || batch_size < 1) {
    throw ConfigError("batch_ci: need L >= 2 and K >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("batch_ci: alpha must lie in (0, 1)");
  }
  const auto expected = static_cast<std::size_t>(batches) *
                        static_cast<std::size_t>(batch_size);
  if (errors.size() != expected) {
    throw DimensionError("batch_ci: got " + std::to_string(errors.size()) +
                         " errors, expected L*K = " + std::to_string(expected));
  }

  std::vector<double> means(static_cast<std::size_t>(batches), 0.0);
  for (int l = 0; l < batches; ++l) {
    double sum = 0.0;
    for (int j = 0; j < batch_size; ++j) {
      sum += errors[static_cast<std::size_t>(l * batch_size + j)];
    }
    means[static_cast<std::size_t>(l)] = sum / batch_size;
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (batches - 1);

  ConfidenceEstimate ci;
  ci.mean = mean;
  ci.delta = student_t_quantile(1.0 - alpha / 2.0, batches - 1) *
             std::sqrt(var / batches);
  ci.batches = batches;
  ci.batch_size = batch_size;
  ci.alpha = alpha;
  return ci;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("student_t_quantile: p must lie in (0, 1)");
  }
  if (!(dof >= 1.0)) throw ConfigError("student_t_quantile: dof must be >= 1");
  if (p == 0.5) return 0.0;
  return boost::math::quantile(boost::math::students_t(dof), p);
}

double fit_order(const std::vector<double>& hs,
                 const std::vector<double>& errs) {
  if (hs.size() != errs.size()) {
    throw DimensionError("fit_order: hs and errs differ in length");
  }
  if (hs.size() < 2) throw ConfigError("fit_order: need at least two points");
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0) || !(errs[i] > 0.0)) {
      throw ConfigError("fit_order: stepsizes and errors must be positive");
    }
    sx += std::log2(hs[i]);
    sy += std::log2(errs[i]);
  }
  const double n = static_cast<double>(hs.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double dx = std::log2(hs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(errs[i]) - my);
  }
  if (sxx == 0.0) throw ConfigError("fit_order: stepsizes must differ");
  return sxy / sxx;
}

}  // namespace llf
