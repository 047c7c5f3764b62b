#pragma once

#include <vector>

namespace llf {

// Batch-means confidence interval mean +- delta.
struct ConfidenceEstimate {
  double mean = 0.0;
  double delta = 0.0;
  int batches = 0;     // L
  int batch_size = 0;  // K
  double alpha = 0.1;
};

// errors.size() must equal L * K; batch l holds errors[l*K .. l*K+K-1].
ConfidenceEstimate batch_ci(const std::vector<double>& errors, int batches,
                            int batch_size, double alpha);

// Inverse CDF of Student's t with `dof` degrees of freedom.
double student_t_quantile(double p, double dof);

// Least-squares slope of log2(err) against log2(h).
double fit_order(const std::vector<double>& hs, const std::vector<double>& errs);

}  // namespace llf
