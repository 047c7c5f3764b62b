#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>

#include "llfilter/filter.hpp"
#include "llfilter/linalg.hpp"
#include "llfilter/model.hpp"

namespace llf {

// Uniform path grid t0 + i * delta, i = 0..n_steps.
struct PathGrid {
  double t0 = 0.0;
  double delta = 1e-3;
  long n_steps = 0;

  double time(long i) const { return t0 + static_cast<double>(i) * delta; }
  double t_end() const { return time(n_steps); }
};

// Grid on [t0, t1] with step delta; (t1 - t0) / delta must be an integer to
// within 1e-9.
PathGrid make_path_grid(double t0, double t1, double delta);

// Gaussian draws for realization `stream_id` of an experiment seeded with
// `seed`. Streams are independent of each other and of scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double normal();
  Vector normals(Eigen::Index n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Column i holds x(grid.time(i)).
struct Path {
  PathGrid grid;
  Matrix x;
};

// Euler-Maruyama path.
Path euler_path(const DiffusionModel& m, const PathGrid& grid, const Vector& x0,
                RngStream& rng);

// Local linearization path for additive-noise models: the mean moves with
// the order-1 LL flow and the noise increment has the exact covariance of
// the linearized equation over each step. Throws ConfigError when any
// diffusion Jacobian is nonzero along the path.
Path ll_path(const DiffusionModel& m, const PathGrid& grid, const Vector& x0,
             RngStream& rng);

// z_k = C x(t_k) + e_k. Observation times must be grid nodes.
ObservationSeries observe(const Path& path, const ObservationModel& obs,
                          RngStream& rng);

// Sample from N(0, cov) given a standard normal vector; cov is treated as
// PSD (negative eigenvalues from roundoff are clamped to zero).
Vector gaussian_sample(const Matrix& cov, const Vector& xi);

// CSV export: columns t, x_0..x_{d-1} and t_k, z_0..z_{r-1}.
void write_path_csv(std::ostream& os, const Path& path);
void write_series_csv(std::ostream& os, const ObservationSeries& series);
ObservationSeries read_series_csv(std::istream& is);

}  // namespace llf
