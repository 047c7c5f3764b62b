#include "llfilter/simulate.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "llfilter/error.hpp"
#include "llfilter/io.hpp"
#include "llfilter/moments.hpp"
#include "llfilter/wll.hpp"

namespace llf {

PathGrid make_path_grid(double t0, double t1, double delta) {
  if (!(delta > 0.0) || !(t1 > t0)) {
    throw ConfigError("make_path_grid: need delta > 0 and t1 > t0");
  }
  const double steps = (t1 - t0) / delta;
  const double n = std::round(steps);
  if (std::abs(steps - n) > 1e-9 * std::max(1.0, steps)) {
    throw ConfigError("make_path_grid: interval is not a multiple of delta");
  }
  return {t0, delta, static_cast<long>(n)};
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32),
                    0x9e3779b9u};
  engine_.seed(seq);
}

double RngStream::normal() { return normal_(engine_); }

Vector RngStream::normals(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vector gaussian_sample(const Matrix& cov, const Vector& xi) {
  if (cov.rows() != xi.size() || cov.cols() != xi.size()) {
    throw DimensionError("gaussian_sample: covariance does not match draw");
  }
  if (cov.size() == 1) return Vector::Constant(1, std::sqrt(std::max(cov(0, 0), 0.0)) * xi(0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.cwiseProduct(xi);
}

namespace {

void check_start(const DiffusionModel& m, const PathGrid& grid,
                 const Vector& x0) {
  if (x0.size() != m.dim) {
    throw DimensionError("path: x0 has length " + std::to_string(x0.size()) +
                         ", model dimension is " + std::to_string(m.dim));
  }
  if (!(grid.delta > 0.0) || grid.n_steps < 1) {
    throw ConfigError("path: invalid grid");
  }
}

[[noreturn]] void diverged(const char* scheme, long step, double t) {
  std::ostringstream os;
  os << scheme << ": non-finite state at step " << step << " (t=" << t << ")";
  throw DivergenceError(os.str());
}

}  // namespace

Path euler_path(const DiffusionModel& m, const PathGrid& grid, const Vector& x0,
                RngStream& rng) {
  check_start(m, grid, x0);
  Path path{grid, Matrix(m.dim, grid.n_steps + 1)};
  path.x.col(0) = x0;
  const double sq = std::sqrt(grid.delta);
  Vector x = x0;
  for (long n = 0; n < grid.n_steps; ++n) {
    const double t = grid.time(n);
    const Vector xi = rng.normals(m.noise_dim);
    x += m.drift(t, x) * grid.delta + m.diffusion(t, x) * (sq * xi);
    if (!x.allFinite()) diverged("euler_path", n + 1, grid.time(n + 1));
    path.x.col(n + 1) = x;
  }
  return path;
}

Path ll_path(const DiffusionModel& m, const PathGrid& grid, const Vector& x0,
             RngStream& rng) {
  check_start(m, grid, x0);
  const int d = m.dim;
  Path path{grid, Matrix(d, grid.n_steps + 1)};
  path.x.col(0) = x0;
  Vector x = x0;
  for (long n = 0; n < grid.n_steps; ++n) {
    const double t = grid.time(n);
    const LinearizationData lin = linearize(m, t, x, Order::kOne);
    for (const Matrix& bi : lin.b) {
      if (!bi.isZero(0.0)) {
        throw ConfigError(
            "ll_path: model has multiplicative noise; use euler_path");
      }
    }
    const MomentState start{t, x, x * x.transpose()};
    const Vector mean = moment_step(lin, start, grid.delta).y;

    // Covariance of the linearized equation started from a point: the
    // same flow with the mean terms switched off.
    LinearizationData centred = lin;
    centred.a0.setZero();
    centred.a1.setZero();
    const MomentState origin{t, Vector::Zero(d), Matrix::Zero(d, d)};
    const Matrix cov = moment_step(centred, origin, grid.delta).p;

    x = mean + gaussian_sample(cov, rng.normals(d));
    if (!x.allFinite()) diverged("ll_path", n + 1, grid.time(n + 1));
    path.x.col(n + 1) = x;
  }
  return path;
}

ObservationSeries observe(const Path& path, const ObservationModel& obs,
                          RngStream& rng) {
  if (obs.c.cols() != path.x.rows()) {
    throw DimensionError("observe: C does not match the path dimension");
  }
  const PathGrid& g = path.grid;
  ObservationSeries out;
  for (double t : obs.times) {
    const double pos = (t - g.t0) / g.delta;
    const long idx = std::lround(pos);
    if (idx < 0 || idx > g.n_steps ||
        std::abs(g.time(idx) - t) > 1e-9 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "observe: observation time " << t << " is not a path grid node";
      throw ConfigError(os.str());
    }
    const Matrix sigma = obs.sigma_at(t);
    const Vector noise = gaussian_sample(sigma, rng.normals(obs.c.rows()));
    out.times.push_back(t);
    out.values.push_back(obs.c * path.x.col(idx) + noise);
  }
  return out;
}

void write_path_csv(std::ostream& os, const Path& path) {
  CsvWriter csv(os);
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < path.x.rows(); ++i) {
    header.push_back("x_" + std::to_string(i));
  }
  csv.row(header);
  for (Eigen::Index n = 0; n < path.x.cols(); ++n) {
    std::vector<std::string> row{format_double(path.grid.time(n))};
    for (Eigen::Index i = 0; i < path.x.rows(); ++i) {
      row.push_back(format_double(path.x(i, n)));
    }
    csv.row(row);
  }
}

void write_series_csv(std::ostream& os, const ObservationSeries& series) {
  CsvWriter csv(os);
  const Eigen::Index r = series.values.empty() ? 0 : series.values[0].size();
  std::vector<std::string> header{"t_k"};
  for (Eigen::Index i = 0; i < r; ++i) header.push_back("z_" + std::to_string(i));
  csv.row(header);
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::vector<std::string> row{format_double(series.times[k])};
    for (Eigen::Index i = 0; i < r; ++i) {
      row.push_back(format_double(series.values[k](i)));
    }
    csv.row(row);
  }
}

ObservationSeries read_series_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  const std::size_t tcol = table.column("t_k");
  std::vector<std::size_t> zcols;
  for (std::size_t i = 0;; ++i) {
    const std::string name = "z_" + std::to_string(i);
    bool found = false;
    for (const auto& h : table.header) found = found || h == name;
    if (!found) break;
    zcols.push_back(table.column(name));
  }
  if (zcols.empty()) throw ConfigError("series CSV has no z_* columns");
  ObservationSeries out;
  for (const auto& row : table.rows) {
    out.times.push_back(std::stod(row.at(tcol)));
    Vector z(static_cast<Eigen::Index>(zcols.size()));
    for (std::size_t i = 0; i < zcols.size(); ++i) {
      z(static_cast<Eigen::Index>(i)) = std::stod(row.at(zcols[i]));
    }
    out.values.push_back(z);
  }
  return out;
}

}  // namespace llf
