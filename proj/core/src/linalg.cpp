#include "llfilter/linalg.hpp"

#include <array>
#include <cmath>
#include <string>

#include "llfilter/error.hpp"

namespace llf {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DimensionError(std::string(what) + ": non-finite entry");
  }
}

Vector vec(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("vec: matrix must be square, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  // Eigen storage is column-major, which is exactly the vec ordering.
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index d) {
  if (v.size() != d * d) {
    throw DimensionError("unvec: length " + std::to_string(v.size()) +
                         " is not " + std::to_string(d) + "^2");
  }
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix kron_sum(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionError("kron_sum: operands must be square of equal size");
  }
  const Matrix eye = Matrix::Identity(a.rows(), a.rows());
  return kron(a, eye) + kron(eye, b);
}

Matrix vector_kron_sum(const Vector& v) {
  const Matrix eye = Matrix::Identity(v.size(), v.size());
  return kron(v, eye) + kron(eye, v);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

namespace {

constexpr double kTheta13 = 5.371920351148152;

constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

double norm1(const Matrix& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("expm: matrix must be square");
  }
  if (a.rows() == 0) {
    throw DimensionError("expm: empty matrix");
  }
  require_finite(a, "expm");

  const Eigen::Index n = a.rows();
  const double anorm = norm1(a);
  int squarings = 0;
  if (anorm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(anorm / kTheta13)));
  }
  const Matrix as = std::ldexp(1.0, -squarings) * a;

  const auto& b = kPade13;
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix a2 = as * as;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;

  Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                   b[5] * a4 + b[3] * a2 + b[1] * eye;
  const Matrix u = as * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * eye;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) {
    r = r * r;
  }
  if (!r.allFinite()) {
    throw DivergenceError("expm: result overflowed (1-norm of input " +
                          std::to_string(anorm) + ")");
  }
  return r;
}

Matrix solve_gain(const Matrix& v, const Matrix& c, const Matrix& sigma) {
  const Eigen::Index d = v.rows();
  const Eigen::Index r = c.rows();
  if (v.cols() != d || c.cols() != d || sigma.rows() != r ||
      sigma.cols() != r) {
    throw DimensionError("solve_gain: expected V d x d, C r x d, Sigma r x r");
  }
  Matrix s = symmetrize(c * v * c.transpose() + sigma);
  const Matrix cv = c * v;

  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    const double ridge = 1e-14 * s.trace() / static_cast<double>(r);
    if (ridge > 0.0) {
      s.diagonal().array() += ridge;
      llt.compute(s);
    }
    if (ridge <= 0.0 || llt.info() != Eigen::Success) {
      throw SingularInnovationError(
          "solve_gain: innovation covariance C V C^T + Sigma is singular");
    }
  }
  // K^T = S^{-1} C V since S and V are symmetric.
  return llt.solve(cv).transpose();
}

}  // namespace llf
