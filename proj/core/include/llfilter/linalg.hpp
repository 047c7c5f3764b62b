#pragma once

#include <Eigen/Dense>

namespace llf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws DimensionError naming `what` when any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

// Column-stacking vectorization of a square matrix: entry (i,j) -> j*d + i.
// Satisfies vec(A X B^T) = kron(B, A) vec(X).
Vector vec(const Matrix& m);

// Inverse of vec for a d*d vector.
Matrix unvec(const Vector& v, Eigen::Index d);

// Kronecker product; block (i,j) equals a(i,j) * b.
Matrix kron(const Matrix& a, const Matrix& b);

// Kronecker sum a (+) b = a (x) I + I (x) b of two n x n matrices, so that
// kron_sum(A, A) vec(P) = vec(A P + P A^T).
Matrix kron_sum(const Matrix& a, const Matrix& b);

// Kronecker sum of a d-vector with itself, read as v (x) I_d + I_d (x) v
// (a d^2 x d matrix). Acting on y it gives vec(v y^T + y v^T).
Matrix vector_kron_sum(const Vector& v);

// Matrix exponential by scaling and squaring with the degree-13 diagonal
// Pade approximant. Exact for the zero matrix. Throws DivergenceError if the
// result overflows.
Matrix expm(const Matrix& a);

// Filter gain K solving K (C V C^T + Sigma) = V C^T for symmetric V and
// Sigma. Uses a Cholesky factorization of the innovation covariance and
// retries once with a ridge of 1e-14 * trace(S) / r; throws
// SingularInnovationError if that also fails.
Matrix solve_gain(const Matrix& v, const Matrix& c, const Matrix& sigma);

// (m + m^T) / 2.
Matrix symmetrize(const Matrix& m);

}  // namespace llf
