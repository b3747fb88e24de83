#pragma once

#include <Eigen/Dense>

namespace enkf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative eigenvalue floor used everywhere a PSD check or clip happens.
inline constexpr double kPsdTol = 1e-12;
// Relative singular/eigen value threshold for pseudo-inverses.
inline constexpr double kPinvTol = 1e-12;

Matrix symmetrize(const Matrix& M);

// Relative asymmetry ||M - M^T||_F / max(1, ||M||_F).
double asymmetry(const Matrix& M);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& M);

// Symmetric PSD principal square root; eigenvalues below zero are clipped.
Matrix sqrt_psd(const Matrix& M);

// Symmetric pseudo-inverse square root: eigenvalues <= tol*lambda_max map to 0.
Matrix pinv_sqrt(const Matrix& M, double rel_tol = kPinvTol);

// Moore-Penrose pseudo-inverse via SVD with relative threshold on sigma_max.
Matrix pseudo_inverse(const Matrix& M, double rel_tol = kPinvTol);

// Rows k=1..N-1 of the Helmert basis: orthonormal, each orthogonal to 1.
// Returns the (N-1) x N matrix V with V V^T = I and V 1 = 0.
Matrix helmert_rows(int N);

// n x N anomaly matrix with exact zero column sum and exact sample covariance
// cov (divisor N-1). Requires N >= rank capacity, i.e. N >= n+1 to represent
// full-rank cov.
Matrix exact_anomalies(const Matrix& cov, int N);

}  // namespace enkf
