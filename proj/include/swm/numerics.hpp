#pragma once

#include <utility>

#include "swm/types.hpp"

namespace swm {

// Matrix exponential by scaling-and-squaring with a degree-13 Pade
// approximant.  Input must be square and finite.
Mat mat_exp(const Mat& m);

// Zero-order-hold discretization of (A, B) over step T:
//   A_d = exp(A T),  B_d = (integral_0^T exp(A s) ds) B,
// evaluated jointly through the exponential of the block matrix
// [[A, B], [0, 0]] * T so the pair stays consistent even for singular A.
std::pair<Mat, Mat> zoh_pair(const Mat& a, const Mat& b, double t);

// Discretized process-noise covariance for continuous white noise with
// intensity q_c (symmetric PSD):
//   Q_d = integral_0^T exp(A s) q_c exp(A^T s) ds,
// computed from the exponential of [[-A, q_c], [0, A^T]] * T (Van Loan).
// The result is symmetrized and validated PSD.
Mat zoh_process_noise(const Mat& a, const Mat& q_c, double t);

// Unique stabilizing solution S of the discrete algebraic Riccati equation
//   S = A^T S A - A^T S B (U + B^T S B)^{-1} B^T S A + W
// via the structure-preserving doubling algorithm.  W must be symmetric PSD
// and U symmetric PD.  Throws ConvergenceError (with the attained residual)
// if the iteration stalls or the fixed-point residual check fails.
Mat solve_dare(const Mat& a, const Mat& b, const Mat& w, const Mat& u);

// Unique solution X of the discrete Lyapunov equation  X = A X A^T + Q  for
// symmetric PSD Q, by doubling: X <- X + M X M^T, M <- M^2.  Requires the
// spectral radius of A to be below 1 (throws StabilityError otherwise).
Mat solve_dlyap(const Mat& a, const Mat& q);

// Chi-squared CDF with dof > 0 degrees of freedom, i.e. the regularized lower
// incomplete gamma function P(dof/2, x/2).  Throws DomainError for x < 0.
double chi2_cdf(double dof, double x);

// Inverse of chi2_cdf in x: the x with CDF(x) = p, for p in (0, 1).
// Newton iterations safeguarded by bisection.
double chi2_quantile(double dof, double p);

// Largest eigenvalue and eigenvector of the symmetric-definite generalized
// problem  M v = lambda N v  with M symmetric and N symmetric PD, solved via
// the Cholesky reduction N = L L^T.  The returned vector is normalized so
// that v^T N v = 1.  Throws ConditioningError when N is numerically singular
// (smallest eigenvalue <= 1e-12 times the largest).
std::pair<double, Vec> generalized_symmetric_eig_max(const Mat& m, const Mat& n);

}  // namespace swm
