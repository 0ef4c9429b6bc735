#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace swm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// ============================================================================
// Errors
// ============================================================================

// Incompatible matrix shapes.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside its mathematical domain (T <= 0, prob outside (0,1), ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Iterative solver failed to reach its residual tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Spectral-radius precondition violated (divergent series / unstable loop).
class StabilityError : public std::runtime_error {
public:
    explicit StabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Matrix too close to singular for the requested factorization.
class ConditioningError : public std::runtime_error {
public:
    explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid scenario configuration (bad field value, inconsistent sections).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// ============================================================================
// Matrix validation helpers
// ============================================================================

void require_finite(const Mat& m, const std::string& name);
void require_square(const Mat& m, const std::string& name);

bool is_symmetric(const Mat& m, double rel_tol = 1e-10);

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Validates that `m` is symmetric PSD up to floating-point drift: symmetry to
// 1e-10 relative, eigenvalue floor at -1e-10 relative to the largest magnitude.
// Eigenvalues inside the floor are clipped to zero (warning on stderr);
// anything below it throws DomainError.
Mat sanitize_psd(const Mat& m, const std::string& name);

// Throws DomainError unless `m` is symmetric positive definite.
void require_pd(const Mat& m, const std::string& name);

// Largest eigenvalue magnitude of a (generally nonsymmetric) square matrix.
double spectral_radius(const Mat& m);

}  // namespace swm
