#include "swm/types.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace swm {

void require_finite(const Mat& m, const std::string& name) {
    if (!m.allFinite()) {
        throw DomainError(name + ": entries must be finite");
    }
}

void require_square(const Mat& m, const std::string& name) {
    if (m.rows() != m.cols()) {
        throw DimensionError(name + ": expected square matrix, got " + std::to_string(m.rows()) +
                             "x" + std::to_string(m.cols()));
    }
}

bool is_symmetric(const Mat& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Mat sanitize_psd(const Mat& m, const std::string& name) {
    require_square(m, name);
    require_finite(m, name);
    if (!is_symmetric(m)) {
        throw DomainError(name + ": matrix is not symmetric");
    }
    const Mat sym = symmetrize(m);
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    const Vec evals = eig.eigenvalues();
    const double top = std::max(evals.cwiseAbs().maxCoeff(), 0.0);
    const double floor = -1e-10 * std::max(top, 1.0);
    if (evals.minCoeff() < floor) {
        throw DomainError(name + ": matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(evals.minCoeff()) + ")");
    }
    if (evals.minCoeff() < 0.0) {
        // Tiny negative drift: clip to the PSD cone instead of failing.
        Vec clipped = evals.cwiseMax(0.0);
        return symmetrize(eig.eigenvectors() * clipped.asDiagonal() *
                          eig.eigenvectors().transpose());
    }
    return sym;
}

void require_pd(const Mat& m, const std::string& name) {
    require_square(m, name);
    require_finite(m, name);
    if (!is_symmetric(m)) {
        throw DomainError(name + ": matrix is not symmetric");
    }
    Eigen::LLT<Mat> llt(symmetrize(m));
    if (llt.info() != Eigen::Success) {
        throw DomainError(name + ": matrix is not positive definite");
    }
}

double spectral_radius(const Mat& m) {
    require_square(m, "spectral_radius");
    if (m.rows() == 0) return 0.0;
    Eigen::EigenSolver<Mat> eig(m, /*computeEigenvectors=*/false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace swm
