#include "swm/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace swm {

namespace {

// Degree-13 Pade coefficients and scaling threshold from Higham's expm.
constexpr double kTheta13 = 5.371920351148152;

Mat pade13(const Mat& m) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const Eigen::Index n = m.rows();
    const Mat ident = Mat::Identity(n, n);
    const Mat m2 = m * m;
    const Mat m4 = m2 * m2;
    const Mat m6 = m4 * m2;
    const Mat u = m * (m6 * (b[13] * m6 + b[11] * m4 + b[9] * m2) + b[7] * m6 + b[5] * m4 +
                       b[3] * m2 + b[1] * ident);
    const Mat v = m6 * (b[12] * m6 + b[10] * m4 + b[8] * m2) + b[6] * m6 + b[4] * m4 + b[2] * m2 +
                  b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

Mat mat_exp(const Mat& m) {
    require_square(m, "mat_exp");
    require_finite(m, "mat_exp");
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm
    int squarings = 0;
    Mat scaled = m;
    if (norm > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
        scaled /= std::exp2(squarings);
    }
    Mat e = pade13(scaled);
    for (int i = 0; i < squarings; ++i) e = e * e;
    return e;
}

std::pair<Mat, Mat> zoh_pair(const Mat& a, const Mat& b, double t) {
    require_square(a, "zoh_pair: a");
    if (b.rows() != a.rows()) {
        throw DimensionError("zoh_pair: b has " + std::to_string(b.rows()) +
                             " rows, expected " + std::to_string(a.rows()));
    }
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("zoh_pair: step must be positive and finite");
    }
    const Eigen::Index n = a.rows();
    const Eigen::Index p = b.cols();
    Mat block = Mat::Zero(n + p, n + p);
    block.topLeftCorner(n, n) = a;
    block.topRightCorner(n, p) = b;
    const Mat e = mat_exp(block * t);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, p)};
}

Mat zoh_process_noise(const Mat& a, const Mat& q_c, double t) {
    require_square(a, "zoh_process_noise: a");
    require_square(q_c, "zoh_process_noise: q_c");
    if (q_c.rows() != a.rows()) {
        throw DimensionError("zoh_process_noise: q_c is " + std::to_string(q_c.rows()) + "x" +
                             std::to_string(q_c.cols()) + ", expected order " +
                             std::to_string(a.rows()));
    }
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("zoh_process_noise: step must be positive and finite");
    }
    sanitize_psd(q_c, "zoh_process_noise: q_c");
    const Eigen::Index n = a.rows();
    Mat block = Mat::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = -a;
    block.topRightCorner(n, n) = q_c;
    block.bottomRightCorner(n, n) = a.transpose();
    const Mat e = mat_exp(block * t);
    // exp of the block gives [[*, Phi12], [0, Phi22]] with Phi22 = exp(A^T T)
    // and Q_d = Phi22^T Phi12.
    const Mat q_d = e.bottomRightCorner(n, n).transpose() * e.topRightCorner(n, n);
    return sanitize_psd(symmetrize(q_d), "zoh_process_noise: result");
}

Mat solve_dare(const Mat& a, const Mat& b, const Mat& w, const Mat& u) {
    require_square(a, "solve_dare: a");
    const Eigen::Index n = a.rows();
    if (b.rows() != n) {
        throw DimensionError("solve_dare: b has " + std::to_string(b.rows()) +
                             " rows, expected " + std::to_string(n));
    }
    if (w.rows() != n || w.cols() != n) {
        throw DimensionError("solve_dare: w must be " + std::to_string(n) + "x" +
                             std::to_string(n));
    }
    if (u.rows() != b.cols() || u.cols() != b.cols()) {
        throw DimensionError("solve_dare: u must match the input count of b");
    }
    require_finite(a, "solve_dare: a");
    require_finite(b, "solve_dare: b");
    sanitize_psd(w, "solve_dare: w");
    require_pd(u, "solve_dare: u");

    // Structure-preserving doubling on the symplectic pencil:
    //   A_{k+1} = A_k (I + G_k H_k)^{-1} A_k
    //   G_{k+1} = G_k + A_k (I + G_k H_k)^{-1} G_k A_k^T
    //   H_{k+1} = H_k + A_k^T H_k (I + G_k H_k)^{-1} A_k
    // with A_0 = A, G_0 = B U^{-1} B^T, H_0 = W; H_k converges to S.
    Mat ak = a;
    Mat gk = b * u.llt().solve(b.transpose());
    Mat hk = w;
    const Mat ident = Mat::Identity(n, n);
    constexpr int kMaxIter = 100;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kMaxIter; ++iter) {
        const Eigen::PartialPivLU<Mat> lu(ident + gk * hk);
        const Mat e_ak = lu.solve(ak);           // (I + G H)^{-1} A
        const Mat e_gk = lu.solve(gk);           // (I + G H)^{-1} G
        const Mat h_next = symmetrize(hk + ak.transpose() * hk * e_ak);
        const Mat g_next = symmetrize(gk + ak * e_gk * ak.transpose());
        const Mat a_next = ak * e_ak;
        const double step = (h_next - hk).cwiseAbs().maxCoeff();
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if (step <= 1e-14 * (1.0 + hk.cwiseAbs().maxCoeff())) break;
        if (iter == kMaxIter - 1) {
            throw ConvergenceError("solve_dare: doubling did not converge", step);
        }
    }

    // Verify the fixed point before handing the solution back.
    const Mat s = symmetrize(hk);
    const Mat bsb = u + b.transpose() * s * b;
    const Mat gain = bsb.ldlt().solve(b.transpose() * s * a);
    const Mat rhs = a.transpose() * s * a - (a.transpose() * s * b) * gain + w;
    residual = (s - rhs).cwiseAbs().maxCoeff();
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    if (!(residual < 1e-10 * scale)) {
        throw ConvergenceError("solve_dare: residual check failed", residual);
    }
    return s;
}

Mat solve_dlyap(const Mat& a, const Mat& q) {
    require_square(a, "solve_dlyap: a");
    if (q.rows() != a.rows() || q.cols() != a.cols()) {
        throw DimensionError("solve_dlyap: q must match the order of a");
    }
    require_finite(a, "solve_dlyap: a");
    if (!is_symmetric(q)) {
        throw DomainError("solve_dlyap: q must be symmetric");
    }
    const double rho = spectral_radius(a);
    if (rho >= 1.0 - 1e-9) {
        throw StabilityError("solve_dlyap: spectral radius " + std::to_string(rho) +
                             " is not strictly inside the unit circle");
    }
    // Doubling: after k steps X = sum_{j<2^k} A^j Q (A^T)^j.
    Mat x = q;
    Mat mk = a;
    constexpr int kMaxIter = 200;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        const Mat term = mk * x * mk.transpose();
        if (term.cwiseAbs().maxCoeff() <= 1e-16 * (1.0 + x.cwiseAbs().maxCoeff())) break;
        x = symmetrize(x + term);
        mk = mk * mk;
        if (iter == kMaxIter - 1) {
            throw ConvergenceError("solve_dlyap: doubling did not converge",
                                   term.cwiseAbs().maxCoeff());
        }
    }
    return x;
}

namespace {

// Regularized lower incomplete gamma P(s, x): series for x < s + 1, Lentz
// continued fraction for the upper tail otherwise.
double gamma_p(double s, double x) {
    if (x <= 0.0) return 0.0;
    const double log_prefix = s * std::log(x) - x - std::lgamma(s);
    if (x < s + 1.0) {
        double term = 1.0 / s;
        double sum = term;
        for (int k = 1; k < 500; ++k) {
            term *= x / (s + k);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return std::min(1.0, std::exp(log_prefix) * sum);
    }
    // Continued fraction for Q(s, x) = 1 - P(s, x).
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k < 500; ++k) {
        const double an = -k * (k - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

}  // namespace

double chi2_cdf(double dof, double x) {
    if (!(dof > 0.0) || !std::isfinite(dof)) {
        throw DomainError("chi2_cdf: dof must be positive and finite");
    }
    if (std::isnan(x) || x < 0.0) throw DomainError("chi2_cdf: x must be >= 0");
    if (x == 0.0) return 0.0;
    return gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double dof, double p) {
    if (!(dof > 0.0) || !std::isfinite(dof)) {
        throw DomainError("chi2_quantile: dof must be positive and finite");
    }
    if (!(p > 0.0) || !(p < 1.0)) {
        throw DomainError("chi2_quantile: p must lie in (0, 1)");
    }

    // Bracket the root, then Newton with bisection fallback.
    double lo = 0.0;
    double hi = std::max(dof, 1.0);
    while (chi2_cdf(dof, hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw ConvergenceError("chi2_quantile: bracket expansion failed", hi);
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chi2_cdf(dof, x) - p;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        // Density of the chi-squared distribution at x.
        const double log_pdf =
            (0.5 * dof - 1.0) * std::log(x) - 0.5 * x - std::lgamma(0.5 * dof) -
            0.5 * dof * std::numbers::ln2;
        const double pdf = std::exp(log_pdf);
        double next = x - f / pdf;
        if (!std::isfinite(next) || next <= lo || next >= hi) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - x) <= 1e-14 * (1.0 + std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

std::pair<double, Vec> generalized_symmetric_eig_max(const Mat& m, const Mat& n) {
    require_square(m, "generalized_symmetric_eig_max: m");
    require_square(n, "generalized_symmetric_eig_max: n");
    if (m.rows() != n.rows()) {
        throw DimensionError("generalized_symmetric_eig_max: m and n must have equal order");
    }
    if (!is_symmetric(m)) {
        throw DomainError("generalized_symmetric_eig_max: m must be symmetric");
    }
    if (!is_symmetric(n)) {
        throw DomainError("generalized_symmetric_eig_max: n must be symmetric");
    }
    {
        const Eigen::SelfAdjointEigenSolver<Mat> probe(n, Eigen::EigenvaluesOnly);
        const double lo = probe.eigenvalues().minCoeff();
        const double hi = probe.eigenvalues().maxCoeff();
        if (!(lo > 1e-12 * std::max(hi, 0.0))) {
            throw ConditioningError(
                "generalized_symmetric_eig_max: n is numerically singular (eigenvalue ratio " +
                std::to_string(lo / std::max(hi, 1e-300)) + ")");
        }
    }
    // Reduce M v = lambda N v to the ordinary symmetric problem
    // (L^{-1} M L^{-T}) w = lambda w with N = L L^T and v = L^{-T} w.
    const Eigen::LLT<Mat> llt(symmetrize(n));
    const Mat l = llt.matrixL();
    const Mat reduced = symmetrize(
        l.triangularView<Eigen::Lower>().solve(
            l.triangularView<Eigen::Lower>().solve(symmetrize(m)).transpose()));
    const Eigen::SelfAdjointEigenSolver<Mat> eig(reduced);
    if (eig.info() != Eigen::Success) {
        throw ConvergenceError("generalized_symmetric_eig_max: eigensolver failed", 0.0);
    }
    const Eigen::Index last = reduced.rows() - 1;
    const double lambda = eig.eigenvalues()[last];
    const Vec w = eig.eigenvectors().col(last);
    Vec v = l.transpose().triangularView<Eigen::Upper>().solve(w);
    // w is unit-norm, so v already satisfies v^T N v = 1; renormalize to shed
    // rounding and fix a sign convention (largest-magnitude entry positive).
    v /= std::sqrt(v.dot(n * v));
    Eigen::Index arg_max = 0;
    v.cwiseAbs().maxCoeff(&arg_max);
    if (v[arg_max] < 0.0) v = -v;
    return {lambda, v};
}

}  // namespace swm
