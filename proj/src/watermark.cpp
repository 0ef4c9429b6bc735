#include "swm/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "swm/numerics.hpp"

namespace swm {

WatermarkDesign zero_watermark(const DiscretePlant& plant) {
    WatermarkDesign wm;
    wm.cov_q = Mat::Zero(plant.input_dim(), plant.input_dim());
    wm.steady_u = Mat::Zero(plant.state_dim(), plant.state_dim());
    return wm;
}

double expected_shift(const DiscretePlant& plant, const ClosedLoopDesign& design,
                      const Mat& steady_u, int window) {
    if (window < 1) throw DomainError("expected_shift: window must be >= 1");
    if (steady_u.rows() != plant.state_dim() || steady_u.cols() != plant.state_dim()) {
        throw DimensionError("expected_shift: steady_u must be n x n");
    }
    // trace(C^T P^{-1} C U) = trace(P^{-1} C U C^T), evaluated with a solve.
    const Mat cuc = plant.c * steady_u * plant.c.transpose();
    return 2.0 * design.resid_cov.ldlt().solve(cuc).trace() * window;
}

double cost_increase(const DiscretePlant& plant, const Mat& s, const CostWeights& weights,
                     const Mat& cov_q) {
    if (s.rows() != plant.state_dim() || s.cols() != plant.state_dim()) {
        throw DimensionError("cost_increase: s must be n x n");
    }
    if (cov_q.rows() != plant.input_dim() || cov_q.cols() != plant.input_dim()) {
        throw DimensionError("cost_increase: cov_q must be p x p");
    }
    const Mat n = weights.u + plant.b_d.transpose() * s * plant.b_d;
    return (n * cov_q).trace();
}

WatermarkDesign optimize_watermark_fixed_T(const DiscretePlant& plant,
                                           const ClosedLoopDesign& design,
                                           const CostWeights& weights, double budget_mu,
                                           int window) {
    if (!(budget_mu > 0.0) || !std::isfinite(budget_mu)) {
        throw DomainError("optimize_watermark_fixed_T: budget_mu must be positive");
    }
    if (window < 1) throw DomainError("optimize_watermark_fixed_T: window must be >= 1");
    const StabilityVerdict verdict = classify_A_script(design);
    if (!verdict.stable) {
        throw StabilityError(
            "optimize_watermark_fixed_T: replay-sensitivity matrix has spectral radius " +
            std::to_string(verdict.spectral_radius) +
            " >= 1; replay diverges on its own and no watermark is needed");
    }

    const Eigen::Index n_dim = plant.state_dim();
    const Eigen::Index p_dim = plant.input_dim();

    // Both the objective and the budget are linear in cov_q:
    //   shift(cov_q)  = 2 * window * trace(M cov_q),  M = B^T Phi B,
    //   penalty(cov_q) = trace(N cov_q),              N = U + B^T S B,
    // with Phi the adjoint accumulation of C^T resid_cov^{-1} C along the
    // replay-sensitivity dynamics.  The maximum of a linear functional over
    // {cov_q >= 0 : trace(N cov_q) <= mu} sits at a rank-one extreme point
    // aligned with the top generalized eigenvector of (M, N).
    const Mat pinv_c = design.resid_cov.ldlt().solve(plant.c);
    const Mat weight_core = symmetrize(plant.c.transpose() * pinv_c);
    const Mat phi = solve_dlyap(design.closed_loop.transpose(), weight_core);
    const Mat m_mat = symmetrize(plant.b_d.transpose() * phi * plant.b_d);
    const Mat n_mat = symmetrize(weights.u + plant.b_d.transpose() * design.s * plant.b_d);

    WatermarkDesign wm;
    wm.window = window;
    if (m_mat.cwiseAbs().maxCoeff() <=
        1e-14 * (1.0 + phi.cwiseAbs().maxCoeff()) * (1.0 + n_mat.cwiseAbs().maxCoeff())) {
        std::cerr << "optimize_watermark_fixed_T: injection cannot reach the residuals "
                     "(B^T Phi B = 0); returning a zero watermark\n";
        wm.cov_q = Mat::Zero(p_dim, p_dim);
        wm.steady_u = Mat::Zero(n_dim, n_dim);
        return wm;
    }

    const auto [lambda, v] = generalized_symmetric_eig_max(m_mat, n_mat);
    (void)lambda;
    const double v_norm = v.dot(n_mat * v);  // 1 up to rounding
    wm.cov_q = symmetrize((budget_mu / v_norm) * (v * v.transpose()));
    wm.steady_u = solve_dlyap(design.closed_loop,
                              symmetrize(plant.b_d * wm.cov_q * plant.b_d.transpose()));
    wm.expected_shift = expected_shift(plant, design, wm.steady_u, window);
    wm.cost_increase = cost_increase(plant, design.s, weights, wm.cov_q);
    return wm;
}

double small_T_shift_approx(const ContinuousPlant& cont, const Mat& steady_u, int window,
                            double t) {
    if (!(t > 0.0)) throw DomainError("small_T_shift_approx: t must be positive");
    if (window < 1) throw DomainError("small_T_shift_approx: window must be >= 1");
    const Mat cuc = cont.c * steady_u * cont.c.transpose();
    return 2.0 * cont.r_c.ldlt().solve(cuc).trace() * window * t;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Full synthesis + optimization at one period; -inf signals "not a
// candidate" (failed or watermark-unnecessary).
double shift_at_period(const ContinuousPlant& cont, const CostWeights& weights, double t,
                       double budget_mu, int window) {
    try {
        const DiscretePlant plant = discretize(cont, t);
        const ClosedLoopDesign design = design_closed_loop(plant, weights);
        if (!classify_A_script(design).stable) {
            return -std::numeric_limits<double>::infinity();
        }
        const WatermarkDesign wm =
            optimize_watermark_fixed_T(plant, design, weights, budget_mu, window);
        return wm.expected_shift;
    } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

SweepResult sweep_sampling_period(const ContinuousPlant& cont, const CostWeights& weights,
                                  const std::vector<double>& t_grid, double t_bar,
                                  double budget_mu, int window, bool refine) {
    if (t_grid.empty()) throw DomainError("sweep_sampling_period: grid is empty");
    if (!(t_bar > 0.0)) throw DomainError("sweep_sampling_period: t_bar must be positive");
    for (double t : t_grid) {
        if (!(t > 0.0) || !(t <= t_bar)) {
            throw DomainError("sweep_sampling_period: grid point " + std::to_string(t) +
                              " outside (0, t_bar]");
        }
    }
    if (!(budget_mu > 0.0)) {
        throw DomainError("sweep_sampling_period: budget_mu must be positive");
    }

    SweepResult result;
    result.rows.reserve(t_grid.size());
    std::size_t best_index = t_grid.size();  // sentinel: none yet
    for (double t : t_grid) {
        SweepRow row;
        row.t = t;
        row.expected_shift = kNan;
        row.cost_increase = kNan;
        row.nominal_cost = kNan;
        row.spectral_radius = kNan;
        try {
            const DiscretePlant plant = discretize(cont, t);
            const ClosedLoopDesign design = design_closed_loop(plant, weights);
            row.nominal_cost = design.nominal_cost;
            row.spectral_radius = classify_A_script(design).spectral_radius;
            if (row.spectral_radius >= 1.0) {
                row.status = "watermark-unnecessary";
                row.detail = "replay-sensitivity matrix unstable; replay detectable unaided";
            } else {
                const WatermarkDesign wm =
                    optimize_watermark_fixed_T(plant, design, weights, budget_mu, window);
                row.cov_q = wm.cov_q;
                row.expected_shift = wm.expected_shift;
                row.cost_increase = wm.cost_increase;
                row.status = "ok";
                if (best_index == t_grid.size() ||
                    row.expected_shift > result.rows[best_index].expected_shift) {
                    best_index = result.rows.size();
                }
            }
        } catch (const std::exception& e) {
            row.status = "failed";
            row.detail = e.what();
        }
        result.rows.push_back(std::move(row));
    }

    if (best_index == t_grid.size()) {
        result.argmax_t = kNan;
        result.argmax_shift = kNan;
        return result;
    }
    result.argmax_t = result.rows[best_index].t;
    result.argmax_shift = result.rows[best_index].expected_shift;

    if (refine && t_grid.size() >= 2) {
        // Golden-section search on the bracket formed by the grid neighbors
        // of the best row (the best row's own period when it sits on an
        // edge).  Unimodality is an assumption; the grid rows remain in the
        // output so a violation stays visible.
        const std::size_t i = best_index;
        double lo = (i > 0) ? result.rows[i - 1].t : result.rows[i].t;
        double hi = (i + 1 < result.rows.size()) ? result.rows[i + 1].t : result.rows[i].t;
        const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
        const double tol = 1e-3 * (hi - lo);
        double x1 = hi - inv_phi * (hi - lo);
        double x2 = lo + inv_phi * (hi - lo);
        double f1 = shift_at_period(cont, weights, x1, budget_mu, window);
        double f2 = shift_at_period(cont, weights, x2, budget_mu, window);
        double best_t = result.argmax_t;
        double best_f = result.argmax_shift;
        for (int iter = 0; iter < 80 && hi - lo > tol; ++iter) {
            if (f1 > best_f) { best_f = f1; best_t = x1; }
            if (f2 > best_f) { best_f = f2; best_t = x2; }
            if (f1 >= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = shift_at_period(cont, weights, x1, budget_mu, window);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = shift_at_period(cont, weights, x2, budget_mu, window);
            }
        }
        if (f1 > best_f) { best_f = f1; best_t = x1; }
        if (f2 > best_f) { best_f = f2; best_t = x2; }
        result.argmax_t = best_t;
        result.argmax_shift = best_f;
        result.refined = true;
    }
    return result;
}

}  // namespace swm
