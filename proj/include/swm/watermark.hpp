#pragma once

#include <string>
#include <vector>

#include "swm/lqg.hpp"
#include "swm/plant.hpp"
#include "swm/types.hpp"

namespace swm {

// A designed watermark: injected-noise covariance, its steady closed-loop
// footprint, and the two scalars the budget trade-off is made of.
struct WatermarkDesign {
    Mat cov_q;              // p x p PSD injection covariance
    Mat steady_u;           // n x n PSD, solves  steady_u = A steady_u A^T + B cov_q B^T
    double expected_shift = 0.0;  // asymptotic detector-statistic increase under replay
    double cost_increase = 0.0;   // exact LQG penalty trace[(U + B^T S B) cov_q]
    int window = 1;               // detector window the shift is quoted for
};

// One sampling period evaluated during a sweep.
struct SweepRow {
    double t = 0.0;
    Mat cov_q;
    double expected_shift = 0.0;
    double cost_increase = 0.0;
    double nominal_cost = 0.0;
    double spectral_radius = 0.0;  // of the replay-sensitivity matrix
    // "ok", "watermark-unnecessary" (replay already detectable), or "failed".
    std::string status;
    std::string detail;  // diagnostic for non-ok rows
};

struct SweepResult {
    std::vector<SweepRow> rows;   // grid order
    double argmax_t = 0.0;        // maximizer of expected_shift among ok rows
    double argmax_shift = 0.0;    // shift attained at argmax_t
    bool refined = false;         // golden-section refinement applied
};

// The do-nothing design: zero covariance, zero footprint.  Baseline for
// detection comparisons.
WatermarkDesign zero_watermark(const DiscretePlant& plant);

// Asymptotic increase of the windowed detector statistic under replay:
//   2 * trace(C^T resid_cov^{-1} C steady_u) * window.
double expected_shift(const DiscretePlant& plant, const ClosedLoopDesign& design,
                      const Mat& steady_u, int window);

// Exact LQG penalty of injecting N(0, cov_q):  trace[(U + B_d^T S B_d) cov_q].
double cost_increase(const DiscretePlant& plant, const Mat& s, const CostWeights& weights,
                     const Mat& cov_q);

// Optimal injection covariance at a fixed sampling period: maximizes the
// expected shift subject to cost_increase <= budget_mu.  Both sides are
// linear in cov_q, so the optimum is the rank-one matrix
//   cov_q* = budget_mu * v v^T
// where v is the top generalized eigenvector of (M, N) scaled to v^T N v = 1,
// M = B_d^T Phi B_d with  Phi = A^T Phi A + C^T resid_cov^{-1} C,  and
// N = U + B_d^T S B_d.  Throws StabilityError when the replay-sensitivity
// matrix is unstable (replay is then detectable with no watermark at all).
// When M vanishes (the injection cannot reach the residuals) the design
// degenerates to cov_q = 0 with a stderr note.
WatermarkDesign optimize_watermark_fixed_T(const DiscretePlant& plant,
                                           const ClosedLoopDesign& design,
                                           const CostWeights& weights, double budget_mu,
                                           int window);

// Small-step linearization of the shift, valid as t -> 0:
//   2 * trace(C^T r_c^{-1} C steady_u) * window * t
// (the innovation covariance approaches r_c / t, so its inverse contributes
// the factor t).  Used to confirm the vanishing-detectability limit.
double small_T_shift_approx(const ContinuousPlant& cont, const Mat& steady_u, int window,
                            double t);

// Evaluates the fixed-T design over a grid of sampling periods.  Continuous
// weights are carried unchanged to every period (the running-cost weights do
// not rescale with t).  Per-period failures are recorded in the row rather
// than thrown.  With refine = true, a golden-section search between the grid
// neighbors of the best row sharpens argmax_t (the shift is assumed unimodal
// in t; all rows stay visible so a violation of that assumption shows up in
// the output).
SweepResult sweep_sampling_period(const ContinuousPlant& cont, const CostWeights& weights,
                                  const std::vector<double>& t_grid, double t_bar,
                                  double budget_mu, int window, bool refine = false);

}  // namespace swm
