#pragma once

#include "swm/plant.hpp"
#include "swm/types.hpp"

namespace swm {

// Quadratic running-cost weights for J = lim E (1/N) sum x^T W x + u^T U u.
struct CostWeights {
    Mat w;  // n x n, symmetric PSD
    Mat u;  // p x p, symmetric PD

    void validate(const DiscretePlant& plant) const;
};

// Steady-state Kalman synthesis: prediction-error covariance P, gain K, and
// the innovation covariance C P C^T + R_d.
struct KalmanSynthesis {
    Mat k;          // n x m
    Mat p;          // n x n
    Mat resid_cov;  // m x m, PD
};

// Steady-state LQR synthesis: Riccati solution S and feedback gain L with
// u = L xhat.
struct LqrSynthesis {
    Mat l;  // p x n
    Mat s;  // n x n, PSD
};

// Everything the detector and watermark design consume, assembled once.
struct ClosedLoopDesign {
    Mat k;            // Kalman gain
    Mat p;            // prediction error covariance
    Mat l;            // LQG feedback gain
    Mat s;            // control Riccati solution
    Mat resid_cov;    // innovation covariance C P C^T + R_d
    Mat closed_loop;  // (A_d + B_d L)(I - K C)
    double nominal_cost = 0.0;  // steady-state cost without watermark
};

struct StabilityVerdict {
    bool stable = false;
    double spectral_radius = 0.0;
};

// Stabilizing filter solution: P solves
//   P = A_d P A_d^T - A_d P C^T (C P C^T + R_d)^{-1} C P A_d^T + Q_d
// (the control Riccati solver applied to transposed data), then
// K = P C^T (C P C^T + R_d)^{-1}.  Requires (A_d, C) detectable and
// (A_d, Q_d^{1/2}) stabilizable; failure surfaces as ConvergenceError from
// the solver or StabilityError from the post-synthesis radius check.
KalmanSynthesis kalman_steady(const DiscretePlant& plant);

// Stabilizing control solution: S solves
//   S = A_d^T S A_d - A_d^T S B_d (U + B_d^T S B_d)^{-1} B_d^T S A_d + W
// and L = -(U + B_d^T S B_d)^{-1} B_d^T S A_d.  The resulting A_d + B_d L is
// verified strictly stable.
LqrSynthesis lqg_gain(const DiscretePlant& plant, const CostWeights& weights);

// Bundles the two syntheses, forms the replay-sensitivity matrix
// (A_d + B_d L)(I - K C), and evaluates the nominal steady-state cost in
// closed form (see lqg_cost below with zero injected covariance).
ClosedLoopDesign assemble_closed_loop(const DiscretePlant& plant, const Mat& k, const Mat& p,
                                      const Mat& l, const Mat& s, const CostWeights& weights);

// Convenience wrapper: kalman_steady + lqg_gain + assemble_closed_loop.
ClosedLoopDesign design_closed_loop(const DiscretePlant& plant, const CostWeights& weights);

// Spectral radius of the replay-sensitivity matrix with a strict threshold
// at 1: stable means every replayed trajectory re-converges and an
// un-watermarked detector stays blind.
StabilityVerdict classify_A_script(const ClosedLoopDesign& design);

// Exact steady-state cost of the loop when an i.i.d. N(0, cov_q) excitation
// is added to the control.  Evaluated from the joint stationary covariance
// of (predicted estimate, prediction error); cov_q = 0 gives the nominal
// cost.  Throws StabilityError if the loop is not internally stable.
double lqg_cost(const DiscretePlant& plant, const ClosedLoopDesign& design,
                const CostWeights& weights, const Mat& cov_q);

}  // namespace swm
