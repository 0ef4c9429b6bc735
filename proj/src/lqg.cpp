#include "swm/lqg.hpp"

#include <Eigen/Cholesky>
#include <string>

#include "swm/numerics.hpp"

namespace swm {

void CostWeights::validate(const DiscretePlant& plant) const {
    if (w.rows() != plant.state_dim() || w.cols() != plant.state_dim()) {
        throw DimensionError("weights: w must be " + std::to_string(plant.state_dim()) + "x" +
                             std::to_string(plant.state_dim()));
    }
    if (u.rows() != plant.input_dim() || u.cols() != plant.input_dim()) {
        throw DimensionError("weights: u must be " + std::to_string(plant.input_dim()) + "x" +
                             std::to_string(plant.input_dim()));
    }
    sanitize_psd(w, "weights: w");
    require_pd(u, "weights: u");
}

KalmanSynthesis kalman_steady(const DiscretePlant& plant) {
    // The filter Riccati equation is the control one on transposed data.
    KalmanSynthesis syn;
    syn.p = solve_dare(plant.a_d.transpose(), plant.c.transpose(), plant.q_d, plant.r_d);
    syn.resid_cov = symmetrize(plant.c * syn.p * plant.c.transpose() + plant.r_d);
    syn.k = syn.resid_cov.ldlt().solve(plant.c * syn.p.transpose()).transpose();
    const Mat predictor =
        (Mat::Identity(plant.state_dim(), plant.state_dim()) - syn.k * plant.c) * plant.a_d;
    const double rho = spectral_radius(predictor);
    if (rho >= 1.0) {
        throw StabilityError("kalman_steady: (I - KC)A_d has spectral radius " +
                             std::to_string(rho) + "; (A_d, C) is not detectable");
    }
    return syn;
}

LqrSynthesis lqg_gain(const DiscretePlant& plant, const CostWeights& weights) {
    weights.validate(plant);
    LqrSynthesis syn;
    syn.s = solve_dare(plant.a_d, plant.b_d, weights.w, weights.u);
    const Mat bsb = weights.u + plant.b_d.transpose() * syn.s * plant.b_d;
    syn.l = -bsb.ldlt().solve(plant.b_d.transpose() * syn.s * plant.a_d);
    const double rho = spectral_radius(plant.a_d + plant.b_d * syn.l);
    if (rho >= 1.0) {
        throw StabilityError("lqg_gain: A_d + B_d L has spectral radius " + std::to_string(rho) +
                             "; (A_d, B_d) is not stabilizable or (A_d, W^{1/2}) not detectable");
    }
    return syn;
}

ClosedLoopDesign assemble_closed_loop(const DiscretePlant& plant, const Mat& k, const Mat& p,
                                      const Mat& l, const Mat& s, const CostWeights& weights) {
    const Eigen::Index n = plant.state_dim();
    if (k.rows() != n || k.cols() != plant.output_dim()) {
        throw DimensionError("assemble_closed_loop: k must be n x m");
    }
    if (l.rows() != plant.input_dim() || l.cols() != n) {
        throw DimensionError("assemble_closed_loop: l must be p x n");
    }
    ClosedLoopDesign design;
    design.k = k;
    design.p = p;
    design.l = l;
    design.s = s;
    design.resid_cov = symmetrize(plant.c * p * plant.c.transpose() + plant.r_d);
    design.closed_loop =
        (plant.a_d + plant.b_d * l) * (Mat::Identity(n, n) - k * plant.c);
    design.nominal_cost =
        lqg_cost(plant, design, weights, Mat::Zero(plant.input_dim(), plant.input_dim()));
    return design;
}

ClosedLoopDesign design_closed_loop(const DiscretePlant& plant, const CostWeights& weights) {
    const KalmanSynthesis kal = kalman_steady(plant);
    const LqrSynthesis lqr = lqg_gain(plant, weights);
    return assemble_closed_loop(plant, kal.k, kal.p, lqr.l, lqr.s, weights);
}

StabilityVerdict classify_A_script(const ClosedLoopDesign& design) {
    StabilityVerdict verdict;
    verdict.spectral_radius = spectral_radius(design.closed_loop);
    verdict.stable = verdict.spectral_radius < 1.0;
    return verdict;
}

double lqg_cost(const DiscretePlant& plant, const ClosedLoopDesign& design,
                const CostWeights& weights, const Mat& cov_q) {
    const Eigen::Index n = plant.state_dim();
    const Eigen::Index p = plant.input_dim();
    if (cov_q.rows() != p || cov_q.cols() != p) {
        throw DimensionError("lqg_cost: cov_q must be p x p");
    }
    sanitize_psd(cov_q, "lqg_cost: cov_q");

    // Joint recursion for the predicted estimate z and prediction error e:
    //   z+ = (A+BL) z + (A+BL)KC e + (A+BL)K v + B d
    //   e+ =            A(I-KC) e  -      AK v + w
    // with v ~ N(0, R_d), w ~ N(0, Q_d), watermark d ~ N(0, cov_q).
    const Mat acl = plant.a_d + plant.b_d * design.l;
    const Mat kc = design.k * plant.c;
    const Mat ident = Mat::Identity(n, n);

    Mat f = Mat::Zero(2 * n, 2 * n);
    f.topLeftCorner(n, n) = acl;
    f.topRightCorner(n, n) = acl * kc;
    f.bottomRightCorner(n, n) = plant.a_d * (ident - kc);

    const Mat krk = design.k * plant.r_d * design.k.transpose();
    Mat g = Mat::Zero(2 * n, 2 * n);
    g.topLeftCorner(n, n) = acl * krk * acl.transpose() +
                            plant.b_d * cov_q * plant.b_d.transpose();
    g.topRightCorner(n, n) = -acl * krk * plant.a_d.transpose();
    g.bottomLeftCorner(n, n) = g.topRightCorner(n, n).transpose();
    g.bottomRightCorner(n, n) = plant.a_d * krk * plant.a_d.transpose() + plant.q_d;

    const Mat sigma = solve_dlyap(f, symmetrize(g));
    const Mat sig_zz = sigma.topLeftCorner(n, n);
    const Mat sig_ze = sigma.topRightCorner(n, n);
    const Mat sig_ee = sigma.bottomRightCorner(n, n);

    // x = z + e;  u = L(z + KC e) + LK v + d.
    const Mat cov_x = sig_zz + sig_ze + sig_ze.transpose() + sig_ee;
    const Mat cov_filt =
        sig_zz + sig_ze * kc.transpose() + kc * sig_ze.transpose() + kc * sig_ee * kc.transpose();
    const Mat cov_u = design.l * (cov_filt + krk) * design.l.transpose() + cov_q;
    return (weights.w * cov_x).trace() + (weights.u * cov_u).trace();
}

}  // namespace swm
