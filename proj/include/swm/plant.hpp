#pragma once

#include <vector>

#include "swm/types.hpp"

namespace swm {

// Continuous-time LTI plant
//   dx/dt = A x + B u + w,   y = C x + v,
// where w is white noise with intensity (PSD) q_c and the discrete-time
// measurement noise v has covariance r_d = r_c / T after sampling at step T.
struct ContinuousPlant {
    Mat a;    // n x n
    Mat b;    // n x p
    Mat c;    // m x n
    Mat q_c;  // n x n, symmetric PSD process-noise intensity
    Mat r_c;  // m x m, symmetric PD measurement-noise intensity

    Eigen::Index state_dim() const { return a.rows(); }
    Eigen::Index input_dim() const { return b.cols(); }
    Eigen::Index output_dim() const { return c.rows(); }

    // Throws DimensionError / DomainError on inconsistent blocks.
    void validate() const;
};

// Sampled-data equivalent at step T:
//   x_{k+1} = A_d x_k + B_d u_k + w_k,  w_k ~ N(0, Q_d)
//   y_k     = C x_k + v_k,              v_k ~ N(0, R_d)
struct DiscretePlant {
    Mat a_d;
    Mat b_d;
    Mat c;
    Mat q_d;
    Mat r_d;
    double step = 0.0;

    Eigen::Index state_dim() const { return a_d.rows(); }
    Eigen::Index input_dim() const { return b_d.cols(); }
    Eigen::Index output_dim() const { return c.rows(); }
};

// Exact zero-order-hold discretization of the plant at step t, including the
// process-noise integral and the sampled measurement covariance r_c / t.
DiscretePlant discretize(const ContinuousPlant& plant, double t);

// Hover-linearized quadrotor parameters.  Defaults follow a small research
// airframe; inertia entries must be positive.
struct QuadrotorParams {
    double mass = 0.6;       // kg
    double inertia_x = 0.0092;  // kg m^2
    double inertia_y = 0.0092;  // kg m^2
    double inertia_z = 0.0101;  // kg m^2
    double gravity = 9.81;   // m/s^2
};

// Twelve-state hover linearization.  State ordering:
//   [vx, px, vy, py, vz, pz, wx, roll, wy, pitch, wz, yaw]
// with inputs [thrust deviation, roll torque, pitch torque, yaw torque] and
// measured outputs [px, py, pz, yaw].  The thrust input is the deviation
// from hover thrust, so the linearization has no affine term; accelerations
// couple as vx' = +g*pitch, vy' = -g*roll, vz' = -F/m.  q_c and r_c are the
// noise spectral densities (defaults 1e-3 I and 1e-2 I).
ContinuousPlant quadrotor_hover_plant(const QuadrotorParams& params, const Mat& q_c,
                                      const Mat& r_c);
ContinuousPlant quadrotor_hover_plant(const QuadrotorParams& params = {});

// Validation oracle for discretize: integrates dx/dt = A x + B u + w over
// [0, t] in `substeps` matrix-exponential slices with u held constant and w
// piecewise-constant with covariance q_c / (t / substeps) per slice, built
// from the supplied standard-normal draws (substeps * n of them, slice
// major).  With zero draws this reproduces A_d x + B_d u exactly.
Vec continuous_oracle_step(const ContinuousPlant& plant, const Vec& x, const Vec& u_held,
                           double t, int substeps, const std::vector<double>& noise_draws);

}  // namespace swm
