#include "swm/plant.hpp"

#include <string>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "swm/numerics.hpp"

namespace swm {

void ContinuousPlant::validate() const {
    require_square(a, "plant: a");
    if (b.rows() != a.rows()) {
        throw DimensionError("plant: b has " + std::to_string(b.rows()) + " rows, expected " +
                             std::to_string(a.rows()));
    }
    if (c.cols() != a.cols()) {
        throw DimensionError("plant: c has " + std::to_string(c.cols()) + " columns, expected " +
                             std::to_string(a.cols()));
    }
    if (b.cols() < 1) throw DimensionError("plant: at least one input required");
    if (c.rows() < 1) throw DimensionError("plant: at least one output required");
    require_finite(a, "plant: a");
    require_finite(b, "plant: b");
    require_finite(c, "plant: c");
    if (q_c.rows() != a.rows() || q_c.cols() != a.rows()) {
        throw DimensionError("plant: q_c must be " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.rows()));
    }
    if (r_c.rows() != c.rows() || r_c.cols() != c.rows()) {
        throw DimensionError("plant: r_c must be " + std::to_string(c.rows()) + "x" +
                             std::to_string(c.rows()));
    }
    sanitize_psd(q_c, "plant: q_c");
    require_pd(r_c, "plant: r_c");
}

DiscretePlant discretize(const ContinuousPlant& plant, double t) {
    plant.validate();
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("discretize: step must be positive and finite");
    }
    DiscretePlant d;
    std::tie(d.a_d, d.b_d) = zoh_pair(plant.a, plant.b, t);
    d.c = plant.c;
    d.q_d = zoh_process_noise(plant.a, plant.q_c, t);
    d.r_d = plant.r_c / t;
    d.step = t;
    return d;
}

ContinuousPlant quadrotor_hover_plant(const QuadrotorParams& params, const Mat& q_c,
                                      const Mat& r_c) {
    if (!(params.mass > 0.0) || !(params.inertia_x > 0.0) || !(params.inertia_y > 0.0) ||
        !(params.inertia_z > 0.0)) {
        throw DomainError("quadrotor_hover_plant: mass and inertia must be positive");
    }
    if (q_c.rows() != 12 || q_c.cols() != 12) {
        throw DimensionError("quadrotor_hover_plant: q_c must be 12x12");
    }
    if (r_c.rows() != 4 || r_c.cols() != 4) {
        throw DimensionError("quadrotor_hover_plant: r_c must be 4x4");
    }
    ContinuousPlant plant;
    plant.a = Mat::Zero(12, 12);
    // Translational rates couple into attitude under hover linearization:
    // x-acceleration from pitch, y-acceleration from roll, z from thrust.
    plant.a(0, 9) = params.gravity;    // vx' = g * pitch
    plant.a(1, 0) = 1.0;               // px' = vx
    plant.a(2, 7) = -params.gravity;   // vy' = -g * roll
    plant.a(3, 2) = 1.0;               // py' = vy
    plant.a(5, 4) = 1.0;               // pz' = vz
    plant.a(7, 6) = 1.0;               // roll' = wx
    plant.a(9, 8) = 1.0;               // pitch' = wy
    plant.a(11, 10) = 1.0;             // yaw' = wz

    plant.b = Mat::Zero(12, 4);
    plant.b(4, 0) = -1.0 / params.mass;       // vz' from thrust deviation (z down)
    plant.b(6, 1) = 1.0 / params.inertia_x;   // wx' from roll torque
    plant.b(8, 2) = 1.0 / params.inertia_y;   // wy' from pitch torque
    plant.b(10, 3) = 1.0 / params.inertia_z;  // wz' from yaw torque

    plant.c = Mat::Zero(4, 12);
    plant.c(0, 1) = 1.0;   // px
    plant.c(1, 3) = 1.0;   // py
    plant.c(2, 5) = 1.0;   // pz
    plant.c(3, 11) = 1.0;  // yaw

    plant.q_c = q_c;
    plant.r_c = r_c;
    plant.validate();
    return plant;
}

ContinuousPlant quadrotor_hover_plant(const QuadrotorParams& params) {
    return quadrotor_hover_plant(params, 1e-3 * Mat::Identity(12, 12),
                                 1e-2 * Mat::Identity(4, 4));
}

Vec continuous_oracle_step(const ContinuousPlant& plant, const Vec& x, const Vec& u_held,
                           double t, int substeps, const std::vector<double>& noise_draws) {
    plant.validate();
    if (substeps < 1) throw DomainError("continuous_oracle_step: substeps must be >= 1");
    if (!(t > 0.0)) throw DomainError("continuous_oracle_step: t must be positive");
    const Eigen::Index n = plant.state_dim();
    if (x.size() != n || u_held.size() != plant.input_dim()) {
        throw DimensionError("continuous_oracle_step: state/input size mismatch");
    }
    if (static_cast<Eigen::Index>(noise_draws.size()) != substeps * n) {
        throw DimensionError("continuous_oracle_step: expected substeps*n noise draws");
    }
    const double h = t / substeps;
    // One slice advances x by exp(A h) x + (integral of exp(A s) ds)(B u + w)
    // with w constant over the slice; the integral comes from the block
    // exponential of [[A, I], [0, 0]] * h.
    Mat block = Mat::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = plant.a;
    block.topRightCorner(n, n) = Mat::Identity(n, n);
    const Mat e = mat_exp(block * h);
    const Mat a_h = e.topLeftCorner(n, n);
    const Mat int_h = e.topRightCorner(n, n);
    // Piecewise-constant noise of covariance q_c / h per slice.
    const Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(plant.q_c) / h);
    Vec roots = eig.eigenvalues();
    for (Eigen::Index i = 0; i < n; ++i) roots[i] = std::sqrt(std::max(roots[i], 0.0));
    const Mat noise_fac = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();

    const Vec drive = plant.b * u_held;
    Vec state = x;
    for (int j = 0; j < substeps; ++j) {
        Vec draw(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            draw[i] = noise_draws[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) +
                                  static_cast<std::size_t>(i)];
        }
        state = a_h * state + int_h * (drive + noise_fac * draw);
    }
    return state;
}

}  // namespace swm
