#pragma once

#include <Eigen/Dense>

#include "omdcurl/mdp.hpp"

namespace omdcurl {

/// Coordinates (n, x, a) for n = 1..N and a < A-1; the last action a* is implied.
using LowDimPoint = Eigen::VectorXd;

inline Eigen::Index lowdim_size(Dims d) { return static_cast<Eigen::Index>(d.N) * d.S * (d.A - 1); }
inline Eigen::Index lowdim_index(Dims d, int n, int x, int a) {
    return (static_cast<Eigen::Index>(n - 1) * d.S + x) * (d.A - 1) + a;
}

/// Rebuilds the full occupancy by forward recursion; a* entries absorb the remaining state mass.
OccupancyMeasure expand(const LowDimPoint& xi, const EpisodicMDP& mdp);

/// Drops the a* coordinates.
LowDimPoint reduce(const OccupancyMeasure& mu);

/// Layers 1..N of a field flattened to length N*S*A.
Eigen::VectorXd flatten_layers(const Field& f);

/// Lifts a low-dimensional vector to a field with zeros at a* and at layer 0.
Field lift_with_zero(const LowDimPoint& g, Dims d);

/// Affine description B xi + beta of the occupancy; feasibility is B xi >= -beta.
struct ConstraintSystem {
    Eigen::MatrixXd B;
    Eigen::VectorXd beta;

    Eigen::VectorXd slacks(const LowDimPoint& xi) const { return B * xi + beta; }
    bool full_column_rank() const;
};

ConstraintSystem build_constraint_system(const EpisodicMDP& mdp);

/// eps / (A - 1 + sqrt(A - 1)); A >= 2.
double kappa(double eps, int A);

/// Smallest kernel entry.
double kernel_floor(const Kernel& p);

/// expand(kappa 1 + kappa u); requires every kernel entry >= eps and ||u|| <= 1.
OccupancyMeasure sphere_occupancy_point(const Eigen::VectorXd& u, const EpisodicMDP& mdp, double eps);

Eigen::VectorXd sample_unit_sphere(Eigen::Index dim, Rng& rng);
Eigen::VectorXd sample_unit_ball(Eigen::Index dim, Rng& rng);

}  // namespace omdcurl
