#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "omdcurl/lowdim.hpp"

namespace omdcurl {

/// Log barrier psi_lb(xi) = -sum_i log s_i(xi) over the slacks s = B xi + beta.
class BarrierContext {
public:
    explicit BarrierContext(ConstraintSystem sys) : sys_(std::move(sys)) {}
    explicit BarrierContext(const EpisodicMDP& mdp) : sys_(build_constraint_system(mdp)) {}

    const ConstraintSystem& system() const { return sys_; }
    Eigen::Index dim() const { return sys_.B.cols(); }

    bool interior(const LowDimPoint& xi) const { return sys_.slacks(xi).minCoeff() > 0.0; }

    /// Throws ModelError when xi is not strictly interior.
    Eigen::VectorXd slacks(const LowDimPoint& xi) const;
    double value(const LowDimPoint& xi) const;
    Eigen::VectorXd gradient(const LowDimPoint& xi) const;
    Eigen::MatrixXd hessian(const LowDimPoint& xi) const;

private:
    ConstraintSystem sys_;
};

inline double lb_value(const BarrierContext& ctx, const LowDimPoint& xi) { return ctx.value(xi); }
inline Eigen::VectorXd lb_gradient(const BarrierContext& ctx, const LowDimPoint& xi) { return ctx.gradient(xi); }
inline Eigen::MatrixXd lb_hessian(const BarrierContext& ctx, const LowDimPoint& xi) { return ctx.hessian(xi); }

struct NewtonResult {
    LowDimPoint xi;
    double decrement = 0.0;
    int iterations = 0;
};

/// Damped Newton (step 1/(1+lambda)) on psi_lb from reduce(mu^{uniform,p}) until lambda <= tol.
NewtonResult analytic_center(const BarrierContext& ctx, const EpisodicMDP& mdp, double tol = 1e-8,
                             int max_iter = 500);

/**
 * Point xi with its Hessian factorisation H = L L^T.
 *
 * Sampling and gradient surrogates are members so the same factorisation serves both.
 */
class DikinFrame {
public:
    DikinFrame(const BarrierContext& ctx, LowDimPoint xi);

    const LowDimPoint& center() const { return xi_; }
    const Eigen::MatrixXd& hessian() const { return H_; }

    /// xi + delta L^{-T} u
    LowDimPoint sample(double delta, const Eigen::VectorXd& u) const;

    /// ((1 - delta)/delta) d F L u, with d the dimension.
    Eigen::VectorXd gradient_surrogate(double F_value, const Eigen::VectorXd& u, double delta) const;

    /// ||v||_xi = sqrt(v^T H v)
    double local_norm(const Eigen::VectorXd& v) const;
    /// ||g||_{xi,*} = sqrt(g^T H^{-1} g)
    double dual_norm(const Eigen::VectorXd& g) const;

private:
    LowDimPoint xi_;
    Eigen::MatrixXd H_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline LowDimPoint dikin_sample(const DikinFrame& frame, double delta, const Eigen::VectorXd& u) {
    return frame.sample(delta, u);
}
inline Eigen::VectorXd lb_gradient_surrogate(const DikinFrame& frame, double F_value, const Eigen::VectorXd& u,
                                             double delta) {
    return frame.gradient_surrogate(F_value, u, delta);
}

struct LbStepResult {
    LowDimPoint xi;
    int iterations = 0;
    double decrement = 0.0;
    /// ||xi_next - xi||_xi
    double local_step = 0.0;
    /// True when tau ||g||_{xi,*} <= 1/16 so the stability bound was asserted.
    bool stability_checked = false;
};

/// argmin tau <g, y> + D_lb(y, xi) by damped Newton; throws after max_iter iterations.
LbStepResult lb_omd_step(const BarrierContext& ctx, const DikinFrame& frame, const Eigen::VectorXd& g, double tau,
                         double tol = 1e-8, int max_iter = 200);

}  // namespace omdcurl
