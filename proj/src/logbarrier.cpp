#include "omdcurl/logbarrier.hpp"

#include <cmath>
#include <string>

namespace omdcurl {

Eigen::VectorXd BarrierContext::slacks(const LowDimPoint& xi) const {
    if (xi.size() != dim()) throw ModelError("point has wrong dimension");
    Eigen::VectorXd s = sys_.slacks(xi);
    if (!(s.minCoeff() > 0.0)) throw ModelError("point is not strictly interior");
    return s;
}

double BarrierContext::value(const LowDimPoint& xi) const { return -slacks(xi).array().log().sum(); }

Eigen::VectorXd BarrierContext::gradient(const LowDimPoint& xi) const {
    return -sys_.B.transpose() * slacks(xi).cwiseInverse();
}

Eigen::MatrixXd BarrierContext::hessian(const LowDimPoint& xi) const {
    const Eigen::VectorXd w = slacks(xi).cwiseInverse();
    const Eigen::MatrixXd scaled = w.asDiagonal() * sys_.B;
    return scaled.transpose() * scaled;
}

NewtonResult analytic_center(const BarrierContext& ctx, const EpisodicMDP& mdp, double tol, int max_iter) {
    NewtonResult res;
    res.xi = reduce(compute_occupancy(mdp, Policy::uniform(mdp.dims)));
    if (!ctx.interior(res.xi)) throw ModelError("uniform-policy occupancy is not interior; some state is unreachable");
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        const Eigen::VectorXd g = ctx.gradient(res.xi);
        Eigen::LLT<Eigen::MatrixXd> llt(ctx.hessian(res.xi));
        if (llt.info() != Eigen::Success) throw ModelError("barrier Hessian is not positive definite");
        const Eigen::VectorXd step = llt.solve(g);
        res.decrement = std::sqrt(std::max(0.0, g.dot(step)));
        if (res.decrement <= tol) return res;
        res.xi -= step / (1.0 + res.decrement);
    }
    throw ModelError("analytic centre did not converge");
}

DikinFrame::DikinFrame(const BarrierContext& ctx, LowDimPoint xi) : xi_(std::move(xi)), H_(ctx.hessian(xi_)) {
    llt_.compute(H_);
    if (llt_.info() != Eigen::Success) throw ModelError("Cholesky factorisation of the barrier Hessian failed");
}

LowDimPoint DikinFrame::sample(double delta, const Eigen::VectorXd& u) const {
    if (u.size() != xi_.size()) throw ModelError("direction has wrong dimension");
    return xi_ + delta * llt_.matrixU().solve(u);
}

Eigen::VectorXd DikinFrame::gradient_surrogate(double F_value, const Eigen::VectorXd& u, double delta) const {
    if (u.size() != xi_.size()) throw ModelError("direction has wrong dimension");
    if (!(delta > 0.0 && delta <= 1.0)) throw ModelError("delta must lie in (0,1]");
    const double c = (1.0 - delta) / delta * static_cast<double>(xi_.size()) * F_value;
    const Eigen::MatrixXd L = llt_.matrixL();
    return c * (L * u);
}

double DikinFrame::local_norm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(0.0, v.dot(H_ * v))); }

double DikinFrame::dual_norm(const Eigen::VectorXd& g) const {
    return std::sqrt(std::max(0.0, g.dot(llt_.solve(g))));
}

LbStepResult lb_omd_step(const BarrierContext& ctx, const DikinFrame& frame, const Eigen::VectorXd& g, double tau,
                         double tol, int max_iter) {
    if (!(tau > 0.0)) throw ModelError("learning rate must be positive");
    const LowDimPoint& xi0 = frame.center();
    const Eigen::VectorXd shift = tau * g - ctx.gradient(xi0);
    LbStepResult res;
    res.xi = xi0;
    bool converged = false;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        const Eigen::VectorXd grad = shift + ctx.gradient(res.xi);
        Eigen::LLT<Eigen::MatrixXd> llt(ctx.hessian(res.xi));
        if (llt.info() != Eigen::Success) throw ModelError("barrier Hessian is not positive definite");
        const Eigen::VectorXd step = llt.solve(grad);
        res.decrement = std::sqrt(std::max(0.0, grad.dot(step)));
        if (res.decrement <= tol) {
            converged = true;
            break;
        }
        res.xi -= step / (1.0 + res.decrement);
    }
    if (!converged) throw ModelError("log-barrier OMD step did not converge; reduce tau");
    res.local_step = frame.local_norm(res.xi - xi0);
    res.stability_checked = tau * frame.dual_norm(g) <= 1.0 / 16.0;
    if (res.stability_checked && res.local_step > 0.5)
        throw InvariantError("stability bound violated: local step " + std::to_string(res.local_step));
    return res;
}

}  // namespace omdcurl
