#pragma once
// Random instances and independent reference solvers shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "omdcurl/mdp.hpp"
#include "omdcurl/types.hpp"

namespace omdcurl::testing {

inline Kernel random_kernel(Dims d, Rng& rng, double floor = 0.0) {
    std::gamma_distribution<double> gam(1.0, 1.0);
    Kernel p(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                auto row = p.row(n, x, a);
                double s = 0.0;
                for (double& v : row) s += (v = gam(rng));
                for (double& v : row) v = floor + (1.0 - floor * d.S) * v / s;
            }
    return p;
}

inline std::vector<double> random_mu0(Dims d, Rng& rng) {
    std::gamma_distribution<double> gam(1.0, 1.0);
    std::vector<double> m(d.layer_size());
    double s = 0.0;
    for (double& v : m) s += (v = gam(rng));
    for (double& v : m) v /= s;
    return m;
}

inline EpisodicMDP random_mdp(Dims d, Rng& rng, double floor = 0.0) {
    return EpisodicMDP{d, random_kernel(d, rng, floor), random_mu0(d, rng)};
}

/// Interior policy with every entry at least lo / A.
inline Policy random_policy(Dims d, Rng& rng, double lo = 0.05) {
    std::gamma_distribution<double> gam(1.0, 1.0);
    Policy pi(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x) {
            auto r = pi.row(n, x);
            double s = 0.0;
            for (double& v : r) s += (v = gam(rng));
            for (double& v : r) v = lo / d.A + (1.0 - lo) * v / s;
        }
    return pi;
}

inline Field random_field(Dims d, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Field f(d);
    for (int n = 1; n <= d.N; ++n)
        for (double& v : f.layer(n)) v = u(rng);
    return f;
}

/// Occupancy estimated from sampled trajectories.
inline Field monte_carlo_occupancy(const EpisodicMDP& mdp, const Policy& pi, int episodes, Rng& rng) {
    Field f(mdp.dims);
    for (int e = 0; e < episodes; ++e) {
        const Trajectory tr = sample_trajectory(mdp, pi, rng);
        for (int n = 0; n <= mdp.dims.N; ++n) f(n, tr.states[n], tr.actions[n]) += 1.0;
    }
    for (double& v : f.raw()) v /= episodes;
    return f;
}

/// Exhaustive minimum of <loss, mu^{pi,p}> over deterministic Markov policies.
inline double brute_force_best_linear(const EpisodicMDP& mdp, const Field& loss) {
    const Dims d = mdp.dims;
    const int slots = d.N * d.S;
    long long total = 1;
    for (int i = 0; i < slots; ++i) total *= d.A;
    double best = std::numeric_limits<double>::infinity();
    for (long long code = 0; code < total; ++code) {
        Policy pi(d);
        long long c = code;
        for (int n = 1; n <= d.N; ++n)
            for (int x = 0; x < d.S; ++x) {
                pi(n, x, static_cast<int>(c % d.A)) = 1.0;
                c /= d.A;
            }
        const Field mu = compute_occupancy(mdp, pi);
        double v = 0.0;
        for (int n = 1; n <= d.N; ++n)
            for (std::size_t i = 0; i < d.layer_size(); ++i) v += loss.layer(n)[i] * mu.layer(n)[i];
        best = std::min(best, v);
    }
    return best;
}

/**
 * Equality-constrained description of the occupancy polytope in full coordinates.
 *
 * Variables are layers 1..N flattened; C v = c encodes the flow constraints with mu0 fixed.
 */
struct FlowSystem {
    Eigen::MatrixXd C;
    Eigen::VectorXd c;
};

inline FlowSystem flow_system(const Kernel& p, const std::vector<double>& mu0) {
    const Dims d = p.dims();
    const Eigen::Index L = static_cast<Eigen::Index>(d.layer_size());
    FlowSystem fs{Eigen::MatrixXd::Zero(d.N * d.S, d.N * L), Eigen::VectorXd::Zero(d.N * d.S)};
    for (int n = 1; n <= d.N; ++n)
        for (int y = 0; y < d.S; ++y) {
            const Eigen::Index r = (n - 1) * d.S + y;
            for (int a = 0; a < d.A; ++a) fs.C(r, (n - 1) * L + y * d.A + a) = 1.0;
            for (int x = 0; x < d.S; ++x)
                for (int a = 0; a < d.A; ++a) {
                    const double w = p(n, x, a, y);
                    if (n == 1) fs.c(r) += mu0[static_cast<std::size_t>(x) * d.A + a] * w;
                    else fs.C(r, (n - 2) * L + x * d.A + a) -= w;
                }
        }
    return fs;
}

inline Eigen::VectorXd to_vec(const Field& f) {
    const Dims d = f.dims();
    Eigen::VectorXd v(static_cast<Eigen::Index>(d.N * d.layer_size()));
    for (int n = 1; n <= d.N; ++n)
        for (std::size_t i = 0; i < d.layer_size(); ++i)
            v((n - 1) * static_cast<Eigen::Index>(d.layer_size()) + static_cast<Eigen::Index>(i)) = f.layer(n)[i];
    return v;
}

inline Field to_field(const Eigen::VectorXd& v, Dims d, const std::vector<double>& mu0) {
    Field f(d);
    std::copy(mu0.begin(), mu0.end(), f.layer(0).begin());
    for (int n = 1; n <= d.N; ++n)
        for (std::size_t i = 0; i < d.layer_size(); ++i)
            f.layer(n)[i] = v((n - 1) * static_cast<Eigen::Index>(d.layer_size()) + static_cast<Eigen::Index>(i));
    return f;
}

/// Smooth convex function of the flattened occupancy with value, gradient and Hessian.
struct SmoothFn {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

/**
 * Feasible-start Newton method on {C v = c, v > 0}.
 *
 * Steps live in the null space of C, so iterates stay on the affine hull however badly
 * the Hessian is scaled; a backtracking line search keeps them positive and decreasing.
 */
inline Eigen::VectorXd equality_newton(const SmoothFn& f, const FlowSystem& fs, Eigen::VectorXd v,
                                       double tol = 1e-14, int max_iter = 200) {
    const Eigen::MatrixXd Z = Eigen::FullPivLU<Eigen::MatrixXd>(fs.C).kernel();
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd g = f.gradient(v);
        const Eigen::MatrixXd H = f.hessian(v);
        const Eigen::MatrixXd Hr = Z.transpose() * H * Z;
        const Eigen::VectorXd dv = Z * Hr.ldlt().solve(-Z.transpose() * g);
        const double dec = -g.dot(dv);
        if (!(dec > tol)) break;
        double s = 1.0;
        while ((v + s * dv).minCoeff() <= 0.0) s *= 0.5;
        const double f0 = f.value(v);
        while (s > 1e-16 && f.value(v + s * dv) > f0 - 0.25 * s * dec) s *= 0.5;
        if (s <= 1e-16) break;
        v += s * dv;
    }
    return v;
}

/// Hessian of psi on the flattened layers: per (n,x) block delta_ab / mu_a - 1 / rho.
inline Eigen::MatrixXd psi_hessian(const Eigen::VectorXd& v, Dims d) {
    const Eigen::Index sz = v.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(sz, sz);
    for (Eigen::Index blk = 0; blk < sz; blk += d.A) {
        const double rho = v.segment(blk, d.A).sum();
        for (int a = 0; a < d.A; ++a) {
            for (int b = 0; b < d.A; ++b) H(blk + a, blk + b) = -1.0 / rho;
            H(blk + a, blk + a) += 1.0 / v(blk + a);
        }
    }
    return H;
}

inline double psi_flat(const Eigen::VectorXd& v, Dims d) {
    double s = 0.0;
    for (Eigen::Index blk = 0; blk < v.size(); blk += d.A) {
        const double rho = v.segment(blk, d.A).sum();
        for (int a = 0; a < d.A; ++a) s += v(blk + a) * std::log(v(blk + a));
        s -= rho * std::log(rho);
    }
    return s;
}

inline Eigen::VectorXd psi_grad_flat(const Eigen::VectorXd& v, Dims d) {
    Eigen::VectorXd g(v.size());
    for (Eigen::Index blk = 0; blk < v.size(); blk += d.A) {
        const double rho = v.segment(blk, d.A).sum();
        for (int a = 0; a < d.A; ++a) g(blk + a) = std::log(v(blk + a) / rho);
    }
    return g;
}

/// tau <z, mu> + psi(mu) - psi(mu_ref) - <grad psi(mu_ref), mu - mu_ref> on flattened layers.
inline double omd_objective_flat(const Eigen::VectorXd& v, const Eigen::VectorXd& z, double tau,
                                 const Eigen::VectorXd& ref, Dims d) {
    return tau * z.dot(v) + psi_flat(v, d) - psi_flat(ref, d) - psi_grad_flat(ref, d).dot(v - ref);
}

/// Reference minimiser of the mirror-descent objective over M^q, started at the reference occupancy.
inline Eigen::VectorXd omd_oracle(const Field& z, double tau, const Field& mu_ref, const Kernel& q,
                                  const std::vector<double>& mu0) {
    const Dims d = q.dims();
    const Eigen::VectorXd zv = to_vec(z), ref = to_vec(mu_ref);
    const Eigen::VectorXd gref = psi_grad_flat(ref, d);
    SmoothFn f{[&](const Eigen::VectorXd& v) { return omd_objective_flat(v, zv, tau, ref, d); },
               [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(tau * zv + psi_grad_flat(v, d) - gref); },
               [&](const Eigen::VectorXd& v) { return psi_hessian(v, d); }};
    return equality_newton(f, flow_system(q, mu0), ref);
}

/**
 * Log-barrier path following for min F over M^p with a generic smooth convex F.
 *
 * The Hessian of F is taken by central differences of its gradient, so any objective
 * exposing a gradient can be solved.
 */
inline Eigen::VectorXd barrier_solve(const std::function<double(const Eigen::VectorXd&)>& F,
                                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                     const FlowSystem& fs, Eigen::VectorXd v0, double t_final = 1e12) {
    const Eigen::Index n = v0.size();
    auto fd_hessian = [&](const Eigen::VectorXd& v) {
        Eigen::MatrixXd H(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = 1e-6;
            Eigen::VectorXd vp = v, vm = v;
            vp(i) += h;
            vm(i) -= h;
            H.col(i) = (grad(vp) - grad(vm)) / (2.0 * h);
        }
        return Eigen::MatrixXd(0.5 * (H + H.transpose()));
    };
    Eigen::VectorXd v = std::move(v0);
    for (double t = 1.0; t <= t_final; t *= 4.0) {
        SmoothFn f{[&](const Eigen::VectorXd& x) { return t * F(x) - x.array().log().sum(); },
                   [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(t * grad(x) - x.cwiseInverse()); },
                   [&](const Eigen::VectorXd& x) {
                       Eigen::MatrixXd H = t * fd_hessian(x);
                       H.diagonal() += x.cwiseInverse().cwiseAbs2();
                       return H;
                   }};
        v = equality_newton(f, fs, v, 1e-12, 100);
    }
    return v;
}

inline double kl(std::span<const double> q, std::span<const double> p) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
        s += q[i] * std::log(q[i] / p[i]);
    }
    return s;
}

// Vertices of {q in [lo, hi]} intersected with the simplex: all but one coordinate at a bound.
inline std::vector<std::vector<double>> box_simplex_vertices(const std::vector<double>& lo, const std::vector<double>& hi) {
    const std::size_t S = lo.size();
    std::vector<std::vector<double>> out;
    for (std::size_t free = 0; free < S; ++free)
        for (unsigned mask = 0; mask < (1u << S); ++mask) {
            if (mask & (1u << free)) continue;
            std::vector<double> q(S);
            double s = 0.0;
            for (std::size_t i = 0; i < S; ++i)
                if (i != free) s += (q[i] = (mask & (1u << i)) ? hi[i] : lo[i]);
            q[free] = 1.0 - s;
            if (q[free] >= lo[free] - 1e-15 && q[free] <= hi[free] + 1e-15) out.push_back(q);
        }
    return out;
}

}  // namespace omdcurl::testing
