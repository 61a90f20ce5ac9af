#pragma once

#include <cstdint>
#include <vector>

#include "omdcurl/types.hpp"

namespace omdcurl {

/// Visit counts N_n(x,a) and transition counts M_n(x'|x,a) for n = 0..N-1.
class VisitCounts {
public:
    VisitCounts() = default;
    explicit VisitCounts(Dims d)
        : dims_(d),
          visits_(static_cast<std::size_t>(d.N) * d.layer_size(), 0),
          moves_(static_cast<std::size_t>(d.N) * d.layer_size() * d.S, 0) {}

    const Dims& dims() const { return dims_; }

    std::int64_t visits(int n, int x, int a) const { return visits_[index(n, x, a)]; }
    std::int64_t moves(int n, int x, int a, int y) const { return moves_[index(n, x, a) * dims_.S + y]; }

    /// Adds one episode; returns the (n, x, a) row touched at each step n = 0..N-1.
    struct Touched {
        int n, x, a;
    };
    std::vector<Touched> record(const Trajectory& traj);
    /// Adds a single transition x --a--> y observed from layer n.
    void add(int n, int x, int a, int y);
    /// Counts one episode after transitions were added one by one.
    void close_round() { ++rounds_; }

    /// Number of recorded episodes.
    std::int64_t rounds() const { return rounds_; }

private:
    std::size_t index(int n, int x, int a) const {
        return (static_cast<std::size_t>(n) * dims_.S + x) * dims_.A + a;
    }

    Dims dims_;
    std::vector<std::int64_t> visits_;
    std::vector<std::int64_t> moves_;
    std::int64_t rounds_ = 0;
};

/// Pure form: returns counts with the trajectory added.
VisitCounts record_trajectory(VisitCounts counts, const Trajectory& traj);

/// p_{n+1}(.|x,a) = M_n / max(1, N_n), uniform for unvisited rows.
Kernel empirical_kernel(const VisitCounts& counts);

/// p_{n+1}(.|x,a) = (M_n + 1) / (N_n + S)
Kernel laplace_kernel(const VisitCounts& counts);

struct InfoProjection {
    std::vector<double> q;
    double r = 1.0;
};

/// Minimiser of KL(q || p) over {q in simplex : q >= eps}; requires 0 < eps <= 1/(2S).
InfoProjection eps_info_projection(std::span<const double> p, double eps);

/// g(r; p) = sum_x max(r eps, p(x)); its fixed point is the projection normaliser.
double info_projection_map(std::span<const double> p, double eps, double r);

/// eps_info_projection applied to every Laplace row.
Kernel projected_kernel(const VisitCounts& counts, double eps);

/// C_delta = sqrt(2 S log(S A N T / delta))
double hoeffding_constant(Dims d, std::int64_t T, double delta);

/// l1 radius per (n,x,a), n = 1..N, from counts at layer n-1. Layer 0 of the result is 0.
Field hoeffding_width(const VisitCounts& counts, std::int64_t T, double delta);

/// Entrywise widths eps_n(x'|x,a) around the empirical kernel, stored in kernel layout.
Kernel bernstein_widths(const VisitCounts& counts, const Kernel& p_hat, std::int64_t T, double delta);

/// True when every entry of q lies within the entrywise widths of p_hat.
bool kernel_in_box(const Kernel& q, const Kernel& p_hat, const Kernel& widths);

/// max <q, values> over q in [max(0,p-eps), min(1,p+eps)] intersected with the simplex.
double greedy_box_simplex_max(std::span<const double> values, std::span<const double> p_hat_row,
                              std::span<const double> widths_row);

/// Maximiser of greedy_box_simplex_max.
std::vector<double> greedy_box_simplex_argmax(std::span<const double> values, std::span<const double> p_hat_row,
                                              std::span<const double> widths_row);

/// mu_bar_n(x,a) = pi_n(a|x) max_{q in box} rho^{pi,q}_n(x); layer 0 is mu0.
Field upper_occupancy(const Policy& pi, const Kernel& p_hat, const Kernel& widths, std::span<const double> mu0);

enum class EstimatorKind { Empirical, Laplace, Projected, TrueKernel };

/**
 * Incrementally maintained transition estimate.
 *
 * Only rows touched by a trajectory change, so update() recomputes those rows and,
 * when checking is enabled, asserts the per-row drift inequalities of the estimator.
 */
class KernelEstimator {
public:
    /// pooled: each transition is credited to every layer, for kernels that do not depend on n.
    KernelEstimator(Dims d, EstimatorKind kind, double eps = 0.0, const Kernel* truth = nullptr, bool pooled = false);

    const Kernel& kernel() const { return kernel_; }
    const VisitCounts& counts() const { return counts_; }
    EstimatorKind kind() const { return kind_; }
    bool pooled() const { return pooled_; }

    /// Records the trajectory and refreshes the touched rows. Throws InvariantError on a drift violation.
    void update(const Trajectory& traj, bool check_drift = true);

    /// Number of drift checks performed so far.
    std::int64_t drift_checks() const { return drift_checks_; }

private:
    void fill_row(int n, int x, int a, std::span<double> out) const;
    void refresh_row(int n, int x, int a, int y, bool check_drift);

    Dims dims_;
    EstimatorKind kind_;
    double eps_;
    bool pooled_;
    VisitCounts counts_;
    Kernel kernel_;
    std::int64_t drift_checks_ = 0;
};

}  // namespace omdcurl
