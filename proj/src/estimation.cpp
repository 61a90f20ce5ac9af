#include "omdcurl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace omdcurl {

namespace {

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ModelError("delta must lie in (0,1)");
}

void check_eps(double eps, int S) {
    if (!(eps > 0.0 && eps <= 1.0 / (2.0 * S) * (1.0 + 1e-12)))
        throw ModelError("projection floor eps must lie in (0, 1/(2S)]");
}

double l1(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void empirical_row(const VisitCounts& c, int n, int x, int a, std::span<double> out) {
    const auto cnt = c.visits(n, x, a);
    const int S = c.dims().S;
    for (int y = 0; y < S; ++y)
        out[y] = cnt == 0 ? 1.0 / S : static_cast<double>(c.moves(n, x, a, y)) / static_cast<double>(cnt);
}

void laplace_row(const VisitCounts& c, int n, int x, int a, std::span<double> out) {
    const int S = c.dims().S;
    const double denom = static_cast<double>(c.visits(n, x, a) + S);
    for (int y = 0; y < S; ++y) out[y] = (static_cast<double>(c.moves(n, x, a, y)) + 1.0) / denom;
}

void projected_row(const VisitCounts& c, int n, int x, int a, double eps, std::span<double> out) {
    laplace_row(c, n, x, a, out);
    auto proj = eps_info_projection(out, eps);
    std::copy(proj.q.begin(), proj.q.end(), out.begin());
}

}  // namespace

void VisitCounts::add(int n, int x, int a, int y) {
    if (n < 0 || n >= dims_.N || x < 0 || x >= dims_.S || y < 0 || y >= dims_.S || a < 0 || a >= dims_.A)
        throw ModelError("transition out of range");
    ++visits_[index(n, x, a)];
    ++moves_[index(n, x, a) * dims_.S + y];
}

std::vector<VisitCounts::Touched> VisitCounts::record(const Trajectory& traj) {
    if (traj.states.size() != static_cast<std::size_t>(dims_.N + 1) || traj.actions.size() != traj.states.size())
        throw ModelError("trajectory length must be N+1");
    std::vector<Touched> touched;
    touched.reserve(static_cast<std::size_t>(dims_.N));
    for (int n = 0; n < dims_.N; ++n) {
        const int x = traj.states[n], a = traj.actions[n], y = traj.states[n + 1];
        if (x < 0 || x >= dims_.S || y < 0 || y >= dims_.S || a < 0 || a >= dims_.A)
            throw ModelError("trajectory entry out of range");
        ++visits_[index(n, x, a)];
        ++moves_[index(n, x, a) * dims_.S + y];
        touched.push_back({n, x, a});
    }
    ++rounds_;
    return touched;
}

VisitCounts record_trajectory(VisitCounts counts, const Trajectory& traj) {
    counts.record(traj);
    return counts;
}

Kernel empirical_kernel(const VisitCounts& counts) {
    const Dims d = counts.dims();
    Kernel k(d);
    for (int n = 0; n < d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) empirical_row(counts, n, x, a, k.row(n + 1, x, a));
    return k;
}

Kernel laplace_kernel(const VisitCounts& counts) {
    const Dims d = counts.dims();
    Kernel k(d);
    for (int n = 0; n < d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) laplace_row(counts, n, x, a, k.row(n + 1, x, a));
    return k;
}

double info_projection_map(std::span<const double> p, double eps, double r) {
    double s = 0.0;
    for (double v : p) s += std::max(r * eps, v);
    return s;
}

InfoProjection eps_info_projection(std::span<const double> p, double eps) {
    const int S = static_cast<int>(p.size());
    if (S < 1) throw ModelError("empty distribution");
    check_eps(eps, S);
    std::vector<int> order(static_cast<std::size_t>(S));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return p[i] > p[j]; });

    // Entries kept proportional form a prefix of the sorted order; scan prefix sizes k.
    double head = 0.0;
    double r = 1.0;
    bool found = false;
    for (int k = 1; k <= S; ++k) {
        head += p[order[k - 1]];
        const double cand = head / (1.0 - eps * (S - k));
        const bool last_in = p[order[k - 1]] >= cand * eps;
        const bool next_out = k == S || p[order[k]] <= cand * eps;
        if (last_in && next_out) {
            r = cand;
            found = true;
            break;
        }
    }
    if (!found) throw InvariantError("information projection found no consistent support");
    InfoProjection out;
    out.r = r;
    out.q.resize(static_cast<std::size_t>(S));
    for (int x = 0; x < S; ++x) out.q[x] = std::max(eps, p[x] / r);
    return out;
}

Kernel projected_kernel(const VisitCounts& counts, double eps) {
    const Dims d = counts.dims();
    check_eps(eps, d.S);
    Kernel k(d);
    for (int n = 0; n < d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) projected_row(counts, n, x, a, eps, k.row(n + 1, x, a));
    return k;
}

double hoeffding_constant(Dims d, std::int64_t T, double delta) {
    check_delta(delta);
    const double arg = static_cast<double>(d.S) * d.A * d.N * static_cast<double>(T) / delta;
    return std::sqrt(2.0 * d.S * std::log(arg));
}

Field hoeffding_width(const VisitCounts& counts, std::int64_t T, double delta) {
    const Dims d = counts.dims();
    const double c = hoeffding_constant(d, T, delta);
    Field w(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                const double cnt = std::max<double>(1.0, static_cast<double>(counts.visits(n - 1, x, a)));
                w(n, x, a) = c / std::sqrt(cnt);
            }
    return w;
}

Kernel bernstein_widths(const VisitCounts& counts, const Kernel& p_hat, std::int64_t T, double delta) {
    check_delta(delta);
    const Dims d = counts.dims();
    if (!(p_hat.dims() == d)) throw ModelError("dimension mismatch in bernstein_widths");
    const double lg = std::log(static_cast<double>(T) * d.N * d.S * d.A / delta);
    Kernel w(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                const double cnt = std::max<double>(1.0, static_cast<double>(counts.visits(n - 1, x, a)));
                auto ph = p_hat.row(n, x, a);
                auto out = w.row(n, x, a);
                for (int y = 0; y < d.S; ++y)
                    out[y] = 2.0 * std::sqrt(ph[y] * lg / cnt) + 14.0 * lg / (3.0 * cnt);
            }
    return w;
}

bool kernel_in_box(const Kernel& q, const Kernel& p_hat, const Kernel& widths) {
    const auto& a = q.raw();
    const auto& b = p_hat.raw();
    const auto& w = widths.raw();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > w[i]) return false;
    return true;
}

std::vector<double> greedy_box_simplex_argmax(std::span<const double> values, std::span<const double> p_hat_row,
                                              std::span<const double> widths_row) {
    const std::size_t S = values.size();
    std::vector<double> q(S), hi(S);
    double mass = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        q[i] = std::max(0.0, p_hat_row[i] - widths_row[i]);
        hi[i] = std::min(1.0, p_hat_row[i] + widths_row[i]);
        mass += q[i];
    }
    if (mass > 1.0 + 1e-12) throw InvariantError("box lower bounds exceed unit mass");
    std::vector<std::size_t> order(S);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] > values[j]; });
    double rest = 1.0 - mass;
    for (std::size_t i : order) {
        if (rest <= 0.0) break;
        const double add = std::min(hi[i] - q[i], rest);
        q[i] += add;
        rest -= add;
    }
    if (rest > 1e-12) throw InvariantError("box upper bounds cannot reach unit mass");
    return q;
}

double greedy_box_simplex_max(std::span<const double> values, std::span<const double> p_hat_row,
                              std::span<const double> widths_row) {
    auto q = greedy_box_simplex_argmax(values, p_hat_row, widths_row);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * values[i];
    return s;
}

Field upper_occupancy(const Policy& pi, const Kernel& p_hat, const Kernel& widths, std::span<const double> mu0) {
    const Dims d = pi.dims();
    if (!(p_hat.dims() == d) || !(widths.dims() == d) || mu0.size() != d.layer_size())
        throw ModelError("dimension mismatch in upper_occupancy");
    Field out(d);
    std::copy(mu0.begin(), mu0.end(), out.layer(0).begin());

    const std::size_t S = static_cast<std::size_t>(d.S);
    std::vector<double> w(S), w_prev(S), lo(S), hi(S);
    std::vector<std::size_t> order(S);
    // u_m(y,a) for the current target, reused across layers.
    std::vector<double> u(d.layer_size());

    auto inner_max = [&](int layer, int y, int a) {
        auto ph = p_hat.row(layer, y, a);
        auto eps = widths.row(layer, y, a);
        double mass = 0.0, val = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            lo[i] = std::max(0.0, ph[i] - eps[i]);
            hi[i] = std::min(1.0, ph[i] + eps[i]);
            mass += lo[i];
            val += lo[i] * w[i];
        }
        double rest = 1.0 - mass;
        for (std::size_t i : order) {
            if (rest <= 0.0) break;
            const double add = std::min(hi[i] - lo[i], rest);
            val += add * w[i];
            rest -= add;
        }
        return val;
    };

    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x) {
            std::fill(w.begin(), w.end(), 0.0);
            w[static_cast<std::size_t>(x)] = 1.0;
            for (int m = n - 1; m >= 0; --m) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return w[i] > w[j]; });
                for (int y = 0; y < d.S; ++y)
                    for (int a = 0; a < d.A; ++a) u[static_cast<std::size_t>(y) * d.A + a] = inner_max(m + 1, y, a);
                if (m == 0) break;
                for (int y = 0; y < d.S; ++y) {
                    double s = 0.0;
                    for (int a = 0; a < d.A; ++a) s += pi(m, y, a) * u[static_cast<std::size_t>(y) * d.A + a];
                    w_prev[static_cast<std::size_t>(y)] = s;
                }
                std::swap(w, w_prev);
            }
            double rho = 0.0;
            for (std::size_t i = 0; i < d.layer_size(); ++i) rho += mu0[i] * u[i];
            rho = std::min(rho, 1.0);
            for (int a = 0; a < d.A; ++a) out(n, x, a) = pi(n, x, a) * rho;
        }
    return out;
}

KernelEstimator::KernelEstimator(Dims d, EstimatorKind kind, double eps, const Kernel* truth, bool pooled)
    : dims_(d), kind_(kind), eps_(eps), pooled_(pooled), counts_(d), kernel_(d, 1.0 / d.S) {
    if (kind == EstimatorKind::Projected) check_eps(eps, d.S);
    if (kind == EstimatorKind::TrueKernel) {
        if (!truth || !(truth->dims() == d)) throw ModelError("true-kernel estimator needs the true kernel");
        kernel_ = *truth;
    }
}

void KernelEstimator::fill_row(int n, int x, int a, std::span<double> out) const {
    switch (kind_) {
        case EstimatorKind::Empirical: empirical_row(counts_, n, x, a, out); break;
        case EstimatorKind::Laplace: laplace_row(counts_, n, x, a, out); break;
        case EstimatorKind::Projected: projected_row(counts_, n, x, a, eps_, out); break;
        case EstimatorKind::TrueKernel: break;
    }
}

void KernelEstimator::refresh_row(int n, int x, int a, int y, bool check_drift) {
    const std::size_t S = static_cast<std::size_t>(dims_.S);
    std::vector<double> fresh(S), lap_old(S), lap_new(S);
    constexpr double slack = 1e-12;
    auto row = kernel_.row(n + 1, x, a);
    fill_row(n, x, a, fresh);
    if (check_drift) {
        const auto cnt = counts_.visits(n, x, a);
        const double drift = l1(fresh, row);
        double bound = 0.0;
        bool applies = true;
        if (kind_ == EstimatorKind::Empirical) {
            // The l1 change is 2(1 - p_old(y))/N, so 2/N is the tight row bound.
            applies = cnt >= 2;
            bound = 2.0 / static_cast<double>(cnt);
        } else {
            bound = 2.0 / static_cast<double>(cnt + dims_.S);
            if (kind_ == EstimatorKind::Projected) {
                laplace_row(counts_, n, x, a, lap_new);
                const double denom = static_cast<double>(cnt - 1 + dims_.S);
                for (std::size_t z = 0; z < S; ++z)
                    lap_old[z] = (static_cast<double>(counts_.moves(n, x, a, static_cast<int>(z))) + 1.0 -
                                  (static_cast<int>(z) == y ? 1.0 : 0.0)) /
                                 denom;
                bound = 2.5 * l1(lap_new, lap_old);
            }
        }
        if (applies) {
            ++drift_checks_;
            if (drift > bound + slack)
                throw InvariantError("estimator drift " + std::to_string(drift) + " exceeds bound " +
                                     std::to_string(bound));
        }
    }
    std::copy(fresh.begin(), fresh.end(), row.begin());
}

void KernelEstimator::update(const Trajectory& traj, bool check_drift) {
    if (!pooled_) {
        const auto touched = counts_.record(traj);
        if (kind_ == EstimatorKind::TrueKernel) return;
        for (const auto& t : touched) refresh_row(t.n, t.x, t.a, traj.states[t.n + 1], check_drift);
        return;
    }
    if (traj.states.size() != static_cast<std::size_t>(dims_.N + 1) || traj.actions.size() != traj.states.size())
        throw ModelError("trajectory length must be N+1");
    // One observation at a time so each drift check covers a single new sample.
    for (int n = 0; n < dims_.N; ++n) {
        const int x = traj.states[n], a = traj.actions[n], y = traj.states[n + 1];
        for (int m = 0; m < dims_.N; ++m) counts_.add(m, x, a, y);
        if (kind_ == EstimatorKind::TrueKernel) continue;
        for (int m = 0; m < dims_.N; ++m) refresh_row(m, x, a, y, check_drift);
    }
    counts_.close_round();
}

}  // namespace omdcurl
