#include "omdcurl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace omdcurl {

namespace {

void require_same(const Dims& a, const Dims& b, const char* what) {
    if (!(a == b)) throw ModelError(std::string("dimension mismatch: ") + what);
}

}  // namespace

void EpisodicMDP::validate(double tol) const {
    if (dims.N < 1 || dims.S < 1 || dims.A < 1) throw ModelError("N, S and A must be positive");
    require_same(p.dims(), dims, "kernel");
    if (mu0.size() != dims.layer_size()) throw ModelError("mu0 has wrong size");
    double total = 0.0;
    for (double v : mu0) {
        if (v < 0.0) throw ModelError("mu0 has a negative entry");
        total += v;
    }
    if (std::abs(total - 1.0) > tol) throw ModelError("mu0 does not sum to one");
    for (int n = 1; n <= dims.N; ++n)
        for (int x = 0; x < dims.S; ++x)
            for (int a = 0; a < dims.A; ++a) {
                double s = 0.0;
                for (double v : p.row(n, x, a)) {
                    if (v < 0.0) throw ModelError("kernel has a negative entry");
                    s += v;
                }
                if (std::abs(s - 1.0) > tol) throw ModelError("kernel row does not sum to one");
            }
}

EpisodicMDP EpisodicMDP::with_kernel(Kernel q) const {
    require_same(q.dims(), dims, "kernel");
    return EpisodicMDP{dims, std::move(q), mu0};
}

OccupancyMeasure compute_occupancy(const EpisodicMDP& mdp, const Policy& pi) {
    return compute_occupancy(mdp.p, mdp.mu0, pi);
}

OccupancyMeasure compute_occupancy(const Kernel& p, std::span<const double> mu0, const Policy& pi) {
    const Dims d = p.dims();
    require_same(pi.dims(), d, "policy");
    if (mu0.size() != d.layer_size()) throw ModelError("mu0 has wrong size");
    OccupancyMeasure mu(d);
    std::copy(mu0.begin(), mu0.end(), mu.layer(0).begin());
    std::vector<double> rho(static_cast<std::size_t>(d.S));
    for (int n = 1; n <= d.N; ++n) {
        std::fill(rho.begin(), rho.end(), 0.0);
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                const double m = mu(n - 1, x, a);
                if (m == 0.0) continue;
                auto row = p.row(n, x, a);
                for (int y = 0; y < d.S; ++y) rho[y] += m * row[y];
            }
        for (int y = 0; y < d.S; ++y)
            for (int a = 0; a < d.A; ++a) mu(n, y, a) = rho[y] * pi(n, y, a);
    }
    return mu;
}

Policy policy_from_occupancy(const OccupancyMeasure& mu, const Policy* fallback) {
    const Dims d = mu.dims();
    if (fallback && !(fallback->dims() == d)) throw ModelError("dimension mismatch: fallback policy");
    Policy pi(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x) {
            double rho = 0.0;
            for (int a = 0; a < d.A; ++a) rho += mu(n, x, a);
            for (int a = 0; a < d.A; ++a) {
                if (rho > 0.0) pi(n, x, a) = mu(n, x, a) / rho;
                else pi(n, x, a) = fallback ? (*fallback)(n, x, a) : 1.0 / d.A;
            }
        }
    return pi;
}

std::vector<double> state_marginal(const OccupancyMeasure& mu) {
    const Dims d = mu.dims();
    std::vector<double> rho(static_cast<std::size_t>(d.N + 1) * d.S, 0.0);
    for (int n = 0; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) rho[static_cast<std::size_t>(n) * d.S + x] += mu(n, x, a);
    return rho;
}

FeasibilityReport check_feasibility(const OccupancyMeasure& mu, const EpisodicMDP& mdp, double tol) {
    return check_feasibility(mu, mdp.p, mdp.mu0, tol);
}

FeasibilityReport check_feasibility(const OccupancyMeasure& mu, const Kernel& p, std::span<const double> mu0,
                                    double tol) {
    FeasibilityReport rep;
    const Dims d = p.dims();
    if (!(mu.dims() == d)) {
        rep.ok = false;
        rep.detail = "dimension mismatch";
        return rep;
    }
    auto note = [&](double v, const std::string& what) {
        if (v > rep.max_violation) {
            rep.max_violation = v;
            if (v > tol) rep.detail = what;
        }
    };
    for (int x = 0; x < d.S; ++x)
        for (int a = 0; a < d.A; ++a) note(std::abs(mu(0, x, a) - mu0[static_cast<std::size_t>(x) * d.A + a]), "layer 0 differs from mu0");
    std::vector<double> inflow(static_cast<std::size_t>(d.S));
    for (int n = 0; n <= d.N; ++n) {
        double total = 0.0;
        for (double v : mu.layer(n)) {
            note(-v, "negative entry");
            total += v;
        }
        note(std::abs(total - 1.0), "layer mass differs from one");
        if (n == 0) continue;
        std::fill(inflow.begin(), inflow.end(), 0.0);
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                auto row = p.row(n, x, a);
                for (int y = 0; y < d.S; ++y) inflow[y] += mu(n - 1, x, a) * row[y];
            }
        for (int y = 0; y < d.S; ++y) {
            double out = 0.0;
            for (int a = 0; a < d.A; ++a) out += mu(n, y, a);
            note(std::abs(out - inflow[y]), "flow constraint violated");
        }
    }
    rep.ok = rep.max_violation <= tol;
    return rep;
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = static_cast<int>(i);
        if (u < acc) return last;
    }
    if (last < 0) throw ModelError("cannot sample from an all-zero distribution");
    return last;
}

Trajectory sample_trajectory(const EpisodicMDP& mdp, const Policy& pi, Rng& rng, const Field* loss) {
    const Dims d = mdp.dims;
    Trajectory tr;
    tr.states.resize(static_cast<std::size_t>(d.N + 1));
    tr.actions.resize(static_cast<std::size_t>(d.N + 1));
    const int first = sample_categorical(mdp.mu0, rng);
    tr.states[0] = first / d.A;
    tr.actions[0] = first % d.A;
    for (int n = 1; n <= d.N; ++n) {
        tr.states[n] = sample_categorical(mdp.p.row(n, tr.states[n - 1], tr.actions[n - 1]), rng);
        tr.actions[n] = sample_categorical(pi.row(n, tr.states[n]), rng);
    }
    if (loss) {
        tr.losses.resize(static_cast<std::size_t>(d.N + 1));
        for (int n = 0; n <= d.N; ++n) tr.losses[n] = (*loss)(n, tr.states[n], tr.actions[n]);
    }
    return tr;
}

double occupancy_shift_bound(const OccupancyMeasure& mu, const Kernel& p, const Kernel& q) {
    const Dims d = mu.dims();
    require_same(p.dims(), d, "kernel p");
    require_same(q.dims(), d, "kernel q");
    double acc = 0.0;
    double best = 0.0;
    for (int i = 0; i < d.N; ++i) {
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                auto pr = p.row(i + 1, x, a);
                auto qr = q.row(i + 1, x, a);
                double gap = 0.0;
                for (int y = 0; y < d.S; ++y) gap += std::abs(pr[y] - qr[y]);
                acc += mu(i, x, a) * gap;
            }
        best = std::max(best, acc);
    }
    return best;
}

double max_row_l1(const Kernel& p, const Kernel& q) {
    require_same(p.dims(), q.dims(), "kernels");
    const auto& a = p.raw();
    const auto& b = q.raw();
    const std::size_t S = static_cast<std::size_t>(p.dims().S);
    double best = 0.0;
    for (std::size_t r = 0; r < a.size(); r += S) {
        double gap = 0.0;
        for (std::size_t y = 0; y < S; ++y) gap += std::abs(a[r + y] - b[r + y]);
        best = std::max(best, gap);
    }
    return best;
}

double inner(const Field& f, const Field& g) {
    require_same(f.dims(), g.dims(), "fields");
    double s = 0.0;
    for (std::size_t i = 0; i < f.raw().size(); ++i) s += f.raw()[i] * g.raw()[i];
    return s;
}

double norm_inf1(const Field& f, const Field& g) {
    require_same(f.dims(), g.dims(), "fields");
    double best = 0.0;
    for (int n = 1; n <= f.dims().N; ++n) {
        auto a = f.layer(n);
        auto b = g.layer(n);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
        best = std::max(best, s);
    }
    return best;
}

std::vector<int> Gridworld::room_centers() const {
    const int m = side / 2;
    const int lo = (m - 1) / 2;
    const int hi = m + 1 + lo;
    std::vector<int> out;
    for (int r : {lo, hi})
        for (int c : {lo, hi}) {
            const bool same_room = ((coords(initial_cell).first < m) == (r < m)) &&
                                   ((coords(initial_cell).second < m) == (c < m));
            if (!same_room) out.push_back(cell(r, c));
        }
    return out;
}

Gridworld build_four_room_gridworld(const GridworldConfig& cfg) {
    if (cfg.side < 3 || cfg.side % 2 == 0) throw ModelError("grid side must be odd and at least 3");
    if (cfg.horizon < 1) throw ModelError("horizon must be positive");
    if (!(cfg.p_noise >= 0.0 && cfg.p_noise <= 1.0)) throw ModelError("p_noise must lie in [0,1]");
    const int side = cfg.side;
    const int m = side / 2;
    const int lo = (m - 1) / 2;
    const int hi = m + 1 + lo;

    Gridworld g;
    g.side = side;
    g.wall.assign(static_cast<std::size_t>(side) * side, false);
    for (int i = 0; i < side; ++i) {
        g.wall[static_cast<std::size_t>(g.cell(m, i))] = true;
        g.wall[static_cast<std::size_t>(g.cell(i, m))] = true;
    }
    std::vector<std::pair<int, int>> doors = cfg.doors;
    if (doors.empty()) doors = {{lo, m}, {hi, m}, {m, lo}, {m, hi}};
    bool seg[4] = {false, false, false, false};
    for (auto [r, c] : doors) {
        int which = -1;
        if (c == m && r >= 0 && r < m) which = 0;
        else if (c == m && r > m && r < side) which = 1;
        else if (r == m && c >= 0 && c < m) which = 2;
        else if (r == m && c > m && c < side) which = 3;
        if (which < 0) throw ModelError("door must lie on an interior wall segment");
        if (seg[which]) throw ModelError("each interior wall segment takes exactly one door");
        seg[which] = true;
        g.wall[static_cast<std::size_t>(g.cell(r, c))] = false;
    }
    for (bool s : seg)
        if (!s) throw ModelError("each interior wall segment takes exactly one door");

    auto [ir, ic] = cfg.initial_cell;
    if (!g.accessible(ir, ic)) throw ModelError("initial cell must be an accessible cell");
    g.initial_cell = g.cell(ir, ic);

    const Dims d{cfg.horizon, side * side, 5};
    const int dr[5] = {0, -1, 1, 0, 0};
    const int dc[5] = {0, 0, 0, -1, 1};
    Kernel p(d);
    std::vector<double> row(static_cast<std::size_t>(d.S));
    for (int x = 0; x < d.S; ++x) {
        auto [r, c] = g.coords(x);
        for (int a = 0; a < d.A; ++a) {
            std::fill(row.begin(), row.end(), 0.0);
            if (g.wall[static_cast<std::size_t>(x)]) {
                row[x] = 1.0;
            } else {
                int tr = r + dr[a], tc = c + dc[a];
                if (!g.accessible(tr, tc)) tr = r, tc = c;
                std::vector<int> nbrs;
                for (int k = 1; k < 5; ++k)
                    if (g.accessible(tr + dr[k], tc + dc[k])) nbrs.push_back(g.cell(tr + dr[k], tc + dc[k]));
                if (nbrs.empty()) {
                    row[g.cell(tr, tc)] = 1.0;
                } else {
                    row[g.cell(tr, tc)] += 1.0 - cfg.p_noise;
                    for (int y : nbrs) row[y] += cfg.p_noise / static_cast<double>(nbrs.size());
                }
            }
            for (int n = 1; n <= d.N; ++n) std::copy(row.begin(), row.end(), p.row(n, x, a).begin());
        }
    }
    g.mdp.dims = d;
    g.mdp.p = std::move(p);
    g.mdp.mu0.assign(d.layer_size(), 0.0);
    g.mdp.mu0[static_cast<std::size_t>(g.initial_cell) * d.A + static_cast<int>(Move::Stay)] = 1.0;
    return g;
}

}  // namespace omdcurl
