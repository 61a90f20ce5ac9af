#include "omdcurl/lowdim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace omdcurl {

OccupancyMeasure expand(const LowDimPoint& xi, const EpisodicMDP& mdp) {
    const Dims d = mdp.dims;
    if (d.A < 2) throw ModelError("low-dimensional representation needs A >= 2");
    if (xi.size() != lowdim_size(d)) throw ModelError("low-dimensional point has wrong size");
    OccupancyMeasure mu(d);
    std::copy(mdp.mu0.begin(), mdp.mu0.end(), mu.layer(0).begin());
    std::vector<double> rho(static_cast<std::size_t>(d.S));
    const int last = d.A - 1;
    for (int n = 1; n <= d.N; ++n) {
        std::fill(rho.begin(), rho.end(), 0.0);
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                const double m = mu(n - 1, x, a);
                if (m == 0.0) continue;
                auto row = mdp.p.row(n, x, a);
                for (int y = 0; y < d.S; ++y) rho[y] += m * row[y];
            }
        for (int y = 0; y < d.S; ++y) {
            double rest = rho[y];
            for (int a = 0; a < last; ++a) {
                const double v = xi[lowdim_index(d, n, y, a)];
                mu(n, y, a) = v;
                rest -= v;
            }
            mu(n, y, last) = rest;
        }
    }
    return mu;
}

LowDimPoint reduce(const OccupancyMeasure& mu) {
    const Dims d = mu.dims();
    if (d.A < 2) throw ModelError("low-dimensional representation needs A >= 2");
    LowDimPoint xi(lowdim_size(d));
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A - 1; ++a) xi[lowdim_index(d, n, x, a)] = mu(n, x, a);
    return xi;
}

Eigen::VectorXd flatten_layers(const Field& f) {
    const Dims d = f.dims();
    Eigen::VectorXd v(static_cast<Eigen::Index>(d.N) * static_cast<Eigen::Index>(d.layer_size()));
    std::copy(f.raw().begin() + static_cast<std::ptrdiff_t>(d.layer_size()), f.raw().end(), v.data());
    return v;
}

Field lift_with_zero(const LowDimPoint& g, Dims d) {
    Field out(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A - 1; ++a) out(n, x, a) = g[lowdim_index(d, n, x, a)];
    return out;
}

bool ConstraintSystem::full_column_rank() const {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    return qr.rank() == B.cols();
}

ConstraintSystem build_constraint_system(const EpisodicMDP& mdp) {
    const Dims d = mdp.dims;
    const Eigen::Index dim = lowdim_size(d);
    ConstraintSystem sys;
    LowDimPoint xi = LowDimPoint::Zero(dim);
    sys.beta = flatten_layers(expand(xi, mdp));
    sys.B.resize(sys.beta.size(), dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        xi[j] = 1.0;
        sys.B.col(j) = flatten_layers(expand(xi, mdp)) - sys.beta;
        xi[j] = 0.0;
    }
    return sys;
}

double kappa(double eps, int A) {
    if (A < 2) throw ModelError("kappa needs at least two actions");
    if (!(eps > 0.0)) throw ModelError("kappa needs eps > 0");
    const double k = A - 1.0;
    return eps / (k + std::sqrt(k));
}

double kernel_floor(const Kernel& p) {
    return p.raw().empty() ? 0.0 : *std::min_element(p.raw().begin(), p.raw().end());
}

OccupancyMeasure sphere_occupancy_point(const Eigen::VectorXd& u, const EpisodicMDP& mdp, double eps) {
    const Dims d = mdp.dims;
    if (u.size() != lowdim_size(d)) throw ModelError("direction has wrong size");
    if (u.norm() > 1.0 + 1e-12) throw ModelError("direction must lie in the unit ball");
    if (kernel_floor(mdp.p) < eps) throw ModelError("kernel floor is below eps");
    const double k = kappa(eps, d.A);
    LowDimPoint xi = LowDimPoint::Constant(u.size(), k) + k * u;
    return expand(xi, mdp);
}

Eigen::VectorXd sample_unit_sphere(Eigen::Index dim, Rng& rng) {
    if (dim < 1) throw ModelError("sphere dimension must be positive");
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(dim);
    double nrm = 0.0;
    while (nrm == 0.0) {
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = g(rng);
        nrm = v.norm();
    }
    return v / nrm;
}

Eigen::VectorXd sample_unit_ball(Eigen::Index dim, Rng& rng) {
    Eigen::VectorXd v = sample_unit_sphere(dim, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return v * std::pow(u(rng), 1.0 / static_cast<double>(dim));
}

}  // namespace omdcurl
