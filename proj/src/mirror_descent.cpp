#include "omdcurl/mirror_descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omdcurl/mdp.hpp"

namespace omdcurl {

namespace {

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

}  // namespace

double neg_entropy_psi(const OccupancyMeasure& mu) {
    const Dims d = mu.dims();
    double s = 0.0;
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x) {
            double rho = 0.0;
            for (int a = 0; a < d.A; ++a) {
                s += xlogx(mu(n, x, a));
                rho += mu(n, x, a);
            }
            s -= xlogx(rho);
        }
    return s;
}

Field neg_entropy_psi_gradient(const OccupancyMeasure& mu) {
    const Dims d = mu.dims();
    Field g(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x) {
            double rho = 0.0;
            for (int a = 0; a < d.A; ++a) rho += mu(n, x, a);
            for (int a = 0; a < d.A; ++a) {
                if (!(mu(n, x, a) > 0.0)) throw ModelError("psi gradient needs a strictly positive occupancy");
                g(n, x, a) = std::log(mu(n, x, a) / rho);
            }
        }
    return g;
}

double gamma_divergence(const OccupancyMeasure& mu, const Policy& pi, const Policy& pi_ref) {
    const Dims d = mu.dims();
    if (!(pi.dims() == d) || !(pi_ref.dims() == d)) throw ModelError("dimension mismatch in gamma_divergence");
    double s = 0.0;
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                const double m = mu(n, x, a);
                if (m <= 0.0) continue;
                if (!(pi_ref(n, x, a) > 0.0)) throw ModelError("reference policy vanishes where mu has mass");
                s += m * std::log(pi(n, x, a) / pi_ref(n, x, a));
            }
    return s;
}

double gamma_divergence(const OccupancyMeasure& mu, const OccupancyMeasure& mu_ref) {
    return gamma_divergence(mu, policy_from_occupancy(mu), policy_from_occupancy(mu_ref));
}

Policy smooth_policy(const Policy& pi, double alpha) {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw ModelError("smoothing parameter must lie in (0, 0.5]");
    Policy out = pi;
    const double floor = alpha / pi.dims().A;
    for (double& v : out.raw()) v = (1.0 - alpha) * v + floor;
    return out;
}

Policy omd_step(const Field& z, double tau, const Policy& pi_ref, const Kernel& q_next) {
    const Dims d = pi_ref.dims();
    if (!(tau > 0.0)) throw ModelError("learning rate must be positive");
    if (!(z.dims() == d) || !(q_next.dims() == d)) throw ModelError("dimension mismatch in omd_step");

    Policy pi(d);
    // q holds Q_n(x,a); v holds the soft value (1/tau) log sum_a pi_ref exp(tau Q_n), which
    // equals sum_a pi_n [-(1/tau) log(pi_n/pi_ref) + Q_n] at the minimiser.
    std::vector<double> q(d.layer_size());
    std::vector<double> v(static_cast<std::size_t>(d.S));
    std::vector<double> logw(static_cast<std::size_t>(d.A));
    for (int x = 0; x < d.S; ++x)
        for (int a = 0; a < d.A; ++a) q[x * d.A + a] = -z(d.N, x, a);

    for (int n = d.N; n >= 1; --n) {
        for (int x = 0; x < d.S; ++x) {
            double m = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < d.A; ++a) {
                const double ref = pi_ref(n, x, a);
                logw[a] = ref > 0.0 ? std::log(ref) + tau * q[x * d.A + a] : -std::numeric_limits<double>::infinity();
                m = std::max(m, logw[a]);
            }
            if (!std::isfinite(m)) throw ModelError("reference policy row is zero or values overflowed");
            double total = 0.0;
            for (int a = 0; a < d.A; ++a) {
                const double w = std::exp(logw[a] - m);
                pi(n, x, a) = w;
                total += w;
            }
            for (int a = 0; a < d.A; ++a) pi(n, x, a) /= total;
            v[x] = (m + std::log(total)) / tau;
        }
        if (n == 1) break;
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                auto row = q_next.row(n, x, a);
                double ev = 0.0;
                for (int y = 0; y < d.S; ++y) ev += row[y] * v[y];
                q[x * d.A + a] = -z(n - 1, x, a) + ev;
            }
    }
    return pi;
}

}  // namespace omdcurl
