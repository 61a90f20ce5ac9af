#pragma once

#include "omdcurl/types.hpp"

namespace omdcurl {

/// psi(mu) = sum_{n=1..N} [phi(mu_n) - phi(rho_n)], phi(v) = sum v log v with 0 log 0 = 0.
double neg_entropy_psi(const OccupancyMeasure& mu);

/// Gradient of psi: log pi_n(a|x) for layers 1..N. Requires mu_n(x,a) > 0.
Field neg_entropy_psi_gradient(const OccupancyMeasure& mu);

/// Gamma(mu, mu') = sum_n E_{mu_n}[log pi_n / pi'_n]; throws if pi' vanishes where mu has mass.
double gamma_divergence(const OccupancyMeasure& mu, const OccupancyMeasure& mu_ref);

/// Same divergence evaluated directly from the conditional policies.
double gamma_divergence(const OccupancyMeasure& mu, const Policy& pi, const Policy& pi_ref);

/// Rowwise (1 - alpha) pi + alpha / A, alpha in (0, 0.5].
Policy smooth_policy(const Policy& pi, double alpha);

/// Default smoothing schedule alpha_t = 1/(t+1).
inline double default_alpha(int t) { return 1.0 / (t + 1.0); }

/**
 * Closed-form mirror-descent step.
 *
 * Returns the policy whose occupancy under q_next minimises
 * tau <z, mu> + Gamma(mu, mu^{pi_ref, q_next}) over M^{q_next}.
 * Layer 0 of z is ignored since it cannot be influenced.
 */
Policy omd_step(const Field& z, double tau, const Policy& pi_ref, const Kernel& q_next);

}  // namespace omdcurl
