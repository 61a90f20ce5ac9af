#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "omdcurl/types.hpp"

namespace omdcurl {

/// Per-layer losses in [0,1]; layer 0 is ignored.
using LossField = Field;

/**
 * F(mu) = sum_{n=1..N} f_n(mu_n) with a per-layer gradient oracle.
 *
 * lipschitz() is the per-layer constant with respect to the l1 norm.
 */
class Objective {
public:
    virtual ~Objective() = default;
    virtual double value(const OccupancyMeasure& mu) const = 0;
    virtual Field gradient(const OccupancyMeasure& mu) const = 0;
    virtual double lipschitz() const = 0;
    /// True when the gradient does not depend on mu.
    virtual bool is_linear() const { return false; }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

ObjectivePtr make_linear_objective(LossField loss);

/// f_n = -sum_k (1 - rho_n(target_k))^2
ObjectivePtr make_multi_target_objective(std::vector<int> targets, Dims dims);

/// f_n = sum_k (1 - rho_n(target_k))^2, the convex form whose minimisers concentrate mass on the targets.
ObjectivePtr make_target_seeking_objective(std::vector<int> targets, Dims dims);

/// f_n = -<r, mu_n> + <mu_n, c>^2 with r, c given over (x,a)
ObjectivePtr make_constrained_objective(std::vector<double> reward, std::vector<double> constraint, Dims dims);

/// f_n = (w/2) ||mu_n - target_n||_2^2; values lie in [0, w N] for occupancy-shaped targets.
ObjectivePtr make_quadratic_objective(Field target, double weight = 1.0);

inline double evaluate(const Objective& obj, const OccupancyMeasure& mu) { return obj.value(mu); }
inline Field gradient(const Objective& obj, const OccupancyMeasure& mu) { return obj.gradient(mu); }

/// sum_{n=1..N} max_{x,a} |g_n(x,a)|
double dual_norm_1inf(const Field& g);

/// Objective for round t (1-based).
using ObjectiveStream = std::function<ObjectivePtr(int t)>;

ObjectiveStream fixed_stream(ObjectivePtr obj);

/// Fresh uniform [0,1] linear losses every round, reproducible from the seed.
ObjectiveStream random_linear_stream(Dims dims, std::uint64_t seed);

/// Linear losses for round t drawn as Bernoulli(mean) per entry, reproducible from the seed.
ObjectiveStream bernoulli_linear_stream(LossField mean, std::uint64_t seed);

}  // namespace omdcurl
