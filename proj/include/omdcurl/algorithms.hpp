#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "omdcurl/estimation.hpp"
#include "omdcurl/objectives.hpp"

namespace omdcurl {

struct RunConfig {
    int T = 1000;
    double tau = 0.01;
    /// Exploration radius of the bandit-CURL samplers, in (0,1].
    double delta = 0.5;
    /// Implicit exploration for bandit RL; negative means gamma = tau.
    double gamma = -1.0;
    /// Confidence level of the bonus constant and of the Bernstein widths.
    double confidence_delta = 0.05;
    /// Kernel floor assumed by the entropic bandit-CURL method.
    double eps = 0.1;
    bool bonus = true;
    /// Lipschitz constant used in the bonus; negative means the objective's own constant (1 for bandit RL).
    double bonus_lipschitz = -1.0;
    EstimatorKind estimator = EstimatorKind::Empirical;
    /// Credit every observed transition to all layers (time-homogeneous kernels).
    bool pooled_counts = false;
    std::uint64_t seed = 0;
    /// Smoothing schedule alpha_t; defaults to 1/(t+1).
    std::function<double(int)> alpha;
    /// Episodes at which the true occupancy of the played policy is stored.
    std::vector<int> snapshot_episodes;
    /// Assert feasibility, drift and stability invariants every episode.
    bool check_invariants = true;

    double alpha_at(int t) const { return alpha ? alpha(t) : 1.0 / (t + 1.0); }
    double gamma_value() const { return gamma < 0.0 ? tau : gamma; }
    double bonus_l(double objective_l) const { return bonus_lipschitz < 0.0 ? objective_l : bonus_lipschitz; }
    void validate() const;
};

struct RunTrace {
    /// F^t(mu^{pi^t, p}) for t = 1..T (index t-1).
    std::vector<double> loss;
    /// max-row l1 gap between p and the estimate used at episode t.
    std::vector<double> est_error;
    /// <b^t, mu^{pi^t, p_hat^t}>
    std::vector<double> bonus_mass;
    /// |F(mu^{pi^t,p}) - F(mu^{pi^t,p_hat^t})|, entropic bandit-CURL only.
    std::vector<double> model_gap;
    std::vector<std::pair<int, OccupancyMeasure>> snapshots;
    /// Policy after the last update.
    Policy final_policy;
    std::int64_t drift_checks = 0;
    std::int64_t stability_checks = 0;
};

/// Full-information optimistic mirror descent; cfg.bonus = false gives the greedy baseline.
RunTrace run_full_info(const EpisodicMDP& mdp, const ObjectiveStream& objectives, const RunConfig& cfg);

/// run_full_info with the bonus switched off.
RunTrace run_greedy_baseline(const EpisodicMDP& mdp, const ObjectiveStream& objectives, RunConfig cfg);

/// Loss field for round t (1-based).
using LossStream = std::function<LossField(int t)>;

/// Bandit-feedback RL with importance-weighted losses and upper occupancy bounds.
RunTrace run_bandit_rl(const EpisodicMDP& mdp, const LossStream& losses, const RunConfig& cfg);

/// Bandit CURL with entropic regularisation, sphere sampling and projected Laplace estimates.
RunTrace run_bandit_curl_entropic(const EpisodicMDP& mdp, const ObjectiveStream& objectives, const RunConfig& cfg);

/// Bandit CURL on a known MDP with log-barrier regularisation and Dikin sampling.
RunTrace run_bandit_curl_logbarrier(const EpisodicMDP& mdp, const ObjectiveStream& objectives, const RunConfig& cfg);

}  // namespace omdcurl
