#include "omdcurl/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "omdcurl/exploration.hpp"
#include "omdcurl/logbarrier.hpp"
#include "omdcurl/lowdim.hpp"
#include "omdcurl/mdp.hpp"
#include "omdcurl/mirror_descent.hpp"

namespace omdcurl {

namespace {

constexpr double kFeasTol = 1e-8;

void assert_feasible(const OccupancyMeasure& mu, const Kernel& p, std::span<const double> mu0, const char* what) {
    const auto rep = check_feasibility(mu, p, mu0, kFeasTol);
    if (!rep.ok)
        throw InvariantError(std::string(what) + " occupancy infeasible: " + rep.detail + " (" +
                             std::to_string(rep.max_violation) + ")");
}

bool wants_snapshot(const RunConfig& cfg, int t) {
    return std::find(cfg.snapshot_episodes.begin(), cfg.snapshot_episodes.end(), t) != cfg.snapshot_episodes.end();
}

void reserve(RunTrace& tr, int T) {
    tr.loss.reserve(static_cast<std::size_t>(T));
    tr.est_error.reserve(static_cast<std::size_t>(T));
    tr.bonus_mass.reserve(static_cast<std::size_t>(T));
}

double observed_value(const Objective& obj, const OccupancyMeasure& mu, int N) {
    const double F = obj.value(mu);
    if (!(F >= -1e-12 && F <= N + 1e-12))
        throw ModelError("bandit CURL needs objective values in [0, N]; observed " + std::to_string(F));
    return F;
}

}  // namespace

void RunConfig::validate() const {
    if (T < 1) throw ModelError("T must be at least 1");
    if (!(tau > 0.0)) throw ModelError("tau must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw ModelError("delta must lie in (0,1]");
    if (gamma >= 0.0 && !std::isfinite(gamma)) throw ModelError("gamma must be finite");
    if (!(confidence_delta > 0.0 && confidence_delta < 1.0)) throw ModelError("confidence_delta must lie in (0,1)");
}

RunTrace run_full_info(const EpisodicMDP& mdp, const ObjectiveStream& objectives, const RunConfig& cfg) {
    cfg.validate();
    const Dims d = mdp.dims;
    KernelEstimator est(d, cfg.estimator, cfg.eps, &mdp.p, cfg.pooled_counts);
    const double C = hoeffding_constant(d, cfg.T, cfg.confidence_delta);
    Rng rng(cfg.seed);
    Policy pi = Policy::uniform(d);
    RunTrace tr;
    reserve(tr, cfg.T);

    for (int t = 1; t <= cfg.T; ++t) {
        const ObjectivePtr obj = objectives(t);
        const OccupancyMeasure mu_true = compute_occupancy(mdp, pi);
        tr.loss.push_back(obj->value(mu_true));
        if (wants_snapshot(cfg, t)) tr.snapshots.emplace_back(t, mu_true);
        tr.est_error.push_back(est.kind() == EstimatorKind::TrueKernel ? 0.0 : max_row_l1(mdp.p, est.kernel()));

        const OccupancyMeasure mu_hat = compute_occupancy(est.kernel(), mdp.mu0, pi);
        if (cfg.check_invariants) assert_feasible(mu_hat, est.kernel(), mdp.mu0, "estimated");

        const Trajectory traj = sample_trajectory(mdp, pi, rng);
        est.update(traj, cfg.check_invariants);

        Field z = obj->gradient(mu_hat);
        if (cfg.bonus) {
            const Field b = full_info_bonus(est.counts(), cfg.bonus_l(obj->lipschitz()), C);
            tr.bonus_mass.push_back(inner(b, mu_hat));
            for (std::size_t i = 0; i < z.raw().size(); ++i) z.raw()[i] -= b.raw()[i];
        } else {
            tr.bonus_mass.push_back(0.0);
        }
        pi = omd_step(z, cfg.tau, smooth_policy(pi, cfg.alpha_at(t)), est.kernel());
    }
    tr.final_policy = std::move(pi);
    tr.drift_checks = est.drift_checks();
    return tr;
}

RunTrace run_greedy_baseline(const EpisodicMDP& mdp, const ObjectiveStream& objectives, RunConfig cfg) {
    cfg.bonus = false;
    return run_full_info(mdp, objectives, cfg);
}

RunTrace run_bandit_rl(const EpisodicMDP& mdp, const LossStream& losses, const RunConfig& cfg) {
    cfg.validate();
    const Dims d = mdp.dims;
    KernelEstimator est(d, EstimatorKind::Empirical, 0.0, nullptr, cfg.pooled_counts);
    const double C = hoeffding_constant(d, cfg.T, cfg.confidence_delta);
    const double gamma = cfg.gamma_value();
    Rng rng(cfg.seed);
    Policy pi = Policy::uniform(d);
    RunTrace tr;
    reserve(tr, cfg.T);

    for (int t = 1; t <= cfg.T; ++t) {
        const LossField loss = losses(t);
        const OccupancyMeasure mu_true = compute_occupancy(mdp, pi);
        double realized = 0.0;
        for (int n = 1; n <= d.N; ++n)
            for (int x = 0; x < d.S; ++x)
                for (int a = 0; a < d.A; ++a) realized += loss(n, x, a) * mu_true(n, x, a);
        tr.loss.push_back(realized);
        if (wants_snapshot(cfg, t)) tr.snapshots.emplace_back(t, mu_true);
        tr.est_error.push_back(max_row_l1(mdp.p, est.kernel()));

        const Kernel widths = bernstein_widths(est.counts(), est.kernel(), cfg.T, cfg.confidence_delta);
        const Field mu_bar = upper_occupancy(pi, est.kernel(), widths, mdp.mu0);
        const OccupancyMeasure mu_hat = compute_occupancy(est.kernel(), mdp.mu0, pi);
        if (cfg.check_invariants) assert_feasible(mu_hat, est.kernel(), mdp.mu0, "estimated");

        const Trajectory traj = sample_trajectory(mdp, pi, rng, &loss);
        Field z(d);
        for (int n = 1; n <= d.N; ++n) {
            const int x = traj.states[n], a = traj.actions[n];
            z(n, x, a) = traj.losses[n] / (mu_bar(n, x, a) + gamma);
        }
        est.update(traj, cfg.check_invariants);

        if (cfg.bonus) {
            const Field b = full_info_bonus(est.counts(), cfg.bonus_l(1.0), C);
            tr.bonus_mass.push_back(inner(b, mu_hat));
            for (std::size_t i = 0; i < z.raw().size(); ++i) z.raw()[i] -= b.raw()[i];
        } else {
            tr.bonus_mass.push_back(0.0);
        }
        pi = omd_step(z, cfg.tau, smooth_policy(pi, cfg.alpha_at(t)), est.kernel());
    }
    tr.final_policy = std::move(pi);
    tr.drift_checks = est.drift_checks();
    return tr;
}

RunTrace run_bandit_curl_entropic(const EpisodicMDP& mdp, const ObjectiveStream& objectives, const RunConfig& cfg) {
    cfg.validate();
    const Dims d = mdp.dims;
    if (d.A < 2) throw ModelError("bandit CURL needs at least two actions");
    if (kernel_floor(mdp.p) < cfg.eps) throw ModelError("true kernel violates the declared floor eps");
    KernelEstimator est(d, EstimatorKind::Projected, cfg.eps, nullptr, cfg.pooled_counts);
    const double kap = kappa(cfg.eps, d.A);
    const Eigen::Index dim = lowdim_size(d);
    const double scale = (1.0 - cfg.delta) / (cfg.delta * kap) * static_cast<double>(dim);
    Rng rng(cfg.seed);
    // pi_mu generates the iterate mu^t under the current estimate; mu^1 minimises psi, i.e. the uniform policy.
    Policy pi_mu = Policy::uniform(d);
    RunTrace tr;
    reserve(tr, cfg.T);
    tr.model_gap.reserve(static_cast<std::size_t>(cfg.T));

    for (int t = 1; t <= cfg.T; ++t) {
        const ObjectivePtr obj = objectives(t);
        const Kernel& p_hat = est.kernel();
        const OccupancyMeasure mu_t = compute_occupancy(p_hat, mdp.mu0, pi_mu);
        const Eigen::VectorXd u = sample_unit_sphere(dim, rng);
        const EpisodicMDP model{d, p_hat, mdp.mu0};
        const OccupancyMeasure zeta = sphere_occupancy_point(u, model, cfg.eps);
        OccupancyMeasure mu_mix(d);
        for (std::size_t i = 0; i < mu_mix.raw().size(); ++i)
            mu_mix.raw()[i] = (1.0 - cfg.delta) * mu_t.raw()[i] + cfg.delta * zeta.raw()[i];
        if (cfg.check_invariants) {
            assert_feasible(zeta, p_hat, mdp.mu0, "sphere");
            assert_feasible(mu_mix, p_hat, mdp.mu0, "perturbed");
        }
        const Policy pi_play = policy_from_occupancy(mu_mix);

        const OccupancyMeasure mu_true = compute_occupancy(mdp, pi_play);
        const double F = observed_value(*obj, mu_true, d.N);
        tr.loss.push_back(F);
        tr.model_gap.push_back(std::abs(F - obj->value(mu_mix)));
        if (wants_snapshot(cfg, t)) tr.snapshots.emplace_back(t, mu_true);
        tr.est_error.push_back(max_row_l1(mdp.p, p_hat));

        const Trajectory traj = sample_trajectory(mdp, pi_play, rng);
        est.update(traj, cfg.check_invariants);

        Field z = lift_with_zero(scale * F * u, d);
        if (cfg.bonus) {
            const Field b = bandit_curl_bonus(est.counts(), cfg.bonus_l(obj->lipschitz()), cfg.T);
            tr.bonus_mass.push_back(inner(b, mu_mix));
            for (std::size_t i = 0; i < z.raw().size(); ++i) z.raw()[i] -= b.raw()[i];
        } else {
            tr.bonus_mass.push_back(0.0);
        }
        pi_mu = omd_step(z, cfg.tau, smooth_policy(pi_mu, cfg.alpha_at(t)), est.kernel());
    }
    tr.final_policy = std::move(pi_mu);
    tr.drift_checks = est.drift_checks();
    return tr;
}

RunTrace run_bandit_curl_logbarrier(const EpisodicMDP& mdp, const ObjectiveStream& objectives, const RunConfig& cfg) {
    cfg.validate();
    const Dims d = mdp.dims;
    const BarrierContext ctx(mdp);
    LowDimPoint xi = analytic_center(ctx, mdp).xi;
    const Eigen::Index dim = ctx.dim();
    Rng rng(cfg.seed);
    RunTrace tr;
    reserve(tr, cfg.T);

    for (int t = 1; t <= cfg.T; ++t) {
        const ObjectivePtr obj = objectives(t);
        const DikinFrame frame(ctx, xi);
        const Eigen::VectorXd u = sample_unit_sphere(dim, rng);
        const LowDimPoint xi_hat = frame.sample(cfg.delta, u);
        const OccupancyMeasure mu_hat = expand(xi_hat, mdp);
        if (cfg.check_invariants) assert_feasible(mu_hat, mdp.p, mdp.mu0, "Dikin sample");
        const Policy pi_play = policy_from_occupancy(mu_hat);
        const double F = observed_value(*obj, mu_hat, d.N);
        tr.loss.push_back(F);
        tr.est_error.push_back(0.0);
        tr.bonus_mass.push_back(0.0);
        if (wants_snapshot(cfg, t)) tr.snapshots.emplace_back(t, mu_hat);
        sample_trajectory(mdp, pi_play, rng);

        const Eigen::VectorXd g = frame.gradient_surrogate(F, u, cfg.delta);
        const LbStepResult step = lb_omd_step(ctx, frame, g, cfg.tau);
        if (step.stability_checked) ++tr.stability_checks;
        xi = step.xi;
    }
    tr.final_policy = policy_from_occupancy(expand(xi, mdp));
    return tr;
}

}  // namespace omdcurl
