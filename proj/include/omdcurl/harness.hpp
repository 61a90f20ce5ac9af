#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "omdcurl/algorithms.hpp"
#include "omdcurl/mdp.hpp"

namespace omdcurl {

/// Invalid configuration; field() names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

using Cell = std::pair<int, int>;

struct ExperimentConfig {
    std::string task = "multi-objective";
    std::string algorithm = "full-info";
    std::string objective;  ///< custom and random-mdp tasks: linear | multi-target | constrained | quadratic

    int episodes = 1000;
    double tau = 0.01;
    double gamma = -1.0;
    double delta = 0.5;
    double confidence_delta = 0.05;
    double eps = 0.1;
    bool bonus = true;
    double bonus_lipschitz = -1.0;  ///< negative: the objective's constant
    std::string estimator = "empirical";
    bool pooled_counts = false;  ///< share transition counts across layers
    std::string alpha = "harmonic";  ///< "harmonic" for 1/(t+1) or a constant in (0, 0.5]
    bool check_invariants = true;

    int reps = 5;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::vector<int> snapshot_episodes;
    std::vector<int> heatmap_layers;

    // gridworld tasks
    int side = 11;
    int horizon = 40;
    double p_noise = 0.1;
    Cell initial_cell{0, 0};
    std::vector<Cell> doors;
    std::vector<Cell> targets;
    /// "seeking": sum_k (1 - m_k)^2, mass drawn to the targets; "as-written": -sum_k (1 - m_k)^2.
    std::string multi_target_form = "seeking";
    std::optional<Cell> target_cell;
    std::vector<Cell> constraint_cells;
    double reward_value = 1.0;
    double constraint_value = 1.0;

    // random-mdp task
    int states = 4;
    int actions = 3;
    double kernel_floor = 0.0;

    int comparator_iters = 2000;
    double comparator_tau = -1.0;  ///< negative: use tau
    std::pair<int, int> slope_window{0, 0};  ///< (0,0): [max(1, T/10), T]

    /// Throws ConfigError on inconsistent fields.
    void validate() const;
    std::pair<int, int> resolved_window() const;
    RunConfig run_config(std::uint64_t rep_seed) const;
};

/// Parses a flat key-value document; a document with a "config" member (a summary) is also accepted.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

/// Default constraint cells for the constrained task: a 2x2 block inside the start room.
std::vector<Cell> default_constraint_cells(int side);
/// Default target cell for the constrained task (centre of the room opposite the start).
Cell default_constrained_target(int side);

/// A resolved experiment: environment, objective source and bookkeeping for metrics.
struct Task {
    EpisodicMDP mdp;
    std::optional<Gridworld> grid;
    ObjectiveStream objectives;
    LossStream losses;        ///< set for linear streams
    ObjectivePtr fixed;       ///< set when the objective does not change across rounds
    std::vector<int> targets;
    std::vector<int> constraint_states;
};

Task build_task(const ExperimentConfig& cfg, std::uint64_t rep_seed);

/// Deterministic policy minimising <loss, mu^{pi,p}> by backward induction.
Policy best_response_dp(const EpisodicMDP& mdp, const LossField& loss);

/// Known-kernel OMD on a fixed objective for iters steps (exact DP for linear objectives).
Policy compute_comparator(const EpisodicMDP& mdp, const Objective& obj, int iters = 2000, double tau = 0.01);

struct RegretReport {
    std::vector<double> cumulative;
    std::string comparator;
    double slope = 0.0;
};

/// Least-squares slope of log R_t against log t over t in [t0, t1] (1-based), R clipped at 1e-12.
double loglog_slope(const std::vector<double>& cumulative, int t0, int t1);

RegretReport compute_regret(const std::vector<double>& loss, const std::vector<double>& comparator_values,
                            std::pair<int, int> window, std::string comparator = "");

struct RepetitionResult {
    std::uint64_t seed = 0;
    RunTrace trace;
    RegretReport regret;
    nlohmann::json metrics;
};

struct ExperimentResult {
    std::vector<RepetitionResult> reps;
    nlohmann::json summary;
};

/// Runs every repetition and writes trace.csv, heatmaps, plot data and summary.json under cfg.out.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Per-episode mean, min, max and log of the mean across series of equal length.
void emit_plot_data(const std::vector<std::vector<double>>& series, const std::filesystem::path& path);

/// Formats with 17 significant digits.
std::string format_number(double v);

}  // namespace omdcurl
