// omdcurl command line: run experiments, list presets, validate configs.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "omdcurl/harness.hpp"

using namespace omdcurl;
using nlohmann::json;

namespace {

struct Overrides {
    std::string config;
    std::string preset;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<int> episodes;
    std::optional<std::string> algo;
    std::optional<std::string> task;
    bool no_bonus = false;
    std::optional<double> tau;
    std::optional<double> gamma;
    std::optional<double> delta;
    std::optional<double> eps;
    std::optional<double> bonus_l;
};

void add_flags(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "flat JSON config file");
    app->add_option("--preset", o.preset, "start from a named preset");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--seed", o.seed, "base seed");
    app->add_option("--reps", o.reps, "number of repetitions");
    app->add_option("--episodes", o.episodes, "episodes per repetition");
    app->add_option("--algo", o.algo, "algorithm");
    app->add_option("--task", o.task, "task");
    app->add_flag("--no-bonus", o.no_bonus, "disable the exploration bonus");
    app->add_option("--tau", o.tau, "mirror descent step size");
    app->add_option("--gamma", o.gamma, "implicit exploration (bandit RL)");
    app->add_option("--delta", o.delta, "exploration radius (bandit CURL)");
    app->add_option("--eps", o.eps, "kernel floor (entropic bandit CURL)");
    app->add_option("--bonus-lipschitz", o.bonus_l, "Lipschitz constant in the bonus");
}

ExperimentConfig resolve(const Overrides& o) {
    if (!o.config.empty() && !o.preset.empty()) throw ConfigError("preset", "--preset and --config are exclusive");
    ExperimentConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    else if (!o.preset.empty()) c = preset(o.preset);
    if (o.out) c.out = *o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.reps) c.reps = *o.reps;
    if (o.episodes) c.episodes = *o.episodes;
    if (o.algo) c.algorithm = *o.algo;
    if (o.task) c.task = *o.task;
    if (o.no_bonus) c.bonus = false;
    if (o.tau) c.tau = *o.tau;
    if (o.gamma) c.gamma = *o.gamma;
    if (o.delta) c.delta = *o.delta;
    if (o.eps) c.eps = *o.eps;
    if (o.bonus_l) c.bonus_lipschitz = *o.bonus_l;
    // Snapshots past the horizon are dropped silently when --episodes shortens a preset.
    std::erase_if(c.snapshot_episodes, [&](int t) { return t > c.episodes; });
    if (c.slope_window.second > c.episodes) c.slope_window = {0, 0};
    c.validate();
    return c;
}

int config_error(const ConfigError& e) {
    std::cerr << json{{"error", "config"}, {"field", e.field()}, {"message", e.what()}}.dump() << '\n';
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online convex RL with bonus-driven mirror descent"};
    app.require_subcommand(1);

    Overrides run_opts, val_opts;
    auto* run = app.add_subcommand("run", "run an experiment and write traces");
    add_flags(run, run_opts);
    auto* presets = app.add_subcommand("presets", "list presets, or print one as JSON");
    std::string preset_name;
    presets->add_option("name", preset_name, "preset to print");
    auto* validate = app.add_subcommand("validate", "check a configuration and print it resolved");
    add_flags(validate, val_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const ExperimentConfig cfg = resolve(run_opts);
            const ExperimentResult res = run_experiment(cfg);
            std::cout << res.summary["mean"].dump(2) << '\n';
            std::cout << "wrote " << cfg.out << '\n';
        } else if (*presets) {
            if (preset_name.empty()) {
                for (const auto& n : preset_names()) std::cout << n << '\n';
            } else {
                std::cout << to_json(preset(preset_name)).dump(2) << '\n';
            }
        } else if (*validate) {
            std::cout << to_json(resolve(val_opts)).dump(2) << '\n';
        }
    } catch (const ConfigError& e) {
        return config_error(e);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}
