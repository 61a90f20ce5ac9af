#include "omdcurl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "omdcurl/mirror_descent.hpp"

namespace omdcurl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kTasks = {"multi-objective", "constrained", "custom", "random-mdp"};
const std::vector<std::string> kAlgorithms = {"full-info", "greedy", "bandit-rl", "bandit-curl-entropic",
                                              "bandit-curl-logbarrier"};
const std::vector<std::string> kEstimators = {"empirical", "laplace", "projected", "true"};
const std::vector<std::string> kObjectives = {"linear", "multi-target", "constrained", "quadratic"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::string joined(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "field has the wrong type");
    }
}

Cell get_cell(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw ConfigError(key, "expected a [row, col] pair");
    return {v[0].get<int>(), v[1].get<int>()};
}

std::vector<Cell> get_cells(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError(key, "expected a list of [row, col] pairs");
    std::vector<Cell> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_cell(v[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<int> get_ints(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError(key, "expected a list of integers");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) throw ConfigError(key, "expected a list of integers");
        out.push_back(e.get<int>());
    }
    return out;
}

json cells_json(const std::vector<Cell>& cells) {
    json a = json::array();
    for (auto [r, c] : cells) a.push_back({r, c});
    return a;
}

EstimatorKind estimator_kind(const std::string& s) {
    if (s == "laplace") return EstimatorKind::Laplace;
    if (s == "projected") return EstimatorKind::Projected;
    if (s == "true") return EstimatorKind::TrueKernel;
    return EstimatorKind::Empirical;
}

bool bandit_curl(const std::string& algo) { return algo.rfind("bandit-curl", 0) == 0; }

std::string resolved_objective(const ExperimentConfig& cfg) {
    if (!cfg.objective.empty()) return cfg.objective;
    if (cfg.task == "multi-objective") return "multi-target";
    if (cfg.task == "constrained") return "constrained";
    if (cfg.task == "random-mdp") return bandit_curl(cfg.algorithm) ? "quadratic" : "linear";
    return "multi-target";
}

}  // namespace

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::vector<Cell> default_constraint_cells(int side) {
    // 2x2 block in the middle of the start room, between the start corner and both of its doors.
    const int lo = (side / 2 - 1) / 2;
    return {{lo, lo}, {lo, lo + 1}, {lo + 1, lo}, {lo + 1, lo + 1}};
}

Cell default_constrained_target(int side) {
    const int m = side / 2;
    const int hi = m + 1 + (m - 1) / 2;
    return {hi, hi};
}

std::pair<int, int> ExperimentConfig::resolved_window() const {
    if (slope_window.first > 0) return slope_window;
    return {std::max(1, episodes / 10), episodes};
}

void ExperimentConfig::validate() const {
    if (!contains(kTasks, task)) throw ConfigError("task", "unknown task; expected one of " + joined(kTasks));
    if (!contains(kAlgorithms, algorithm))
        throw ConfigError("algorithm", "unknown algorithm; expected one of " + joined(kAlgorithms));
    if (!objective.empty() && !contains(kObjectives, objective))
        throw ConfigError("objective", "unknown objective; expected one of " + joined(kObjectives));
    if (!contains(kEstimators, estimator))
        throw ConfigError("estimator", "unknown estimator; expected one of " + joined(kEstimators));
    if (episodes < 1) throw ConfigError("episodes", "must be at least 1");
    if (!(tau > 0.0)) throw ConfigError("tau", "must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta", "must lie in (0,1]");
    if (!(confidence_delta > 0.0 && confidence_delta < 1.0)) throw ConfigError("confidence_delta", "must lie in (0,1)");
    if (reps < 1) throw ConfigError("reps", "must be at least 1");
    if (alpha != "harmonic") {
        char* end = nullptr;
        const double a = std::strtod(alpha.c_str(), &end);
        if (end == alpha.c_str() || *end != '\0' || !(a > 0.0 && a <= 0.5))
            throw ConfigError("alpha", "must be \"harmonic\" or a number in (0, 0.5]");
    }
    if (comparator_iters < 0) throw ConfigError("comparator_iters", "must be nonnegative");
    if (slope_window.first != 0 || slope_window.second != 0) {
        if (slope_window.first < 1 || slope_window.second < slope_window.first || slope_window.second > episodes)
            throw ConfigError("slope_window", "must satisfy 1 <= start <= end <= episodes");
    }
    const std::string obj = resolved_objective(*this);
    if (task == "random-mdp") {
        if (states < 1 || actions < 1 || horizon < 1) throw ConfigError("states", "states, actions, horizon must be positive");
        if (!(kernel_floor >= 0.0 && kernel_floor * states <= 1.0))
            throw ConfigError("kernel_floor", "must lie in [0, 1/states]");
        if (obj != "linear" && obj != "quadratic")
            throw ConfigError("objective", "random-mdp supports linear or quadratic objectives");
    } else {
        if (side < 3 || side % 2 == 0) throw ConfigError("side", "must be odd and at least 3");
        if (horizon < 1) throw ConfigError("horizon", "must be positive");
        if (!(p_noise >= 0.0 && p_noise <= 1.0)) throw ConfigError("p_noise", "must lie in [0,1]");
        if (task == "multi-objective" && obj != "multi-target")
            throw ConfigError("objective", "multi-objective task uses the multi-target objective");
        if (task == "constrained" && obj != "constrained")
            throw ConfigError("objective", "constrained task uses the constrained objective");
        if (obj == "quadratic") throw ConfigError("objective", "quadratic objectives are available on random-mdp only");
        if (multi_target_form != "seeking" && multi_target_form != "as-written")
            throw ConfigError("multi_target_form", "expected \"seeking\" or \"as-written\"");
        if (!(reward_value >= 0.0)) throw ConfigError("reward_value", "must be nonnegative");
        if (!(constraint_value >= 0.0)) throw ConfigError("constraint_value", "must be nonnegative");
    }
    if (algorithm == "bandit-rl" && obj != "linear")
        throw ConfigError("algorithm", "bandit-rl needs a linear objective");
    if (bandit_curl(algorithm) && obj != "quadratic")
        throw ConfigError("algorithm", "bandit CURL needs objective values in [0, N]; use the quadratic objective");
    if (bandit_curl(algorithm) && actions < 2 && task == "random-mdp")
        throw ConfigError("actions", "bandit CURL needs at least two actions");
    if (algorithm == "bandit-curl-entropic" && task == "random-mdp") {
        if (!(eps > 0.0 && eps <= 0.5 / states)) throw ConfigError("eps", "must lie in (0, 1/(2 states)]");
        if (kernel_floor < eps) throw ConfigError("kernel_floor", "must be at least eps for the entropic method");
    }
}

RunConfig ExperimentConfig::run_config(std::uint64_t rep_seed) const {
    RunConfig rc;
    rc.T = episodes;
    rc.tau = tau;
    rc.gamma = gamma;
    rc.delta = delta;
    rc.confidence_delta = confidence_delta;
    rc.eps = eps;
    rc.bonus = bonus && algorithm != "greedy";
    rc.bonus_lipschitz = bonus_lipschitz;
    rc.estimator = estimator_kind(estimator);
    rc.pooled_counts = pooled_counts;
    rc.seed = rep_seed;
    rc.snapshot_episodes = snapshot_episodes;
    rc.check_invariants = check_invariants;
    if (alpha != "harmonic") {
        const double a = std::stod(alpha);
        rc.alpha = [a](int) { return a; };
    }
    return rc;
}

ExperimentConfig parse_config(const json& root) {
    if (!root.is_object()) throw ConfigError("", "config must be a JSON object");
    const json& j = root.contains("config") && root["config"].is_object() ? root["config"] : root;
    ExperimentConfig c;
    using Setter = std::function<void(const json&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"task", [&](const json& v, const std::string& k) { c.task = get_as<std::string>(v, k); }},
        {"algorithm", [&](const json& v, const std::string& k) { c.algorithm = get_as<std::string>(v, k); }},
        {"objective", [&](const json& v, const std::string& k) { c.objective = get_as<std::string>(v, k); }},
        {"episodes", [&](const json& v, const std::string& k) { c.episodes = get_as<int>(v, k); }},
        {"tau", [&](const json& v, const std::string& k) { c.tau = get_as<double>(v, k); }},
        {"gamma", [&](const json& v, const std::string& k) { c.gamma = get_as<double>(v, k); }},
        {"delta", [&](const json& v, const std::string& k) { c.delta = get_as<double>(v, k); }},
        {"confidence_delta", [&](const json& v, const std::string& k) { c.confidence_delta = get_as<double>(v, k); }},
        {"eps", [&](const json& v, const std::string& k) { c.eps = get_as<double>(v, k); }},
        {"bonus", [&](const json& v, const std::string& k) { c.bonus = get_as<bool>(v, k); }},
        {"bonus_lipschitz", [&](const json& v, const std::string& k) { c.bonus_lipschitz = get_as<double>(v, k); }},
        {"pooled_counts", [&](const json& v, const std::string& k) { c.pooled_counts = get_as<bool>(v, k); }},
        {"estimator", [&](const json& v, const std::string& k) { c.estimator = get_as<std::string>(v, k); }},
        {"alpha",
         [&](const json& v, const std::string& k) {
             c.alpha = v.is_number() ? format_number(v.get<double>()) : get_as<std::string>(v, k);
         }},
        {"check_invariants", [&](const json& v, const std::string& k) { c.check_invariants = get_as<bool>(v, k); }},
        {"reps", [&](const json& v, const std::string& k) { c.reps = get_as<int>(v, k); }},
        {"seed", [&](const json& v, const std::string& k) { c.seed = get_as<std::uint64_t>(v, k); }},
        {"out", [&](const json& v, const std::string& k) { c.out = get_as<std::string>(v, k); }},
        {"snapshot_episodes", [&](const json& v, const std::string& k) { c.snapshot_episodes = get_ints(v, k); }},
        {"heatmap_layers", [&](const json& v, const std::string& k) { c.heatmap_layers = get_ints(v, k); }},
        {"side", [&](const json& v, const std::string& k) { c.side = get_as<int>(v, k); }},
        {"horizon", [&](const json& v, const std::string& k) { c.horizon = get_as<int>(v, k); }},
        {"p_noise", [&](const json& v, const std::string& k) { c.p_noise = get_as<double>(v, k); }},
        {"initial_cell", [&](const json& v, const std::string& k) { c.initial_cell = get_cell(v, k); }},
        {"doors", [&](const json& v, const std::string& k) { c.doors = get_cells(v, k); }},
        {"targets", [&](const json& v, const std::string& k) { c.targets = get_cells(v, k); }},
        {"multi_target_form",
         [&](const json& v, const std::string& k) { c.multi_target_form = get_as<std::string>(v, k); }},
        {"target_cell",
         [&](const json& v, const std::string& k) {
             if (v.is_null()) c.target_cell.reset();
             else c.target_cell = get_cell(v, k);
         }},
        {"constraint_cells", [&](const json& v, const std::string& k) { c.constraint_cells = get_cells(v, k); }},
        {"reward_value", [&](const json& v, const std::string& k) { c.reward_value = get_as<double>(v, k); }},
        {"constraint_value", [&](const json& v, const std::string& k) { c.constraint_value = get_as<double>(v, k); }},
        {"states", [&](const json& v, const std::string& k) { c.states = get_as<int>(v, k); }},
        {"actions", [&](const json& v, const std::string& k) { c.actions = get_as<int>(v, k); }},
        {"kernel_floor", [&](const json& v, const std::string& k) { c.kernel_floor = get_as<double>(v, k); }},
        {"comparator_iters", [&](const json& v, const std::string& k) { c.comparator_iters = get_as<int>(v, k); }},
        {"comparator_tau", [&](const json& v, const std::string& k) { c.comparator_tau = get_as<double>(v, k); }},
        {"slope_window",
         [&](const json& v, const std::string& k) {
             auto w = get_ints(v, k);
             if (w.size() != 2) throw ConfigError(k, "expected [start, end]");
             c.slope_window = {w[0], w[1]};
         }},
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto s = setters.find(it.key());
        if (s == setters.end()) throw ConfigError(it.key(), "unknown config key");
        s->second(it.value(), it.key());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["task"] = c.task;
    j["algorithm"] = c.algorithm;
    j["objective"] = resolved_objective(c);
    j["episodes"] = c.episodes;
    j["tau"] = c.tau;
    j["gamma"] = c.gamma;
    j["delta"] = c.delta;
    j["confidence_delta"] = c.confidence_delta;
    j["eps"] = c.eps;
    j["bonus"] = c.bonus;
    j["bonus_lipschitz"] = c.bonus_lipschitz;
    j["estimator"] = c.estimator;
    j["pooled_counts"] = c.pooled_counts;
    j["alpha"] = c.alpha;
    j["check_invariants"] = c.check_invariants;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["snapshot_episodes"] = c.snapshot_episodes;
    j["heatmap_layers"] = c.heatmap_layers;
    j["side"] = c.side;
    j["horizon"] = c.horizon;
    j["p_noise"] = c.p_noise;
    j["initial_cell"] = {c.initial_cell.first, c.initial_cell.second};
    j["doors"] = cells_json(c.doors);
    j["targets"] = cells_json(c.targets);
    j["multi_target_form"] = c.multi_target_form;
    j["target_cell"] = c.target_cell ? json{c.target_cell->first, c.target_cell->second} : json(nullptr);
    j["constraint_cells"] = cells_json(c.constraint_cells);
    j["reward_value"] = c.reward_value;
    j["constraint_value"] = c.constraint_value;
    j["states"] = c.states;
    j["actions"] = c.actions;
    j["kernel_floor"] = c.kernel_floor;
    j["comparator_iters"] = c.comparator_iters;
    j["comparator_tau"] = c.comparator_tau;
    j["slope_window"] = {c.slope_window.first, c.slope_window.second};
    return j;
}

std::vector<std::string> preset_names() {
    return {"multi-objective", "constrained", "bandit-rl", "bandit-curl-entropic", "bandit-curl-logbarrier"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    if (name == "multi-objective" || name == "constrained") {
        c.task = name;
        c.snapshot_episodes = name == "constrained" ? std::vector<int>{1, 100, 1000} : std::vector<int>{1, 10, 50, 100, 1000};
        c.heatmap_layers = {c.horizon};
        c.pooled_counts = true;
        c.bonus_lipschitz = 1e-3;
        c.comparator_tau = 0.1;
    } else if (name == "bandit-rl") {
        c.task = "random-mdp";
        c.algorithm = "bandit-rl";
        c.states = 4;
        c.actions = 3;
        c.horizon = 4;
        c.episodes = 2000;
        c.reps = 10;
        c.tau = 0.05;
        c.kernel_floor = 0.02;
        c.slope_window = {200, 2000};
    } else if (name == "bandit-curl-entropic") {
        c.task = "random-mdp";
        c.algorithm = "bandit-curl-entropic";
        c.states = 2;
        c.actions = 2;
        c.horizon = 2;
        c.eps = 0.2;
        c.kernel_floor = 0.2;
        c.episodes = 5000;
        c.reps = 10;
        c.tau = 0.01;
        c.delta = 0.5;
        c.comparator_tau = 1.0;
    } else if (name == "bandit-curl-logbarrier") {
        c.task = "random-mdp";
        c.algorithm = "bandit-curl-logbarrier";
        c.states = 3;
        c.actions = 2;
        c.horizon = 3;
        c.kernel_floor = 0.05;
        c.episodes = 5000;
        c.reps = 10;
        c.delta = 0.5;
        c.tau = 0.5 / (16.0 * 3 * 3 * 3 * 2);
        c.comparator_tau = 1.0;
    } else {
        throw ConfigError("preset", "unknown preset; expected one of " + joined(preset_names()));
    }
    c.out = "out/" + name;
    c.validate();
    return c;
}

namespace {

int grid_cell(const Gridworld& g, Cell c, const std::string& key) {
    if (c.first < 0 || c.second < 0 || c.first >= g.side || c.second >= g.side)
        throw ConfigError(key, "cell outside the grid");
    if (!g.accessible(c.first, c.second)) throw ConfigError(key, "cell is a wall");
    return g.cell(c.first, c.second);
}

Kernel random_kernel(Dims d, double floor, Rng& rng) {
    std::gamma_distribution<double> gam(1.0, 1.0);
    Kernel p(d);
    for (int n = 1; n <= d.N; ++n)
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                auto row = p.row(n, x, a);
                double s = 0.0;
                for (double& v : row) s += (v = gam(rng));
                for (double& v : row) v = floor + (1.0 - floor * d.S) * v / s;
            }
    return p;
}

}  // namespace

Task build_task(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
    Task task;
    const std::string obj = resolved_objective(cfg);
    if (cfg.task == "random-mdp") {
        // The instance is shared by all repetitions; only the learner and loss noise vary with the seed.
        Rng rng(cfg.seed ^ 0x5bd1e995ULL);
        const Dims d{cfg.horizon, cfg.states, cfg.actions};
        task.mdp.dims = d;
        task.mdp.p = random_kernel(d, cfg.kernel_floor, rng);
        task.mdp.mu0.assign(d.layer_size(), 0.0);
        for (int x = 0; x < d.S; ++x) task.mdp.mu0[static_cast<std::size_t>(x) * d.A] = 1.0 / d.S;
        if (obj == "linear") {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            LossField mean(d);
            for (int n = 1; n <= d.N; ++n)
                for (double& v : mean.layer(n)) v = u(rng);
            auto stream = bernoulli_linear_stream(mean, rep_seed * 0x2545f4914f6cdd1dULL + 17);
            task.objectives = stream;
            task.losses = [stream, d](int t) { return stream(t)->gradient(OccupancyMeasure(d)); };
        } else {
            // Quadratic pull towards the occupancy of a random deterministic policy.
            Policy det(d);
            std::uniform_int_distribution<int> pick(0, d.A - 1);
            for (int n = 1; n <= d.N; ++n)
                for (int x = 0; x < d.S; ++x) det(n, x, pick(rng)) = 1.0;
            task.fixed = make_quadratic_objective(compute_occupancy(task.mdp, det), 1.0);
            task.objectives = fixed_stream(task.fixed);
        }
        return task;
    }

    GridworldConfig gc;
    gc.side = cfg.side;
    gc.horizon = cfg.horizon;
    gc.p_noise = cfg.p_noise;
    gc.initial_cell = cfg.initial_cell;
    gc.doors = cfg.doors;
    Gridworld g;
    try {
        g = build_four_room_gridworld(gc);
    } catch (const ModelError& e) {
        throw ConfigError(cfg.doors.empty() ? "initial_cell" : "doors", e.what());
    }
    const Dims d = g.mdp.dims;
    task.mdp = g.mdp;
    if (obj == "multi-target") {
        if (cfg.targets.empty()) {
            task.targets = g.room_centers();
        } else {
            for (std::size_t i = 0; i < cfg.targets.size(); ++i)
                task.targets.push_back(grid_cell(g, cfg.targets[i], "targets[" + std::to_string(i) + "]"));
        }
        try {
            task.fixed = cfg.multi_target_form == "seeking" ? make_target_seeking_objective(task.targets, d)
                                                            : make_multi_target_objective(task.targets, d);
        } catch (const ModelError& e) {
            throw ConfigError("targets", e.what());
        }
    } else if (obj == "constrained" || obj == "linear") {
        const int target = grid_cell(g, cfg.target_cell.value_or(default_constrained_target(cfg.side)), "target_cell");
        task.targets = {target};
        const auto cells = cfg.constraint_cells.empty() && obj == "constrained" ? default_constraint_cells(cfg.side)
                                                                                : cfg.constraint_cells;
        for (std::size_t i = 0; i < cells.size(); ++i)
            task.constraint_states.push_back(grid_cell(g, cells[i], "constraint_cells[" + std::to_string(i) + "]"));
        if (obj == "constrained") {
            std::vector<double> r(d.layer_size(), 0.0), c(d.layer_size(), 0.0);
            for (int a = 0; a < d.A; ++a) r[static_cast<std::size_t>(target) * d.A + a] = cfg.reward_value;
            for (int s : task.constraint_states)
                for (int a = 0; a < d.A; ++a) c[static_cast<std::size_t>(s) * d.A + a] = cfg.constraint_value;
            task.fixed = make_constrained_objective(std::move(r), std::move(c), d);
        } else {
            // Unit loss everywhere except at the target; constraint cells keep unit loss.
            LossField l(d, 1.0);
            for (int n = 0; n <= d.N; ++n)
                for (int a = 0; a < d.A; ++a) l(n, target, a) = 0.0;
            task.fixed = make_linear_objective(l);
            task.losses = [l](int) { return l; };
        }
    }
    task.objectives = fixed_stream(task.fixed);
    task.grid = std::move(g);
    return task;
}

Policy best_response_dp(const EpisodicMDP& mdp, const LossField& loss) {
    const Dims d = mdp.dims;
    Policy pi(d);
    std::vector<double> v(static_cast<std::size_t>(d.S), 0.0), q(d.layer_size());
    for (int n = d.N; n >= 1; --n) {
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                double cont = 0.0;
                if (n < d.N) {
                    auto row = mdp.p.row(n + 1, x, a);
                    for (int y = 0; y < d.S; ++y) cont += row[y] * v[y];
                }
                q[static_cast<std::size_t>(x) * d.A + a] = loss(n, x, a) + cont;
            }
        for (int x = 0; x < d.S; ++x) {
            int best = 0;
            for (int a = 1; a < d.A; ++a)
                if (q[static_cast<std::size_t>(x) * d.A + a] < q[static_cast<std::size_t>(x) * d.A + best]) best = a;
            pi(n, x, best) = 1.0;
            v[x] = q[static_cast<std::size_t>(x) * d.A + best];
        }
    }
    return pi;
}

Policy compute_comparator(const EpisodicMDP& mdp, const Objective& obj, int iters, double tau) {
    Policy pi = Policy::uniform(mdp.dims);
    if (iters <= 0) return pi;
    if (obj.is_linear()) return best_response_dp(mdp, obj.gradient(compute_occupancy(mdp, pi)));
    for (int k = 0; k < iters; ++k) {
        const OccupancyMeasure mu = compute_occupancy(mdp, pi);
        pi = omd_step(obj.gradient(mu), tau, pi, mdp.p);
    }
    return pi;
}

double loglog_slope(const std::vector<double>& cumulative, int t0, int t1) {
    if (t0 < 1 || t1 > static_cast<int>(cumulative.size()) || t1 <= t0)
        throw ModelError("slope window out of range");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = t1 - t0 + 1;
    for (int t = t0; t <= t1; ++t) {
        const double x = std::log(static_cast<double>(t));
        const double y = std::log(std::max(cumulative[static_cast<std::size_t>(t - 1)], 1e-12));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RegretReport compute_regret(const std::vector<double>& loss, const std::vector<double>& comparator_values,
                            std::pair<int, int> window, std::string comparator) {
    if (loss.size() != comparator_values.size()) throw ModelError("trace and comparator lengths differ");
    RegretReport rep;
    rep.comparator = std::move(comparator);
    rep.cumulative.resize(loss.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < loss.size(); ++i) {
        acc += loss[i] - comparator_values[i];
        rep.cumulative[i] = acc;
    }
    if (window.second > window.first) rep.slope = loglog_slope(rep.cumulative, window.first, window.second);
    return rep;
}

void emit_plot_data(const std::vector<std::vector<double>>& series, const fs::path& path) {
    if (series.empty()) throw ModelError("plot data needs at least one series");
    const std::size_t T = series.front().size();
    for (const auto& s : series)
        if (s.size() != T) throw ModelError("plot series lengths differ");
    std::ofstream out(path);
    if (!out) throw ConfigError("out", "cannot write " + path.string());
    out << "t,mean,min,max,log_mean\n";
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& s : series) {
            sum += s[t];
            lo = std::min(lo, s[t]);
            hi = std::max(hi, s[t]);
        }
        const double mean = sum / static_cast<double>(series.size());
        out << t + 1 << ',' << format_number(mean) << ',' << format_number(lo) << ',' << format_number(hi) << ','
            << (mean > 0.0 ? format_number(std::log(mean)) : std::string("nan")) << '\n';
    }
}

namespace {

void write_trace(const fs::path& path, const RunTrace& tr, const RegretReport& reg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("out", "cannot write " + path.string());
    out << "t,loss,regret,bonus_mass,est_error\n";
    for (std::size_t i = 0; i < tr.loss.size(); ++i)
        out << i + 1 << ',' << format_number(tr.loss[i]) << ',' << format_number(reg.cumulative[i]) << ','
            << format_number(tr.bonus_mass[i]) << ',' << format_number(tr.est_error[i]) << '\n';
}

void write_heatmap(const fs::path& path, const Task& task, const OccupancyMeasure& mu, int n) {
    std::ofstream out(path);
    if (!out) throw ConfigError("out", "cannot write " + path.string());
    const Dims d = mu.dims();
    const int cols = task.grid ? task.grid->side : d.S;
    for (int x = 0; x < d.S; ++x) {
        double m = 0.0;
        for (int a = 0; a < d.A; ++a) m += mu(n, x, a);
        out << format_number(m) << ((x + 1) % cols == 0 ? '\n' : ',');
    }
}

double state_mass(const OccupancyMeasure& mu, int n, const std::vector<int>& states) {
    double m = 0.0;
    for (int s : states)
        for (int a = 0; a < mu.dims().A; ++a) m += mu(n, s, a);
    return m;
}

double layer_average_mass(const OccupancyMeasure& mu, const std::vector<int>& states) {
    double m = 0.0;
    for (int n = 1; n <= mu.dims().N; ++n) m += state_mass(mu, n, states);
    return m / mu.dims().N;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
    cfg.validate();
    ExperimentResult res;
    const fs::path root(cfg.out);
    if (write_files) {
        std::error_code ec;
        fs::create_directories(root, ec);
        if (ec) throw ConfigError("out", "cannot create output directory " + root.string());
    }
    const auto window = cfg.resolved_window();
    const double comp_tau = cfg.comparator_tau > 0.0 ? cfg.comparator_tau : cfg.tau;
    std::optional<double> fixed_comparator;

    for (int r = 0; r < cfg.reps; ++r) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
        const Task task = build_task(cfg, seed);
        const RunConfig rc = cfg.run_config(seed);

        RepetitionResult rep;
        rep.seed = seed;
        if (cfg.algorithm == "full-info") rep.trace = run_full_info(task.mdp, task.objectives, rc);
        else if (cfg.algorithm == "greedy") rep.trace = run_greedy_baseline(task.mdp, task.objectives, rc);
        else if (cfg.algorithm == "bandit-rl") rep.trace = run_bandit_rl(task.mdp, task.losses, rc);
        else if (cfg.algorithm == "bandit-curl-entropic")
            rep.trace = run_bandit_curl_entropic(task.mdp, task.objectives, rc);
        else rep.trace = run_bandit_curl_logbarrier(task.mdp, task.objectives, rc);

        std::vector<double> comp(static_cast<std::size_t>(cfg.episodes));
        std::string comp_name;
        if (task.fixed) {
            // Fixed objectives and their environment do not depend on the repetition seed.
            if (!fixed_comparator) {
                const Policy best = compute_comparator(task.mdp, *task.fixed, cfg.comparator_iters, comp_tau);
                fixed_comparator = task.fixed->value(compute_occupancy(task.mdp, best));
            }
            std::fill(comp.begin(), comp.end(), *fixed_comparator);
            comp_name = task.fixed->is_linear() ? "exact dynamic programming on the fixed loss"
                                                : "known-kernel mirror descent, " + std::to_string(cfg.comparator_iters) +
                                                      " iterations";
        } else {
            LossField total(task.mdp.dims);
            for (int t = 1; t <= cfg.episodes; ++t) {
                const LossField l = task.losses(t);
                for (std::size_t i = 0; i < total.raw().size(); ++i) total.raw()[i] += l.raw()[i];
            }
            const Policy best = best_response_dp(task.mdp, total);
            const OccupancyMeasure mu = compute_occupancy(task.mdp, best);
            for (int t = 1; t <= cfg.episodes; ++t) {
                const LossField l = task.losses(t);
                double v = 0.0;
                for (int n = 1; n <= mu.dims().N; ++n)
                    for (int x = 0; x < mu.dims().S; ++x)
                        for (int a = 0; a < mu.dims().A; ++a) v += l(n, x, a) * mu(n, x, a);
                comp[static_cast<std::size_t>(t - 1)] = v;
            }
            comp_name = "best fixed policy in hindsight by dynamic programming on the summed losses";
        }
        rep.regret = compute_regret(rep.trace.loss, comp, window, comp_name);

        const OccupancyMeasure mu_final = compute_occupancy(task.mdp, rep.trace.final_policy);
        json m;
        m["seed"] = seed;
        m["final_loss"] = rep.trace.loss.back();
        m["final_regret"] = rep.regret.cumulative.back();
        m["regret_slope"] = rep.regret.slope;
        m["comparator_value"] = comp.back();
        m["total_bonus_mass"] = std::accumulate(rep.trace.bonus_mass.begin(), rep.trace.bonus_mass.end(), 0.0);
        m["final_est_error"] = rep.trace.est_error.back();
        m["final_policy_loss"] = task.fixed ? task.fixed->value(mu_final) : std::numeric_limits<double>::quiet_NaN();
        m["drift_checks"] = rep.trace.drift_checks;
        m["stability_checks"] = rep.trace.stability_checks;
        if (!task.targets.empty()) {
            m["final_layer_target_mass"] = state_mass(mu_final, task.mdp.dims.N, task.targets);
            m["target_mass"] = layer_average_mass(mu_final, task.targets);
        }
        if (!task.constraint_states.empty()) m["constraint_mass"] = layer_average_mass(mu_final, task.constraint_states);
        rep.metrics = m;

        if (write_files) {
            const fs::path dir = root / ("rep_" + std::to_string(r));
            fs::create_directories(dir);
            write_trace(dir / "trace.csv", rep.trace, rep.regret);
            std::vector<int> layers = cfg.heatmap_layers;
            if (layers.empty()) layers = {task.mdp.dims.N};
            for (const auto& [t, mu] : rep.trace.snapshots)
                for (int n : layers) {
                    if (n < 0 || n > task.mdp.dims.N) throw ConfigError("heatmap_layers", "layer out of range");
                    write_heatmap(dir / ("heatmap_" + std::to_string(t) + "_" + std::to_string(n) + ".csv"), task, mu,
                                  n);
                }
        }
        res.reps.push_back(std::move(rep));
    }

    json summary;
    summary["config"] = to_json(cfg);
    summary["comparator"] = res.reps.front().regret.comparator;
    summary["slope_window"] = {window.first, window.second};
    json reps = json::array();
    json mean = json::object();
    for (const auto& rep : res.reps) {
        reps.push_back(rep.metrics);
        for (auto it = rep.metrics.begin(); it != rep.metrics.end(); ++it) {
            if (it.key() == "seed" || !it.value().is_number()) continue;
            const double v = it.value().get<double>() / cfg.reps;
            mean[it.key()] = mean.contains(it.key()) ? mean[it.key()].get<double>() + v : v;
        }
    }
    summary["repetitions"] = reps;
    summary["mean"] = mean;
    res.summary = summary;

    if (write_files) {
        std::vector<std::vector<double>> losses, regrets;
        for (const auto& rep : res.reps) {
            losses.push_back(rep.trace.loss);
            regrets.push_back(rep.regret.cumulative);
        }
        emit_plot_data(losses, root / "plot_loss.csv");
        emit_plot_data(regrets, root / "plot_regret.csv");
        std::ofstream out(root / "summary.json");
        if (!out) throw ConfigError("out", "cannot write summary.json");
        out << summary.dump(2) << '\n';
    }
    return res;
}

}  // namespace omdcurl
