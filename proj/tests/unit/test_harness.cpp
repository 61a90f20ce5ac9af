#include <doctest.h>

#include <fstream>
#include <sstream>

#include "omdcurl/harness.hpp"
#include "support.hpp"

using namespace omdcurl;
using namespace omdcurl::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("omdcurl_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell == "nan" ? std::nan("") : std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.task = "random-mdp";
    c.objective = "quadratic";
    c.states = 3;
    c.actions = 2;
    c.horizon = 3;
    c.episodes = 30;
    c.reps = 2;
    c.seed = 4;
    c.tau = 0.1;
    c.comparator_iters = 200;
    c.out = out.string();
    return c;
}

}  // namespace

TEST_CASE("config round-trips through summary.json") {
    const fs::path out = scratch("roundtrip");
    const ExperimentConfig cfg = small_config(out);
    run_experiment(cfg);
    std::ifstream in(out / "summary.json");
    const nlohmann::json summary = nlohmann::json::parse(in);
    CHECK(to_json(parse_config(summary)) == to_json(cfg));
    CHECK(summary["repetitions"].size() == 2);
    for (const std::string& name : preset_names()) CHECK(to_json(parse_config(to_json(preset(name)))) == to_json(preset(name)));
    fs::remove_all(out);
}

TEST_CASE("config errors name the offending field") {
    auto field_of = [](const nlohmann::json& j) {
        try {
            parse_config(j).validate();
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    CHECK(field_of({{"episodes", 0}}) == "episodes");
    CHECK(field_of({{"episodes", "many"}}) == "episodes");
    CHECK(field_of({{"tau", -1.0}}) == "tau");
    CHECK(field_of({{"no_such_key", 1}}) == "no_such_key");
    CHECK(field_of({{"task", "nowhere"}}) == "task");
    CHECK(field_of({{"algorithm", "bandit-rl"}, {"task", "random-mdp"}, {"objective", "quadratic"}}) == "algorithm");
    CHECK(field_of({{"alpha", "0.9"}}) == "alpha");
    CHECK(field_of({{"reps", 1}}) == "none");
}

TEST_CASE("regret and log-log slopes") {
    const std::vector<double> loss{1.0, 2.0, 3.0, 4.0};
    const RegretReport same = compute_regret(loss, loss, {1, 4});
    for (double v : same.cumulative) CHECK(v == 0.0);

    std::vector<double> l(1000, 1.5), c(1000, 1.25);
    const RegretReport gap = compute_regret(l, c, {100, 1000}, "fixed");
    CHECK(gap.cumulative[9] == doctest::Approx(2.5));
    CHECK(gap.slope == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(gap.comparator == "fixed");

    std::vector<double> root(1000);
    for (int t = 1; t <= 1000; ++t) root[t - 1] = 3.0 * std::sqrt(static_cast<double>(t));
    CHECK(std::abs(loglog_slope(root, 10, 1000) - 0.5) <= 0.05);
    CHECK_THROWS_AS(compute_regret(l, {1.0}, {1, 2}), ModelError);
    CHECK_THROWS_AS(loglog_slope(root, 0, 10), ModelError);
}

TEST_CASE("plot data aggregates match a naive recomputation") {
    const fs::path dir = scratch("plot");
    fs::create_directories(dir);
    Rng rng(1);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::vector<std::vector<double>> series(4, std::vector<double>(25));
    for (auto& s : series)
        for (double& v : s) v = u(rng);
    emit_plot_data(series, dir / "agg.csv");
    const auto rows = read_csv(dir / "agg.csv");
    REQUIRE(rows.size() == 25);
    for (std::size_t t = 0; t < 25; ++t) {
        double sum = 0.0, lo = 1e9, hi = -1e9;
        for (const auto& s : series) {
            sum += s[t];
            lo = std::min(lo, s[t]);
            hi = std::max(hi, s[t]);
        }
        CHECK(rows[t][0] == t + 1);
        CHECK(rows[t][1] == doctest::Approx(sum / 4));
        CHECK(rows[t][2] == lo);
        CHECK(rows[t][3] == hi);
        if (sum > 0) CHECK(rows[t][4] == doctest::Approx(std::log(sum / 4)));
        else CHECK(std::isnan(rows[t][4]));
    }

    emit_plot_data({series[0]}, dir / "one.csv");
    const auto one = read_csv(dir / "one.csv");
    for (std::size_t t = 0; t < 25; ++t) CHECK(one[t][1] == series[0][t]);

    emit_plot_data({std::vector<double>(5, 0.5), std::vector<double>(5, 0.5)}, dir / "flat.csv");
    for (const auto& r : read_csv(dir / "flat.csv")) CHECK((r[1] == 0.5 && r[2] == 0.5 && r[3] == 0.5));
    CHECK_THROWS_AS(emit_plot_data({}, dir / "none.csv"), ModelError);
    fs::remove_all(dir);
}

TEST_CASE("traces are reproducible and round-trip through CSV") {
    const fs::path a = scratch("trace_a"), b = scratch("trace_b");
    ExperimentConfig ca = small_config(a), cb = small_config(b);
    const ExperimentResult res = run_experiment(ca);
    run_experiment(cb);
    for (const char* rep : {"rep_0", "rep_1"}) {
        const std::string ta = slurp(a / rep / "trace.csv");
        CHECK(ta.rfind("t,loss,regret,bonus_mass,est_error\n", 0) == 0);
        CHECK(ta == slurp(b / rep / "trace.csv"));
    }
    const auto rows = read_csv(a / "rep_1" / "trace.csv");
    REQUIRE(rows.size() == 30);
    for (std::size_t t = 0; t < 30; ++t) {
        CHECK(rows[t][1] == res.reps[1].trace.loss[t]);
        CHECK(rows[t][2] == res.reps[1].regret.cumulative[t]);
    }
    CHECK(res.reps[1].seed == 5);
    CHECK(fs::exists(a / "plot_loss.csv"));
    CHECK(fs::exists(a / "plot_regret.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("gridworld heatmaps use the grid layout") {
    const fs::path out = scratch("heat");
    ExperimentConfig c;
    c.task = "multi-objective";
    c.horizon = 6;
    c.episodes = 3;
    c.reps = 1;
    c.comparator_iters = 5;
    c.snapshot_episodes = {2};
    c.heatmap_layers = {6};
    c.out = out.string();
    run_experiment(c);
    const auto rows = read_csv(out / "rep_0" / "heatmap_2_6.csv");
    CHECK(rows.size() == 10);  // first line of the grid is consumed as a header by read_csv
    double mass = 0.0;
    std::ifstream in(out / "rep_0" / "heatmap_2_6.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        std::stringstream ss(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ss, cell, ',')) {
            mass += std::stod(cell);
            ++cols;
        }
        CHECK(cols == 11);
    }
    CHECK(lines == 11);
    CHECK(mass == doctest::Approx(1.0));
    fs::remove_all(out);
}

TEST_CASE("comparator for linear losses is the best deterministic policy") {
    Rng rng(2);
    const Dims d{2, 3, 2};
    for (int rep = 0; rep < 10; ++rep) {
        const EpisodicMDP mdp = random_mdp(d, rng);
        const Field loss = random_field(d, rng, 0.0, 1.0);
        const Policy pi = compute_comparator(mdp, *make_linear_objective(loss));
        double v = 0.0;
        const Field mu = compute_occupancy(mdp, pi);
        for (int n = 1; n <= d.N; ++n)
            for (std::size_t i = 0; i < d.layer_size(); ++i) v += loss.layer(n)[i] * mu.layer(n)[i];
        CHECK(v == doctest::Approx(brute_force_best_linear(mdp, loss)).epsilon(1e-12));
    }
}

TEST_CASE("comparator for a convex objective matches a barrier solver") {
    Rng rng(3);
    const Dims d{2, 2, 2};
    const EpisodicMDP mdp = random_mdp(d, rng, 0.1);
    const auto obj = make_quadratic_objective(random_field(d, rng, 0.0, 0.5), 1.0);
    const Policy pi = compute_comparator(mdp, *obj, 2000, 1.0);
    const FlowSystem fs = flow_system(mdp.p, mdp.mu0);
    auto F = [&](const Eigen::VectorXd& v) { return obj->value(to_field(v, d, mdp.mu0)); };
    auto G = [&](const Eigen::VectorXd& v) { return to_vec(obj->gradient(to_field(v, d, mdp.mu0))); };
    const double best = F(barrier_solve(F, G, fs, to_vec(compute_occupancy(mdp, Policy::uniform(d)))));
    CHECK(std::abs(obj->value(compute_occupancy(mdp, pi)) - best) <= 1e-6);

    const Policy none = compute_comparator(mdp, *obj, 0);
    for (double v : none.raw()) CHECK(v == 0.5);
}

TEST_CASE("numbers are written with 17 significant digits") {
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_number(x)) == x);
    CHECK(std::stod(format_number(-1.0 / 3.0)) == -1.0 / 3.0);
}
