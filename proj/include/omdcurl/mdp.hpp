#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "omdcurl/types.hpp"

namespace omdcurl {

using Rng = std::mt19937_64;

/// Forward recursion mu_n(x,a) = sum mu_{n-1}(x',a') p_n(x|x',a') pi_n(a|x), layer 0 = mu0.
OccupancyMeasure compute_occupancy(const EpisodicMDP& mdp, const Policy& pi);
OccupancyMeasure compute_occupancy(const Kernel& p, std::span<const double> mu0, const Policy& pi);

/// Conditional policy mu_n(x,a)/rho_n(x); rows with zero mass take the fallback row (uniform if null).
Policy policy_from_occupancy(const OccupancyMeasure& mu, const Policy* fallback = nullptr);

/// rho_n(x) = sum_a mu_n(x,a), returned as an (N+1) x S row-major vector.
std::vector<double> state_marginal(const OccupancyMeasure& mu);

struct FeasibilityReport {
    bool ok = true;
    double max_violation = 0.0;
    std::string detail;
};

/// Checks nonnegativity, unit layer mass and the flow constraints of the polytope M^p.
FeasibilityReport check_feasibility(const OccupancyMeasure& mu, const EpisodicMDP& mdp, double tol = 1e-8);
FeasibilityReport check_feasibility(const OccupancyMeasure& mu, const Kernel& p, std::span<const double> mu0,
                                    double tol = 1e-8);

/// Draws one episode; the optional loss field fills Trajectory::losses.
Trajectory sample_trajectory(const EpisodicMDP& mdp, const Policy& pi, Rng& rng, const Field* loss = nullptr);

/// Draws an index from a probability vector.
int sample_categorical(std::span<const double> probs, Rng& rng);

/// max_n sum_{i<n} sum_{x,a} mu_i(x,a) ||p_{i+1}(.|x,a) - q_{i+1}(.|x,a)||_1
double occupancy_shift_bound(const OccupancyMeasure& mu, const Kernel& p, const Kernel& q);

/// max_{n,x,a} ||p_n(.|x,a) - q_n(.|x,a)||_1
double max_row_l1(const Kernel& p, const Kernel& q);

/// sum over all layers and entries of f * g
double inner(const Field& f, const Field& g);

/// ||f - g||_{inf,1} = max_n ||f_n - g_n||_1 over layers 1..N.
double norm_inf1(const Field& f, const Field& g);

enum class Move : int { Stay = 0, Up = 1, Down = 2, Left = 3, Right = 4 };

/// Four-room gridworld together with its geometry.
struct Gridworld {
    EpisodicMDP mdp;
    int side = 0;
    std::vector<bool> wall;
    int initial_cell = 0;

    int cell(int row, int col) const { return row * side + col; }
    std::pair<int, int> coords(int x) const { return {x / side, x % side}; }
    bool accessible(int row, int col) const {
        return row >= 0 && col >= 0 && row < side && col < side && !wall[static_cast<std::size_t>(cell(row, col))];
    }
    /// Centres of the three rooms that do not contain the initial cell.
    std::vector<int> room_centers() const;
};

Gridworld build_four_room_gridworld(const GridworldConfig& cfg);

}  // namespace omdcurl
