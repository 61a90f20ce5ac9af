#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace omdcurl {

/// Raised for malformed inputs or violated preconditions.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an internal invariant fails at runtime.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Horizon, state count and action count of an episodic MDP.
struct Dims {
    int N = 0;
    int S = 0;
    int A = 0;

    std::size_t layer_size() const { return static_cast<std::size_t>(S) * A; }
    bool operator==(const Dims&) const = default;
};

/**
 * Values indexed by (n, x, a) for layers n = 0..N.
 *
 * Used for occupancy measures, per-layer gradients, bonuses and losses.
 * Layer 0 of a gradient or loss is carried along but never affects a policy.
 */
class Field {
public:
    Field() = default;
    explicit Field(Dims d, double fill = 0.0)
        : dims_(d), data_(static_cast<std::size_t>(d.N + 1) * d.layer_size(), fill) {}

    const Dims& dims() const { return dims_; }

    double& operator()(int n, int x, int a) { return data_[index(n, x, a)]; }
    double operator()(int n, int x, int a) const { return data_[index(n, x, a)]; }

    std::span<double> layer(int n) {
        return {data_.data() + static_cast<std::size_t>(n) * dims_.layer_size(), dims_.layer_size()};
    }
    std::span<const double> layer(int n) const {
        return {data_.data() + static_cast<std::size_t>(n) * dims_.layer_size(), dims_.layer_size()};
    }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool operator==(const Field&) const = default;

private:
    std::size_t index(int n, int x, int a) const {
        return (static_cast<std::size_t>(n) * dims_.S + x) * dims_.A + a;
    }

    Dims dims_;
    std::vector<double> data_;
};

/// An occupancy measure: layer 0 is the initial state-action law.
using OccupancyMeasure = Field;

/// Markov policy pi_n(a|x) for layers n = 1..N.
class Policy {
public:
    Policy() = default;
    explicit Policy(Dims d, double fill = 0.0)
        : dims_(d), data_(static_cast<std::size_t>(d.N) * d.layer_size(), fill) {}

    static Policy uniform(Dims d) { return Policy(d, 1.0 / d.A); }

    const Dims& dims() const { return dims_; }

    double& operator()(int n, int x, int a) { return data_[index(n, x, a)]; }
    double operator()(int n, int x, int a) const { return data_[index(n, x, a)]; }

    std::span<double> row(int n, int x) { return {data_.data() + index(n, x, 0), static_cast<std::size_t>(dims_.A)}; }
    std::span<const double> row(int n, int x) const {
        return {data_.data() + index(n, x, 0), static_cast<std::size_t>(dims_.A)};
    }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool operator==(const Policy&) const = default;

private:
    std::size_t index(int n, int x, int a) const {
        return (static_cast<std::size_t>(n - 1) * dims_.S + x) * dims_.A + a;
    }

    Dims dims_;
    std::vector<double> data_;
};

/// Transition kernel p_n(x'|x,a) for layers n = 1..N (p_n moves layer n-1 to layer n).
class Kernel {
public:
    Kernel() = default;
    explicit Kernel(Dims d, double fill = 0.0)
        : dims_(d), data_(static_cast<std::size_t>(d.N) * d.layer_size() * d.S, fill) {}

    const Dims& dims() const { return dims_; }

    double& operator()(int n, int x, int a, int y) { return data_[index(n, x, a) + y]; }
    double operator()(int n, int x, int a, int y) const { return data_[index(n, x, a) + y]; }

    std::span<double> row(int n, int x, int a) { return {data_.data() + index(n, x, a), static_cast<std::size_t>(dims_.S)}; }
    std::span<const double> row(int n, int x, int a) const {
        return {data_.data() + index(n, x, a), static_cast<std::size_t>(dims_.S)};
    }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool operator==(const Kernel&) const = default;

private:
    std::size_t index(int n, int x, int a) const {
        return ((static_cast<std::size_t>(n - 1) * dims_.S + x) * dims_.A + a) * dims_.S;
    }

    Dims dims_;
    std::vector<double> data_;
};

/// Finite-horizon MDP with an initial state-action distribution mu0.
struct EpisodicMDP {
    Dims dims;
    Kernel p;
    std::vector<double> mu0;  ///< size S*A, indexed x*A + a

    double mu0_at(int x, int a) const { return mu0[static_cast<std::size_t>(x) * dims.A + a]; }

    /// Throws ModelError if shapes disagree or distributions are not normalised.
    void validate(double tol = 1e-9) const;

    /// Same MDP with a different kernel.
    EpisodicMDP with_kernel(Kernel q) const;
};

/// One episode (x_n, a_n), n = 0..N, with optional per-step losses.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;
    std::vector<double> losses;
};

struct GridworldConfig {
    int side = 11;
    int horizon = 40;
    double p_noise = 0.1;
    std::pair<int, int> initial_cell{0, 0};
    /// Door coordinates as (row, col). Empty means the midpoint of each wall segment.
    std::vector<std::pair<int, int>> doors;
};

}  // namespace omdcurl
