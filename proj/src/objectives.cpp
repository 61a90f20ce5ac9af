#include "omdcurl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "omdcurl/mdp.hpp"

namespace omdcurl {

namespace {

class LinearObjective final : public Objective {
public:
    explicit LinearObjective(LossField loss) : loss_(std::move(loss)) {}

    double value(const OccupancyMeasure& mu) const override {
        double s = 0.0;
        for (int n = 1; n <= loss_.dims().N; ++n) {
            auto l = loss_.layer(n);
            auto m = mu.layer(n);
            for (std::size_t i = 0; i < l.size(); ++i) s += l[i] * m[i];
        }
        return s;
    }
    Field gradient(const OccupancyMeasure&) const override {
        Field g = loss_;
        std::fill(g.layer(0).begin(), g.layer(0).end(), 0.0);
        return g;
    }
    double lipschitz() const override { return 1.0; }
    bool is_linear() const override { return true; }

private:
    LossField loss_;
};

class MultiTargetObjective final : public Objective {
public:
    MultiTargetObjective(std::vector<int> targets, Dims d, double sign)
        : targets_(std::move(targets)), dims_(d), sign_(sign) {}

    double value(const OccupancyMeasure& mu) const override {
        double s = 0.0;
        for (int n = 1; n <= dims_.N; ++n)
            for (int t : targets_) {
                const double m = mass(mu, n, t);
                s += (1.0 - m) * (1.0 - m);
            }
        return sign_ * s;
    }
    Field gradient(const OccupancyMeasure& mu) const override {
        Field g(dims_);
        for (int n = 1; n <= dims_.N; ++n)
            for (int t : targets_) {
                const double w = -2.0 * sign_ * (1.0 - mass(mu, n, t));
                for (int a = 0; a < dims_.A; ++a) g(n, t, a) += w;
            }
        return g;
    }
    double lipschitz() const override { return 2.0 * static_cast<double>(targets_.size()); }

private:
    double mass(const OccupancyMeasure& mu, int n, int x) const {
        double m = 0.0;
        for (int a = 0; a < dims_.A; ++a) m += mu(n, x, a);
        return m;
    }

    std::vector<int> targets_;
    Dims dims_;
    double sign_;
};

class ConstrainedObjective final : public Objective {
public:
    ConstrainedObjective(std::vector<double> r, std::vector<double> c, Dims d)
        : r_(std::move(r)), c_(std::move(c)), dims_(d) {
        double rmax = 0.0, cmax = 0.0;
        for (double v : r_) rmax = std::max(rmax, v);
        for (double v : c_) cmax = std::max(cmax, v);
        // Gradient entries lie in [-max r, 2 max c * <mu_n,c>] and <mu_n,c> <= max c on the simplex.
        lipschitz_ = std::max(rmax, 2.0 * cmax * cmax);
    }

    double value(const OccupancyMeasure& mu) const override {
        double s = 0.0;
        for (int n = 1; n <= dims_.N; ++n) {
            auto m = mu.layer(n);
            double lin = 0.0, con = 0.0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                lin += r_[i] * m[i];
                con += c_[i] * m[i];
            }
            s += -lin + con * con;
        }
        return s;
    }
    Field gradient(const OccupancyMeasure& mu) const override {
        Field g(dims_);
        for (int n = 1; n <= dims_.N; ++n) {
            auto m = mu.layer(n);
            double con = 0.0;
            for (std::size_t i = 0; i < m.size(); ++i) con += c_[i] * m[i];
            auto gl = g.layer(n);
            for (std::size_t i = 0; i < m.size(); ++i) gl[i] = -r_[i] + 2.0 * con * c_[i];
        }
        return g;
    }
    double lipschitz() const override { return lipschitz_; }

private:
    std::vector<double> r_;
    std::vector<double> c_;
    Dims dims_;
    double lipschitz_ = 0.0;
};

class QuadraticObjective final : public Objective {
public:
    QuadraticObjective(Field target, double w) : target_(std::move(target)), w_(w) {}

    double value(const OccupancyMeasure& mu) const override {
        double s = 0.0;
        for (int n = 1; n <= target_.dims().N; ++n) {
            auto m = mu.layer(n);
            auto c = target_.layer(n);
            for (std::size_t i = 0; i < m.size(); ++i) s += (m[i] - c[i]) * (m[i] - c[i]);
        }
        return 0.5 * w_ * s;
    }
    Field gradient(const OccupancyMeasure& mu) const override {
        Field g(target_.dims());
        for (int n = 1; n <= target_.dims().N; ++n) {
            auto m = mu.layer(n);
            auto c = target_.layer(n);
            auto gl = g.layer(n);
            for (std::size_t i = 0; i < m.size(); ++i) gl[i] = w_ * (m[i] - c[i]);
        }
        return g;
    }
    double lipschitz() const override { return w_; }

private:
    Field target_;
    double w_;
};

}  // namespace

ObjectivePtr make_quadratic_objective(Field target, double weight) {
    if (!(weight > 0.0)) throw ModelError("quadratic weight must be positive");
    for (int n = 1; n <= target.dims().N; ++n)
        for (double v : target.layer(n))
            if (!(v >= 0.0 && v <= 1.0)) throw ModelError("quadratic target entries must lie in [0,1]");
    return std::make_shared<QuadraticObjective>(std::move(target), weight);
}

ObjectivePtr make_linear_objective(LossField loss) {
    for (int n = 1; n <= loss.dims().N; ++n)
        for (double v : loss.layer(n))
            if (!(v >= 0.0 && v <= 1.0)) throw ModelError("loss entries must lie in [0,1]");
    return std::make_shared<LinearObjective>(std::move(loss));
}

namespace {

void check_targets(const std::vector<int>& targets, Dims dims) {
    if (targets.empty()) throw ModelError("multi-target objective needs at least one target");
    std::set<int> seen;
    for (int t : targets) {
        if (t < 0 || t >= dims.S) throw ModelError("target state out of range");
        if (!seen.insert(t).second) throw ModelError("targets must be distinct");
    }
}

}  // namespace

ObjectivePtr make_multi_target_objective(std::vector<int> targets, Dims dims) {
    check_targets(targets, dims);
    return std::make_shared<MultiTargetObjective>(std::move(targets), dims, -1.0);
}

ObjectivePtr make_target_seeking_objective(std::vector<int> targets, Dims dims) {
    check_targets(targets, dims);
    return std::make_shared<MultiTargetObjective>(std::move(targets), dims, 1.0);
}

ObjectivePtr make_constrained_objective(std::vector<double> reward, std::vector<double> constraint, Dims dims) {
    if (reward.size() != dims.layer_size() || constraint.size() != dims.layer_size())
        throw ModelError("reward and constraint must have S*A entries");
    for (double v : reward)
        if (!(v >= 0.0)) throw ModelError("reward entries must be nonnegative");
    for (double v : constraint)
        if (!(v >= 0.0)) throw ModelError("constraint entries must be nonnegative");
    return std::make_shared<ConstrainedObjective>(std::move(reward), std::move(constraint), dims);
}

double dual_norm_1inf(const Field& g) {
    double s = 0.0;
    for (int n = 1; n <= g.dims().N; ++n) {
        double m = 0.0;
        for (double v : g.layer(n)) m = std::max(m, std::abs(v));
        s += m;
    }
    return s;
}

ObjectiveStream fixed_stream(ObjectivePtr obj) {
    return [obj = std::move(obj)](int) { return obj; };
}

ObjectiveStream random_linear_stream(Dims dims, std::uint64_t seed) {
    return [dims, seed](int t) {
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        LossField l(dims);
        for (int n = 1; n <= dims.N; ++n)
            for (double& v : l.layer(n)) v = u(rng);
        return make_linear_objective(std::move(l));
    };
}

ObjectiveStream bernoulli_linear_stream(LossField mean, std::uint64_t seed) {
    return [mean = std::move(mean), seed](int t) {
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        LossField l(mean.dims());
        for (int n = 1; n <= mean.dims().N; ++n) {
            auto src = mean.layer(n);
            auto dst = l.layer(n);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = u(rng) < src[i] ? 1.0 : 0.0;
        }
        return make_linear_objective(std::move(l));
    };
}

}  // namespace omdcurl
