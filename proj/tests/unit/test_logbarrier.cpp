#include <doctest.h>

#include "omdcurl/logbarrier.hpp"
#include "support.hpp"

using namespace omdcurl;
using namespace omdcurl::testing;

namespace {

struct Toy {
    EpisodicMDP mdp;
    BarrierContext ctx;
    LowDimPoint xi;
};

Toy make_toy(Rng& rng, Dims d = Dims{2, 3, 3}) {
    EpisodicMDP mdp = random_mdp(d, rng, 0.05);
    BarrierContext ctx(mdp);
    LowDimPoint xi = reduce(compute_occupancy(mdp, random_policy(d, rng, 0.5)));
    return {std::move(mdp), std::move(ctx), std::move(xi)};
}

}  // namespace

TEST_CASE("barrier gradient and Hessian match finite differences") {
    Rng rng(1);
    const Toy t = make_toy(rng);
    const Eigen::Index dim = t.ctx.dim();
    const Eigen::VectorXd g = lb_gradient(t.ctx, t.xi);
    const Eigen::MatrixXd H = lb_hessian(t.ctx, t.xi);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < dim; ++i) {
        LowDimPoint p = t.xi, m = t.xi;
        p[i] += h;
        m[i] -= h;
        const double fd = (lb_value(t.ctx, p) - lb_value(t.ctx, m)) / (2.0 * h);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
        const Eigen::VectorXd col = (lb_gradient(t.ctx, p) - lb_gradient(t.ctx, m)) / (2.0 * h);
        for (Eigen::Index j = 0; j < dim; ++j) CHECK(H(j, i) == doctest::Approx(col[j]).epsilon(1e-5).scale(1.0));
    }
    CHECK(Eigen::LLT<Eigen::MatrixXd>(H).info() == Eigen::Success);
    LowDimPoint outside = t.xi;
    outside[0] = -1.0;
    CHECK_THROWS_AS(lb_value(t.ctx, outside), ModelError);
}

TEST_CASE("doubling every slack lowers the barrier by m log 2") {
    Rng rng(2);
    const Toy t = make_toy(rng);
    ConstraintSystem twice = t.ctx.system();
    twice.B *= 2.0;
    twice.beta *= 2.0;
    const BarrierContext doubled(twice);
    const double m = static_cast<double>(twice.beta.size());
    CHECK(lb_value(doubled, t.xi) == doctest::Approx(lb_value(t.ctx, t.xi) - m * std::log(2.0)));
}

TEST_CASE("analytic centre") {
    Rng rng(3);
    const Toy t = make_toy(rng);
    const NewtonResult c = analytic_center(t.ctx, t.mdp);
    CHECK(c.decrement <= 1e-8);
    CHECK(lb_gradient(t.ctx, c.xi).norm() <= 1e-6);
    CHECK(t.ctx.system().slacks(c.xi).minCoeff() > 0.0);

    const Dims d{1, 3, 4};
    EpisodicMDP sym{d, Kernel(d, 1.0 / d.S), std::vector<double>(d.layer_size(), 0.0)};
    for (int x = 0; x < d.S; ++x) sym.mu0[x * d.A] = 1.0 / d.S;
    const BarrierContext ctx(sym);
    const Policy pi = policy_from_occupancy(expand(analytic_center(ctx, sym).xi, sym));
    for (int x = 0; x < d.S; ++x)
        for (int a = 0; a < d.A; ++a) CHECK(pi(1, x, a) == doctest::Approx(1.0 / d.A).epsilon(1e-6));
}

TEST_CASE("Dikin samples lie on the ellipsoid and stay feasible") {
    Rng rng(4);
    const Toy t = make_toy(rng);
    const DikinFrame frame(t.ctx, analytic_center(t.ctx, t.mdp).xi);
    const Eigen::Index dim = t.ctx.dim();
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd u = sample_unit_sphere(dim, rng);
        CHECK(frame.local_norm(dikin_sample(frame, 0.3, u) - frame.center()) == doctest::Approx(0.3).epsilon(1e-10));
    }
    CHECK((dikin_sample(frame, 0.0, sample_unit_sphere(dim, rng)) - frame.center()).norm() == 0.0);
    const DikinFrame off(t.ctx, t.xi);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
        if (!t.ctx.interior(dikin_sample(frame, 0.9, sample_unit_sphere(dim, rng)))) ++bad;
        if (!t.ctx.interior(dikin_sample(off, 1.0, sample_unit_ball(dim, rng)))) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("surrogate gradient dual norm") {
    Rng rng(5);
    const Toy t = make_toy(rng);
    const DikinFrame frame(t.ctx, t.xi);
    const Eigen::Index dim = t.ctx.dim();
    const double delta = 0.25;
    for (double F : {0.7, -2.0, 0.0}) {
        const Eigen::VectorXd g = lb_gradient_surrogate(frame, F, sample_unit_sphere(dim, rng), delta);
        CHECK(frame.dual_norm(g) == doctest::Approx((1.0 - delta) / delta * dim * std::abs(F)).epsilon(1e-8).scale(1.0));
        if (F == 0.0) CHECK(g.norm() == 0.0);
    }
}

TEST_CASE("log-barrier OMD step") {
    Rng rng(6);
    const Toy t = make_toy(rng);
    const DikinFrame frame(t.ctx, t.xi);
    const Eigen::Index dim = t.ctx.dim();
    CHECK((lb_omd_step(t.ctx, frame, Eigen::VectorXd::Zero(dim), 0.5).xi - t.xi).norm() < 1e-12);

    const Eigen::VectorXd g = Eigen::VectorXd::Random(dim) * 3.0;
    const double tau = 0.05;
    const LbStepResult r = lb_omd_step(t.ctx, frame, g, tau);
    CHECK((tau * g + lb_gradient(t.ctx, r.xi) - lb_gradient(t.ctx, t.xi)).norm() <= 1e-6);

    // Same problem in the full occupancy space: tau <lift g, v> - sum log v + <1/v0, v> over the flow polytope.
    const Dims d = t.mdp.dims;
    const FlowSystem fs = flow_system(t.mdp.p, t.mdp.mu0);
    const Eigen::VectorXd v0 = to_vec(expand(t.xi, t.mdp));
    const Eigen::VectorXd lin = tau * to_vec(lift_with_zero(g, d)) + v0.cwiseInverse();
    SmoothFn f{[&](const Eigen::VectorXd& v) { return lin.dot(v) - v.array().log().sum(); },
               [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(lin - v.cwiseInverse()); },
               [&](const Eigen::VectorXd& v) { return Eigen::MatrixXd(v.cwiseInverse().cwiseAbs2().asDiagonal()); }};
    const Eigen::VectorXd want = equality_newton(f, fs, v0);
    CHECK((reduce(to_field(want, d, t.mdp.mu0)) - r.xi).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("small steps obey the stability bound") {
    Rng rng(7);
    const Toy t = make_toy(rng);
    const DikinFrame frame(t.ctx, t.xi);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd g = Eigen::VectorXd::Random(t.ctx.dim());
        const double tau = 1.0 / (16.0 * frame.dual_norm(g));
        const LbStepResult r = lb_omd_step(t.ctx, frame, g, tau);
        CHECK(r.stability_checked);
        CHECK(r.local_step <= 0.5);
    }
}

TEST_CASE("Hessian sandwich inside the half ellipsoid") {
    Rng rng(8);
    const Toy t = make_toy(rng);
    const DikinFrame frame(t.ctx, t.xi);
    const Eigen::Index dim = t.ctx.dim();
    for (int i = 0; i < 50; ++i) {
        const double r = 0.5 * (i + 1) / 51.0;
        const LowDimPoint y = dikin_sample(frame, r, sample_unit_sphere(dim, rng));
        const Eigen::MatrixXd Hy = lb_hessian(t.ctx, y);
        for (int k = 0; k < 5; ++k) {
            const Eigen::VectorXd h = Eigen::VectorXd::Random(dim);
            const double ratio = h.dot(Hy * h) / h.dot(frame.hessian() * h);
            CHECK(ratio >= (1.0 - r) * (1.0 - r) - 1e-12);
            CHECK(ratio <= 1.0 / ((1.0 - r) * (1.0 - r)) + 1e-12);
        }
    }
}
