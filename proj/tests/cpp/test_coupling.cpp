#include <doctest.h>

#include <cmath>
#include <vector>

#include "llost/coupling.hpp"
#include "test_helpers.hpp"

using namespace llost;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

ad::Mat randn(int r, int c, Rng& rng) {
    ad::Mat m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
    }
    return m;
}

ad::Mat one_hot_rows(int b, int n_labels, int label) {
    ad::Mat m = ad::Mat::Zero(b, n_labels);
    for (int i = 0; i < b; ++i) m(i, label) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("a fresh shared map is the identity in both directions") {
    ParamRegistry reg;
    Rng rng(101);
    const SharedMap map(reg, "m", 8, 4, rng);

    const ad::Mat z = randn(5, 8, rng);
    const ad::Var zv = ad::constant(z);
    for (int label = 0; label < 4; ++label) {
        const ad::Var oh = ad::constant(one_hot_rows(5, 4, label));
        const ad::Var fwd = map.map(zv, oh, MapDirection::LesionToMutation);
        const ad::Var bwd = map.map(zv, oh, MapDirection::MutationToLesion);
        CHECK((fwd->value - z).cwiseAbs().maxCoeff() == 0.0);
        CHECK((bwd->value - z).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("mapping there and back recovers the latent under every label") {
    // Per-block scales compound multiplicatively, so the parameter scale has
    // to shrink as the stack deepens or the round trip drowns in rounding.
    struct Setup {
        int n_steps, blocks;
        double scale, tol;
    };
    for (const Setup& s : {Setup{24, 3, 0.1, 1e-5}, Setup{4, 2, 0.3, 1e-7}}) {
        CAPTURE(s.n_steps);
        ParamRegistry reg;
        Rng rng(102);
        const SharedMap map(reg, "m", 8, 3, rng, true, s.n_steps, s.blocks);
        testutil::randomize_params(reg, rng, s.scale);

        const ad::Mat z = randn(6, 8, rng);
        const ad::Var zv = ad::constant(z);
        for (int label = 0; label < 3; ++label) {
            const ad::Var oh = ad::constant(one_hot_rows(6, 3, label));
            const ad::Var to_m = map.map(zv, oh, MapDirection::LesionToMutation);
            const ad::Var back_l = map.map(to_m, oh, MapDirection::MutationToLesion);
            CHECK((back_l->value - z).cwiseAbs().maxCoeff() < s.tol);

            const ad::Var to_l = map.map(zv, oh, MapDirection::MutationToLesion);
            const ad::Var back_m = map.map(to_l, oh, MapDirection::LesionToMutation);
            CHECK((back_m->value - z).cwiseAbs().maxCoeff() < s.tol);

            // The randomized map is not a no-op, so the round trip is doing work.
            CHECK((to_m->value - z).cwiseAbs().maxCoeff() > 1e-3);
        }
    }
}

TEST_CASE("labels steer the map only while label conditioning is on") {
    ParamRegistry reg_on, reg_off;
    Rng r1(103), r2(103);
    const SharedMap conditioned(reg_on, "m", 6, 4, r1, true);
    const SharedMap unconditioned(reg_off, "m", 6, 4, r2, false);
    Rng pr(104);
    testutil::randomize_params(reg_on, pr, 0.4);
    Rng pr2(104);
    testutil::randomize_params(reg_off, pr2, 0.4);

    Rng zr(105);
    const ad::Var zv = ad::constant(randn(5, 6, zr));
    const ad::Var e0 = ad::constant(one_hot_rows(5, 4, 0));
    const ad::Var e1 = ad::constant(one_hot_rows(5, 4, 1));

    const ad::Mat on0 = conditioned.map(zv, e0, MapDirection::LesionToMutation)->value;
    const ad::Mat on1 = conditioned.map(zv, e1, MapDirection::LesionToMutation)->value;
    CHECK((on0 - on1).cwiseAbs().maxCoeff() > 1e-3);

    // The ablated variant feeds zeros regardless of the label, so the two
    // outputs agree bit for bit.
    const ad::Mat off0 = unconditioned.map(zv, e0, MapDirection::LesionToMutation)->value;
    const ad::Mat off1 = unconditioned.map(zv, e1, MapDirection::LesionToMutation)->value;
    CHECK((off0 - off1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(conditioned.label_conditioned());
    CHECK(!unconditioned.label_conditioned());
}

TEST_CASE("shared map validates labels and batch shapes") {
    ParamRegistry reg;
    Rng rng(106);
    CHECK_THROWS_AS(SharedMap(reg, "bad", 4, 0, rng), std::invalid_argument);

    const SharedMap map(reg, "m", 4, 3, rng);
    const ad::Var zv = ad::constant(randn(2, 4, rng));
    CHECK_THROWS_AS(map.map(zv, ad::constant(ad::Mat::Zero(2, 2)),
                            MapDirection::LesionToMutation),
                    std::invalid_argument);
    CHECK_THROWS_AS(map.map(zv, ad::constant(ad::Mat::Zero(3, 3)),
                            MapDirection::LesionToMutation),
                    std::invalid_argument);
}

TEST_CASE("mmd of a batch against itself is exactly zero") {
    Rng rng(107);
    const ad::Var a = ad::constant(randn(32, 5, rng));
    const ad::Var b = ad::constant(a->value);
    MmdConfig cfg;
    cfg.bandwidth = 1.0;
    CHECK(mmd_squared(a, a, cfg)->scalar() == 0.0);
    CHECK(mmd_squared(a, b, cfg)->scalar() == 0.0);
    CHECK(mmd_squared(a, b)->scalar() == 0.0);
}

TEST_CASE("mmd is symmetric in its arguments") {
    Rng rng(108);
    const ad::Var a = ad::constant(randn(40, 6, rng));
    const ad::Var b = ad::constant(randn(40, 6, rng).array() + 0.5);
    MmdConfig fixed;
    fixed.bandwidth = 1.3;
    const double ab = mmd_squared(a, b, fixed)->scalar();
    const double ba = mmd_squared(b, a, fixed)->scalar();
    CHECK(std::abs(ab - ba) < 1e-12);
    CHECK(ab > 0.0);

    // Median bandwidth pools both sides, so it is symmetric too.
    const double abm = mmd_squared(a, b)->scalar();
    const double bam = mmd_squared(b, a)->scalar();
    CHECK(std::abs(abm - bam) < 1e-12);
}

TEST_CASE("mmd separates shifted gaussians from the sampling noise floor") {
    Rng rng(109);
    const ad::Var base1 = ad::constant(randn(256, 8, rng));
    const ad::Var base2 = ad::constant(randn(256, 8, rng));
    const ad::Var shifted = ad::constant(randn(256, 8, rng).array() + 3.0);

    const double floor = mmd_squared(base1, base2)->scalar();
    const double gap = mmd_squared(base1, shifted)->scalar();
    CHECK(gap > 10.0 * floor);
    CHECK(gap > 0.1);
}

TEST_CASE("mmd rejects degenerate inputs") {
    Rng rng(110);
    const ad::Var one_row = ad::constant(randn(1, 4, rng));
    const ad::Var ok = ad::constant(randn(8, 4, rng));
    const ad::Var wrong_dim = ad::constant(randn(8, 3, rng));
    CHECK_THROWS_AS(mmd_squared(one_row, ok), std::invalid_argument);
    CHECK_THROWS_AS(mmd_squared(ok, one_row), std::invalid_argument);
    CHECK_THROWS_AS(mmd_squared(ok, wrong_dim), std::invalid_argument);
}

TEST_CASE("a fresh conditional prior scores like a standard normal") {
    ParamRegistry reg;
    Rng rng(111);
    const ConditionalPrior prior(reg, "p", 6, 3, rng);

    const ad::Mat z0 = randn(7, 6, rng);
    const ad::Mat zs = randn(7, 3, rng);
    const ad::Var lp = prior.logprob_rows(ad::constant(z0), ad::constant(zs));
    REQUIRE(lp->rows() == 7);
    REQUIRE(lp->cols() == 1);
    for (int i = 0; i < 7; ++i) {
        const double want = -0.5 * (6.0 * kLog2Pi + z0.row(i).squaredNorm());
        CHECK(std::abs(lp->value(i, 0) - want) < 1e-9);
    }

    // Zero-initialized coupling outputs ignore the condition entirely.
    const ad::Var lp2 = prior.logprob_rows(ad::constant(z0), ad::constant(randn(7, 3, rng)));
    CHECK((lp->value - lp2->value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fresh prior samples look standard normal and score finite") {
    ParamRegistry reg;
    Rng rng(112);
    const ConditionalPrior prior(reg, "p", 4, 2, rng);

    const ad::Mat zs = ad::Mat::Zero(4000, 2);
    const ad::Mat draws = prior.sample(zs, rng);
    REQUIRE(draws.rows() == 4000);
    REQUIRE(draws.cols() == 4);
    CHECK(std::abs(draws.mean()) < 0.02);
    const double var = (draws.array() - draws.mean()).square().mean();
    CHECK(var > 0.95);
    CHECK(var < 1.05);
    const ad::Var lp = prior.logprob_rows(ad::constant(draws), ad::constant(zs));
    CHECK(lp->value.allFinite());
}

TEST_CASE("randomized one dimensional prior still integrates to one") {
    ParamRegistry reg;
    Rng rng(113);
    const ConditionalPrior prior(reg, "q", 1, 2, rng, 2, 2);
    Rng pr(114);
    testutil::randomize_params(reg, pr, 0.3);

    // The composed scales can stretch the density arbitrarily, so take the
    // window from draws instead of hardcoding one.
    ad::Mat zs_row(1, 2);
    zs_row << 0.3, -0.7;
    ad::Mat zs_rep(2000, 2);
    zs_rep.rowwise() = zs_row.row(0);
    const ad::Mat draws = prior.sample(zs_rep, rng);
    const double m = draws.col(0).mean();
    const double sd = std::sqrt((draws.col(0).array() - m).square().mean());

    const int n = 8001;
    const double lo = m - 12.0 * sd, hi = m + 12.0 * sd;
    const double step = (hi - lo) / (n - 1);
    ad::Mat z0(n, 1);
    ad::Mat zs(n, 2);
    for (int i = 0; i < n; ++i) {
        z0(i, 0) = lo + step * i;
        zs.row(i) = zs_row.row(0);
    }
    const Eigen::VectorXd dens =
        prior.logprob_rows(ad::constant(z0), ad::constant(zs))->value.col(0).array().exp();
    double integral = 0.0;
    for (int i = 0; i + 1 < n; ++i) integral += 0.5 * (dens(i) + dens(i + 1)) * step;
    CHECK(std::abs(integral - 1.0) < 1e-3);
}

TEST_CASE("prior log density gradients match finite differences") {
    ParamRegistry reg;
    Rng rng(115);
    // Shallow stack: deep randomized stacks compound curvature until central
    // differences stop resolving the slope at any workable step size.
    const ConditionalPrior prior(reg, "p", 4, 2, rng, 2, 2);
    Rng pr(116);
    testutil::randomize_params(reg, pr, 0.2);

    const ad::Var z0 = ad::param(randn(2, 4, rng));
    const ad::Var zs = ad::param(randn(2, 2, rng));
    const auto loss = [&] {
        return ad::sum_all(prior.logprob_rows(z0, zs))->scalar();
    };

    const ad::Var total = ad::sum_all(prior.logprob_rows(z0, zs));
    ad::backward(total);
    const ad::Mat gz0 = z0->grad;
    const ad::Mat gzs = zs->grad;
    REQUIRE(gz0.size() == 8);
    REQUIRE(gzs.size() == 4);

    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double fd = testutil::fd_derivative(loss, z0->value(i, j));
            CHECK(testutil::rel_err(gz0(i, j), fd) < 1e-4);
        }
        for (int j = 0; j < 2; ++j) {
            const double fd = testutil::fd_derivative(loss, zs->value(i, j));
            CHECK(testutil::rel_err(gzs(i, j), fd) < 1e-4);
        }
    }

    // A few flow parameters, probed through the same scalar.
    reg.zero_grad();
    ad::backward(ad::sum_all(prior.logprob_rows(z0, zs)));
    const ad::Var w = reg.get("p.b0.s.l0.w");
    for (const auto& [r, c] : testutil::probe_entries(w->value, 3, 117)) {
        const double fd = testutil::fd_derivative(loss, w->value(r, c));
        CHECK(testutil::rel_err(w->grad(r, c), fd) < 1e-4);
    }
}

TEST_CASE("shared map gradients flow through both directions") {
    ParamRegistry reg;
    Rng rng(118);
    const SharedMap map(reg, "m", 4, 2, rng, true, 3, 2);
    Rng pr(119);
    testutil::randomize_params(reg, pr, 0.2);

    const ad::Var zv = ad::param(randn(3, 4, rng));
    const ad::Var oh = ad::constant(one_hot_rows(3, 2, 1));

    for (const MapDirection dir :
         {MapDirection::LesionToMutation, MapDirection::MutationToLesion}) {
        const auto loss = [&] {
            return ad::mean_all(ad::vsquare(map.map(zv, oh, dir)))->scalar();
        };
        reg.zero_grad();
        zv->grad.setZero();
        ad::backward(ad::mean_all(ad::vsquare(map.map(zv, oh, dir))));
        for (const auto& [r, c] : testutil::probe_entries(zv->value, 4, 120)) {
            const double fd = testutil::fd_derivative(loss, zv->value(r, c));
            CHECK(testutil::rel_err(zv->grad(r, c), fd) < 1e-4);
        }
        const ad::Var w = reg.get("m.b0.t.l0.w");
        for (const auto& [r, c] : testutil::probe_entries(w->value, 3, 121)) {
            const double fd = testutil::fd_derivative(loss, w->value(r, c));
            CHECK(testutil::rel_err(w->grad(r, c), fd) < 1e-4);
        }
    }
}

TEST_CASE("kl estimator matches its definition for a frozen draw") {
    ParamRegistry reg;
    Rng rng(122);
    const ConditionalPrior prior(reg, "p", 3, 2, rng);
    Rng pr(123);
    testutil::randomize_params(reg, pr, 0.2);

    GaussPost post;
    post.mean = ad::constant(randn(5, 3, rng));
    post.log_var = ad::constant(0.25 * randn(5, 3, rng));
    const ad::Var zs = ad::constant(randn(5, 2, rng));

    Rng draw_a(7), draw_b(7);
    const ad::Var got = kl_rows(post, zs, prior, draw_a);
    const ad::Var z0 = post.sample(draw_b);
    const ad::Mat want =
        (-prior.logprob_rows(z0, zs)->value) - post.entropy_rows()->value;
    REQUIRE(got->rows() == 5);
    REQUIRE(got->cols() == 1);
    CHECK((got->value - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kl estimate anchors at zero for a matched standard normal") {
    ParamRegistry reg;
    Rng rng(124);
    const ConditionalPrior prior(reg, "p", 6, 3, rng);

    GaussPost post;
    post.mean = ad::constant(ad::Mat::Zero(4, 6));
    post.log_var = ad::constant(ad::Mat::Zero(4, 6));
    const ad::Var zs = ad::constant(randn(4, 3, rng));
    const double est = kl_to_flow_prior(post, zs, prior, 1000, rng);
    CHECK(std::abs(est) < 0.05);
}

TEST_CASE("kl estimate recovers the closed form for a shifted gaussian") {
    ParamRegistry reg;
    Rng rng(125);
    const ConditionalPrior prior(reg, "p", 4, 2, rng);

    ad::Mat mu(1, 4);
    mu << 0.6, -0.4, 0.3, 0.2;
    GaussPost post;
    post.mean = ad::constant(mu);
    post.log_var = ad::constant(ad::Mat::Zero(1, 4));
    const ad::Var zs = ad::constant(ad::Mat::Zero(1, 2));

    // KL(N(mu, I) || N(0, I)) = |mu|^2 / 2.
    const double want = 0.5 * mu.squaredNorm();
    const double est = kl_to_flow_prior(post, zs, prior, 8000, rng);
    CHECK(std::abs(est - want) < 0.05);
}

TEST_CASE("kl estimates stay above zero up to sampling noise") {
    ParamRegistry reg;
    Rng rng(126);
    const ConditionalPrior prior(reg, "p", 5, 3, rng);
    Rng pr(127);
    testutil::randomize_params(reg, pr, 0.15);

    GaussPost post;
    post.mean = ad::constant(0.5 * randn(6, 5, rng));
    ad::Mat lv(6, 5);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 5; ++j) lv(i, j) = -1.0 + 1.5 * rng.uniform();
    }
    post.log_var = ad::constant(lv);
    const ad::Var zs = ad::constant(randn(6, 3, rng));
    const double est = kl_to_flow_prior(post, zs, prior, 2000, rng);
    CHECK(est > -0.05);

    CHECK_THROWS_AS(kl_to_flow_prior(post, zs, prior, 0, rng), std::invalid_argument);
}
