#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <vector>

#include "llost/distributions.hpp"
#include "llost/mathutil.hpp"
#include "llost/rng.hpp"

using namespace llost;

TEST_CASE("nb_logpmf geometric hand values") {
    // r=1 reduces to the geometric distribution with success prob 1-p.
    CHECK(nb_logpmf(0, 1.0, 0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(nb_logpmf(2, 1.0, 0.5) == doctest::Approx(std::log(0.125)).epsilon(1e-12));
    CHECK(nb_mean(1.0, 0.5) == doctest::Approx(1.0));
    CHECK(nb_var(2.0, 0.4) == doctest::Approx(2.0 * 0.4 / 0.36).epsilon(1e-12));
}

TEST_CASE("nb pmf sums to one over a grid of (r,p)") {
    for (double r : {0.5, 1.0, 2.5, 5.0}) {
        for (double p : {0.1, 0.3, 0.5, 0.8}) {
            double sum = 0.0;
            for (int m = 0; m <= 2000; ++m) sum += std::exp(nb_logpmf(m, r, p));
            CHECK(std::abs(sum - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("occurrence probability equals one minus pmf at zero") {
    CHECK(bernoulli_occurrence_prob(1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bernoulli_occurrence_prob(2.0, 0.5) == doctest::Approx(0.75).epsilon(1e-12));

    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        const double r = std::exp(rng.uniform(-2.0, 2.0));
        const double p = rng.uniform(0.01, 0.99);
        const double direct = bernoulli_occurrence_prob(r, p);
        const double via_pmf = 1.0 - std::exp(nb_logpmf(0, r, p));
        CHECK(std::abs(direct - via_pmf) < 1e-12);
    }
}

TEST_CASE("occurrence probability is monotone in r and p") {
    double prev = 0.0;
    for (double r = 0.25; r <= 8.0; r *= 2.0) {
        const double q = bernoulli_occurrence_prob(r, 0.4);
        CHECK(q > prev);
        prev = q;
    }
    prev = 0.0;
    for (double p = 0.1; p < 1.0; p += 0.2) {
        const double q = bernoulli_occurrence_prob(1.7, p);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("bernoulli_logpmf hand values and near-perfect fit") {
    Eigen::VectorXd b1(1), q1(1);
    b1 << 1.0;
    q1 << 0.5;
    CHECK(bernoulli_logpmf(b1, q1) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

    const int v = 40;
    Eigen::VectorXd b(v), q(v);
    for (int g = 0; g < v; ++g) {
        b(g) = g % 3 == 0 ? 1.0 : 0.0;
        q(g) = b(g);  // clipped inside to (1e-7, 1-1e-7)
    }
    CHECK(std::abs(bernoulli_logpmf(b, q)) < v * 2e-7);
}

TEST_CASE("nb sampler matches the pmf in moments and a GOF test") {
    Rng rng(11);

    SUBCASE("p near zero yields all-zero draws") {
        Eigen::VectorXd r(10), p(10);
        r.setConstant(3.0);
        p.setConstant(1e-9);
        const std::vector<int> d = sample_counts(r, p, rng);
        for (int x : d) CHECK(x == 0);
    }

    SUBCASE("empirical P(0) near 0.5 for the geometric case") {
        const int n = 10000;
        int zeros = 0;
        for (int i = 0; i < n; ++i) zeros += rng.negative_binomial(1.0, 0.5) == 0 ? 1 : 0;
        CHECK(std::abs(zeros / static_cast<double>(n) - 0.5) < 0.01);
    }

    SUBCASE("empirical mean and variance match r p/(1-p) and r p/(1-p)^2") {
        const double r = 2.0, p = 0.4;
        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = rng.negative_binomial(r, p);
            sum += x;
            sumsq += x * x;
        }
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        CHECK(std::abs(mean - nb_mean(r, p)) < 0.02 * nb_mean(r, p) + 0.01);
        CHECK(std::abs(var - nb_var(r, p)) < 0.05 * nb_var(r, p));
    }

    SUBCASE("chi-square goodness of fit at alpha = 0.01") {
        const double r = 2.0, p = 0.4;
        const int n = 100000;
        const int cap = 10;  // counts above the cap pool into a tail bin
        std::vector<int> obs(cap + 2, 0);
        for (int i = 0; i < n; ++i) {
            const int x = rng.negative_binomial(r, p);
            ++obs[static_cast<size_t>(std::min(x, cap + 1))];
        }
        std::vector<double> expect(cap + 2, 0.0);
        double head = 0.0;
        for (int m = 0; m <= cap; ++m) {
            expect[static_cast<size_t>(m)] = n * std::exp(nb_logpmf(m, r, p));
            head += expect[static_cast<size_t>(m)];
        }
        expect[static_cast<size_t>(cap + 1)] = n - head;
        double stat = 0.0;
        for (size_t k = 0; k < obs.size(); ++k) {
            REQUIRE(expect[k] > 5.0);  // standard cell-count requirement
            const double d = obs[k] - expect[k];
            stat += d * d / expect[k];
        }
        const boost::math::chi_squared dist(static_cast<double>(obs.size() - 1));
        CHECK(stat < boost::math::quantile(dist, 0.99));
    }
}

TEST_CASE("matrix helpers agree with the scalar definitions") {
    Rng rng(23);
    const int b = 4, v = 7;
    Eigen::MatrixXd log_r(b, v), logits(b, v);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < v; ++j) {
            log_r(i, j) = rng.uniform(-1.0, 1.5);
            logits(i, j) = rng.uniform(-2.0, 2.0);
        }
    }
    const Eigen::MatrixXd mean = nb_mean_matrix(log_r, logits);
    const Eigen::MatrixXd occ = occurrence_prob_matrix(log_r, logits);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < v; ++j) {
            const double r = std::exp(log_r(i, j));
            const double p = sigmoid(logits(i, j));
            CHECK(mean(i, j) == doctest::Approx(nb_mean(r, p)).epsilon(1e-10));
            CHECK(occ(i, j) ==
                  doctest::Approx(bernoulli_occurrence_prob(r, p)).epsilon(1e-10));
        }
    }
}

TEST_CASE("batched log-likelihood rows match scalar sums") {
    Rng rng(31);
    const int b = 3, v = 6;
    ad::Mat log_r(b, v), logits(b, v), counts(b, v), occ(b, v);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < v; ++j) {
            log_r(i, j) = rng.uniform(-0.5, 1.0);
            logits(i, j) = rng.uniform(-1.5, 1.5);
            counts(i, j) = rng.uniform_int(6);
            occ(i, j) = counts(i, j) > 0 ? 1.0 : 0.0;
        }
    }
    NbHead head;
    head.log_r = ad::constant(log_r);
    head.logits = ad::constant(logits);

    const ad::Var nb_rows = nb_loglik_rows(head, counts);
    const ad::Var be_rows = bernoulli_loglik_rows(head, occ);
    for (int i = 0; i < b; ++i) {
        double nb_want = 0.0;
        Eigen::VectorXd bi(v), qi(v);
        for (int j = 0; j < v; ++j) {
            const double r = std::exp(log_r(i, j));
            const double p = sigmoid(logits(i, j));
            nb_want += nb_logpmf(static_cast<int>(counts(i, j)), r, p);
            bi(j) = occ(i, j);
            qi(j) = bernoulli_occurrence_prob(r, p);
        }
        CHECK(nb_rows->value(i, 0) == doctest::Approx(nb_want).epsilon(1e-9));
        CHECK(be_rows->value(i, 0) ==
              doctest::Approx(bernoulli_logpmf(bi, qi)).epsilon(1e-9));
    }
}

TEST_CASE("domain violations are rejected") {
    CHECK_THROWS(nb_logpmf(-1, 1.0, 0.5));
    CHECK_THROWS(nb_logpmf(0, -1.0, 0.5));
    CHECK_THROWS(nb_logpmf(0, 1.0, 1.5));
}
