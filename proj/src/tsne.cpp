#include "llost/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "llost/rng.hpp"

namespace llost {

namespace {

// Row-wise conditional affinities p_{j|i} whose entropy matches
// log(perplexity), found by bisecting the precision beta_i.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& d2, double perplexity) {
    const int n = static_cast<int>(d2.rows());
    const double target = std::log(perplexity);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        Eigen::VectorXd row(n);
        for (int it = 0; it < 64; ++it) {
            double sum = 0.0, dsum = 0.0;
            for (int j = 0; j < n; ++j) {
                row(j) = j == i ? 0.0 : std::exp(-beta * d2(i, j));
                sum += row(j);
                dsum += d2(i, j) * row(j);
            }
            if (sum <= 0.0) {  // all neighbors squashed out; relax
                hi = beta;
                beta *= 0.5;
                continue;
            }
            const double h = std::log(sum) + beta * dsum / sum;
            const double diff = h - target;
            if (std::abs(diff) < 1e-7) break;
            if (diff > 0.0) {  // entropy too high, sharpen
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = lo > 0.0 ? 0.5 * (beta + lo) : beta * 0.5;
            }
        }
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            row(j) = j == i ? 0.0 : std::exp(-beta * d2(i, j));
            sum += row(j);
        }
        if (sum <= 0.0) {  // fully degenerate row (duplicated points)
            for (int j = 0; j < n; ++j) row(j) = j == i ? 0.0 : 1.0;
            sum = static_cast<double>(n - 1);
        }
        p.row(i) = row.transpose() / sum;
    }
    return p;
}

}  // namespace

Eigen::MatrixXd tsne_embed(const Eigen::MatrixXd& x, const TsneConfig& cfg) {
    const int n = static_cast<int>(x.rows());
    if (n < 3) throw std::runtime_error("tsne_embed: need at least 3 points");
    if (cfg.n_iter < 1 || cfg.lr <= 0.0 || cfg.perplexity <= 0.0)
        throw std::runtime_error("tsne_embed: bad config");

    Eigen::MatrixXd d2(n, n);
    {
        const Eigen::VectorXd sq = x.rowwise().squaredNorm();
        d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * x * x.transpose();
        d2 = d2.cwiseMax(0.0);
    }

    const double perp = std::min(cfg.perplexity, (n - 1) / 3.0);
    const Eigen::MatrixXd pc = conditional_affinities(d2, std::max(perp, 1.0));
    Eigen::MatrixXd p = (pc + pc.transpose()) / (2.0 * n);
    p = p.cwiseMax(1e-12);
    p.diagonal().setZero();

    Rng rng(cfg.seed);
    Eigen::MatrixXd y(n, 2);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 2; ++k) y(i, k) = 1e-4 * rng.normal();

    Eigen::MatrixXd vel = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd gain = Eigen::MatrixXd::Ones(n, 2);

    for (int it = 0; it < cfg.n_iter; ++it) {
        const double exag = it < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
        const double momentum = it < cfg.exaggeration_iters ? 0.5 : 0.8;

        // Student-t kernel weights over the embedding.
        Eigen::MatrixXd w(n, n);
        {
            const Eigen::VectorXd sq = y.rowwise().squaredNorm();
            w = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * y * y.transpose();
            w = (1.0 + w.cwiseMax(0.0).array()).inverse().matrix();
            w.diagonal().setZero();
        }
        const double wsum = std::max(w.sum(), 1e-12);

        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, 2);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double coeff = 4.0 * (exag * p(i, j) - w(i, j) / wsum) * w(i, j);
                grad(i, 0) += coeff * (y(i, 0) - y(j, 0));
                grad(i, 1) += coeff * (y(i, 1) - y(j, 1));
            }
        }

        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < 2; ++k) {
                const bool same_sign = (grad(i, k) > 0.0) == (vel(i, k) > 0.0);
                gain(i, k) = same_sign ? std::max(gain(i, k) * 0.8, 0.01) : gain(i, k) + 0.2;
                vel(i, k) = momentum * vel(i, k) - cfg.lr * gain(i, k) * grad(i, k);
                y(i, k) += vel(i, k);
            }
        }
        y.rowwise() -= y.colwise().mean();
    }
    return y;
}

}  // namespace llost
