#include "llost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace llost {

double log_perplexity(const Eigen::VectorXd& logliks, const Eigen::VectorXd& tml,
                      int* n_excluded) {
    if (logliks.size() != tml.size()) {
        throw std::invalid_argument("log_perplexity: size mismatch");
    }
    double acc = 0.0;
    int used = 0, skipped = 0;
    for (Eigen::Index i = 0; i < tml.size(); ++i) {
        if (tml[i] > 0.0) {
            acc += logliks[i] / tml[i];
            ++used;
        } else {
            ++skipped;
        }
    }
    if (n_excluded) *n_excluded = skipped;
    if (used == 0) throw std::invalid_argument("log_perplexity: all profiles are empty");
    return -acc / used;
}

double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw std::invalid_argument("rmse: shape mismatch");
    }
    if (pred.size() == 0) throw std::invalid_argument("rmse: empty input");
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

Eigen::VectorXd tml_errors(const Eigen::MatrixXd& pred_counts,
                           const Eigen::MatrixXd& true_counts) {
    if (pred_counts.rows() != true_counts.rows() || pred_counts.cols() != true_counts.cols()) {
        throw std::invalid_argument("tml_errors: shape mismatch");
    }
    return pred_counts.rowwise().sum() - true_counts.rowwise().sum();
}

OccurrenceMetrics occurrence_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw std::invalid_argument("occurrence_metrics: shape mismatch");
    }
    OccurrenceMetrics m;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        for (Eigen::Index j = 0; j < pred.cols(); ++j) {
            const bool p = pred(i, j) != 0.0;
            const bool t = truth(i, j) != 0.0;
            if (p && t) ++m.tp;
            else if (p && !t) ++m.fp;
            else if (!p && t) ++m.fn;
            else ++m.tn;
        }
    }
    if (m.tp + m.fp == 0) {
        m.ppv = 0.0;
        m.ppv_defined = false;
    } else {
        m.ppv = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    }
    const long long denom = 2 * m.tp + m.fp + m.fn;
    m.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(m.tp) / static_cast<double>(denom);
    return m;
}

std::pair<double, double> ppv_bootstrap(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                                        int n_runs, std::uint64_t seed) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw std::invalid_argument("ppv_bootstrap: shape mismatch");
    }
    if (pred.rows() < 2) throw std::invalid_argument("ppv_bootstrap: need at least 2 samples");
    if (n_runs < 1) throw std::invalid_argument("ppv_bootstrap: need at least 1 run");
    Rng rng(seed);
    const int n = static_cast<int>(pred.rows());
    std::vector<double> vals(n_runs);
    Eigen::MatrixXd rp(n, pred.cols()), rt(n, truth.cols());
    for (int run = 0; run < n_runs; ++run) {
        for (int i = 0; i < n; ++i) {
            const int k = rng.uniform_int(n);
            rp.row(i) = pred.row(k);
            rt.row(i) = truth.row(k);
        }
        vals[run] = occurrence_metrics(rp, rt).ppv;
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n_runs;
    double var = 0.0;
    for (const double v : vals) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n_runs)};
}

namespace {

// Ranks with ties replaced by their average position (1-based).
std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: size mismatch");
    if (a.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        throw std::invalid_argument("spearman: constant input has no rank correlation");
    }
    return num / std::sqrt(va * vb);
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
    const int n = static_cast<int>(points.rows());
    if (n != static_cast<int>(labels.size())) throw std::invalid_argument("silhouette: size mismatch");
    if (n < 2) throw std::invalid_argument("silhouette: need at least 2 points");
    std::map<int, std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters[labels[i]].push_back(i);
    if (clusters.size() < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");

    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double d = (points.row(i) - points.row(j)).norm();
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& own = clusters[labels[i]];
        if (own.size() < 2) continue;  // singleton contributes 0
        double a = 0.0;
        for (const int j : own) {
            if (j != i) a += dist(i, j);
        }
        a /= static_cast<double>(own.size() - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [lab, members] : clusters) {
            if (lab == labels[i]) continue;
            double m = 0.0;
            for (const int j : members) m += dist(i, j);
            b = std::min(b, m / static_cast<double>(members.size()));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) acc += (b - a) / denom;
    }
    return acc / static_cast<double>(n);
}

}  // namespace llost
