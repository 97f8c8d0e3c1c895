#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "llost/rng.hpp"

namespace llost {

// -(1/N) sum_n (1/L_n) loglik_n over the samples with L_n > 0. Zero-TML
// samples are excluded from the average and counted into n_excluded; an
// all-zero profile set is an error.
double log_perplexity(const Eigen::VectorXd& logliks, const Eigen::VectorXd& tml,
                      int* n_excluded = nullptr);

// sqrt of the mean squared entrywise error over all N*V entries.
double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

// Per-sample signed error of the profile sums, pred - true.
Eigen::VectorXd tml_errors(const Eigen::MatrixXd& pred_counts, const Eigen::MatrixXd& true_counts);

struct OccurrenceMetrics {
    double f1 = 0.0;
    double ppv = 0.0;
    bool ppv_defined = true;  // false when nothing was predicted positive
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Micro-averages over all sample-gene pairs of two {0,1} matrices.
OccurrenceMetrics occurrence_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

// Bootstrap over resampled rows; returns (mean, std) of the micro PPV.
std::pair<double, double> ppv_bootstrap(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                                        int n_runs, std::uint64_t seed);

// Rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Mean silhouette coefficient under Euclidean distance; needs at least two
// distinct labels. Singleton clusters contribute 0.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels);

}  // namespace llost
