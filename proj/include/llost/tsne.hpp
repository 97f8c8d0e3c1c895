#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace llost {

// Exact (all-pairs) t-SNE. Quadratic in the number of points, which is fine
// at the cohort sizes this projector sees.
struct TsneConfig {
    double perplexity = 30.0;  // effective neighbor count, clamped to (N-1)/3
    int n_iter = 500;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 100;
    double lr = 100.0;
    std::uint64_t seed = 1;
};

// x is N x D; returns N x 2. Deterministic for a given config.
Eigen::MatrixXd tsne_embed(const Eigen::MatrixXd& x, const TsneConfig& cfg);

}  // namespace llost
