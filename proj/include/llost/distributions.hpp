#pragma once

#include <Eigen/Dense>
#include <vector>

#include "llost/autodiff.hpp"
#include "llost/rng.hpp"

namespace llost {

// Negative-Binomial convention used throughout:
//   pmf(m) = Gamma(m+r) / (Gamma(r) m!) * p^m * (1-p)^r
// so P(0) = (1-p)^r, mean = r p/(1-p), var = r p/(1-p)^2, and the
// zero-truncation probability matches the Bernoulli occurrence head.

double nb_logpmf(int m, double r, double p);
double nb_mean(double r, double p);
double nb_var(double r, double p);

// P(count > 0) = 1 - (1-p)^r, evaluated in log space.
double bernoulli_occurrence_prob(double r, double p);

// Sum of b*log q + (1-b)*log(1-q) with q clipped into [1e-7, 1-1e-7].
double bernoulli_logpmf(const Eigen::VectorXd& b, const Eigen::VectorXd& q);

// Gene-wise NB draw (gamma-Poisson mixture consistent with the pmf).
std::vector<int> sample_counts(const Eigen::VectorXd& r, const Eigen::VectorXd& p, Rng& rng);

// Decoder head outputs before the positivity/sigmoid transforms. log_r and
// logits are batch x V; r = exp(log_r), p = sigmoid(logits) elementwise.
struct NbHead {
    ad::Var log_r;
    ad::Var logits;
};

inline constexpr double kOccClip = 1e-7;

// Per-sample NB log-likelihood, batch x 1. counts is batch x V.
ad::Var nb_loglik_rows(const NbHead& head, const ad::Mat& counts);

// Per-sample Bernoulli occurrence log-likelihood, batch x 1. occ is batch x V
// with entries in {0,1}. Occurrence prob q = 1 - (1-p)^r, clipped.
ad::Var bernoulli_loglik_rows(const NbHead& head, const ad::Mat& occ);

// Plain-value views used at prediction time.
Eigen::MatrixXd nb_mean_matrix(const Eigen::MatrixXd& log_r, const Eigen::MatrixXd& logits);
Eigen::MatrixXd occurrence_prob_matrix(const Eigen::MatrixXd& log_r,
                                       const Eigen::MatrixXd& logits);

}  // namespace llost
