#pragma once

#include "llost/flows.hpp"
#include "llost/lesion_vae.hpp"

namespace llost {

enum class MapDirection { LesionToMutation, MutationToLesion };

// Label-conditioned invertible bridge between the two shared latents.
// Orientation is fixed: the flow's forward pass carries the mutation-side
// latent to the lesion side, so lesion-to-mutation runs the inverse pass.
class SharedMap {
public:
    SharedMap() = default;
    SharedMap(ParamRegistry& reg, const std::string& prefix, int shared_dim, int n_labels,
              Rng& rng, bool label_condition = true, int n_steps = 24, int blocks_per_step = 3,
              double scale_clamp = 2.0);

    int dim() const { return flow_.dim(); }
    int n_labels() const { return n_labels_; }
    bool label_conditioned() const { return label_condition_; }

    // z_star: B x s, one_hot: B x n_labels. The ablated (label_condition =
    // false) variant feeds zeros instead of narrowing the condition, which
    // keeps parameter shapes identical across variants.
    ad::Var map(const ad::Var& z_star, const ad::Var& one_hot, MapDirection dir) const;

private:
    ad::Var condition(const ad::Var& one_hot) const;

    FlowStack flow_;
    int n_labels_ = 0;
    bool label_condition_ = true;
};

// Flow prior over a domain-specific latent, conditioned on that domain's
// shared latent. Freshly constructed priors are the identity flow, i.e. a
// standard normal.
class ConditionalPrior {
public:
    ConditionalPrior() = default;
    ConditionalPrior(ParamRegistry& reg, const std::string& prefix, int specific_dim,
                     int shared_dim, Rng& rng, int n_steps = 12, int blocks_per_step = 2,
                     double scale_clamp = 2.0);

    int dim() const { return flow_.dim(); }
    int cond_dim() const { return flow_.cond_dim(); }

    // log p(z0 | z_star), B x 1.
    ad::Var logprob_rows(const ad::Var& z0, const ad::Var& z_star) const;

    // One draw per row of z_star.
    ad::Mat sample(const ad::Mat& z_star, Rng& rng) const;

private:
    FlowStack flow_;
};

struct MmdConfig {
    // Kernel bandwidth; nonpositive selects the median heuristic over the
    // current pair of batches (recomputed per call, outside the graph).
    double bandwidth = 0.0;
};

// Biased V-statistic MMD^2 with the inverse-multiquadratic kernel
// k(a,b) = 1/(1 + |(a-b)/h|^2). Needs at least two rows per side; the
// returned value is clamped at zero.
ad::Var mmd_squared(const ad::Var& a, const ad::Var& b, const MmdConfig& cfg = {});

// Single-draw KL estimate of the posterior against the flow prior, B x 1:
//   KL ~= -log p(z0 | z_star) - H(q),  z0 ~ q.
// The analytic Gaussian entropy stands in for E[log q], so only the prior
// term carries Monte Carlo noise.
ad::Var kl_rows(const GaussPost& post, const ad::Var& z_star, const ConditionalPrior& prior,
                Rng& rng);

// Multi-sample scalar estimator (mean over rows and draws); diagnostics and
// tests only, training uses kl_rows.
double kl_to_flow_prior(const GaussPost& post, const ad::Var& z_star, const ConditionalPrior& prior,
                        int n_samples, Rng& rng);

}  // namespace llost
