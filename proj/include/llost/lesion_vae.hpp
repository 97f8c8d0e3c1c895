#pragma once

#include "llost/nn.hpp"

namespace llost {

struct GaussPost {
    ad::Var mean;     // B x d
    ad::Var log_var;  // B x d, squashed into (-10, 10)

    // Reparameterized draw, eps from rng.
    ad::Var sample(Rng& rng) const;
    // Per-row entropy of the diagonal Gaussian, B x 1.
    ad::Var entropy_rows() const;
};

// Splits a 2d-wide head output into (mean, squashed log-var).
GaussPost make_posterior(const ad::Var& head_out, int d);

// Permutation-invariant point-cloud encoder and fixed-size decoder.
// Encoder: per-point MLP 3 -> 64 -> 128 -> 256 -> 512, max-pool over each
// cloud's points, then linear heads for the shared and specific posteriors.
// Decoder: latent -> 512 -> 1024 -> 3*n_dec_points.
class LesionVae {
public:
    LesionVae() = default;
    LesionVae(ParamRegistry& reg, const std::string& prefix, int latent, int shared,
              int n_dec_points, Rng& rng);

    int latent() const { return latent_; }
    int shared() const { return shared_; }
    int specific() const { return latent_ - shared_; }
    int dec_points() const { return n_dec_points_; }

    // stacked: (B*n_points) x 3, n_points per cloud. Returns posteriors over
    // the shared and specific latent parts.
    std::pair<GaussPost, GaussPost> encode(const ad::Var& stacked, int n_points) const;

    // z: B x latent, ordered [shared, specific]. Output B x (3*n_dec_points).
    ad::Var decode(const ad::Var& z) const;

private:
    int latent_ = 0, shared_ = 0, n_dec_points_ = 0;
    Mlp trunk_;
    Linear head_shared_, head_specific_;
    Mlp dec_;
};

}  // namespace llost
