#pragma once

#include "llost/distributions.hpp"
#include "llost/lesion_vae.hpp"
#include "llost/nn.hpp"

namespace llost {

enum class Likelihood { NB, Bernoulli };

// Count-vector encoder and NB-parameter decoder. The encoder consumes
// log1p(counts); the decoder trunk is shared between the dispersion and
// probability heads, which split at the last layer:
//   r = exp(squash(head_r)), p = sigmoid(squash(head_p)).
// NB variant: encoder V -> 1000 -> 500 -> heads, latent 300, decoder mirrors.
// Bernoulli variant: encoder V -> 800 -> heads, latent 500, decoder mirrors.
class MutationVae {
public:
    MutationVae() = default;
    MutationVae(ParamRegistry& reg, const std::string& prefix, int vocab, Likelihood lik,
                int latent, int shared, Rng& rng);

    int latent() const { return latent_; }
    int shared() const { return shared_; }
    int specific() const { return latent_ - shared_; }
    int vocab() const { return vocab_; }
    Likelihood likelihood() const { return lik_; }

    // counts: B x V raw counts (transformed internally).
    std::pair<GaussPost, GaussPost> encode(const ad::Mat& counts) const;

    // z: B x latent ordered [shared, specific].
    NbHead decode(const ad::Var& z) const;

    // Per-sample log-likelihood of the batch profiles under decoded params,
    // B x 1. Uses counts for NB, the binarized view for Bernoulli.
    ad::Var loglik_rows(const NbHead& head, const ad::Mat& counts,
                        const ad::Mat& occurrence) const;

private:
    int vocab_ = 0, latent_ = 0, shared_ = 0;
    Likelihood lik_ = Likelihood::NB;
    Mlp enc_trunk_;
    Linear head_shared_, head_specific_;
    Mlp dec_trunk_;
    Linear head_r_, head_p_;
};

}  // namespace llost
