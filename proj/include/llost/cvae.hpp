#pragma once

#include "llost/model.hpp"

namespace llost {

// Conditional-VAE baseline over a single latent space. The point-cloud trunk
// matches the main model's encoder; the profile and the cancer label are
// concatenated with the pooled features on the way into the posterior, and
// with the latent on the way into the decoder. The prior over the latent is
// an unconditional flow; test-time prediction decodes a prior draw together
// with the lesion features and label, so it sees exactly the same inputs as
// the main model's prediction path.
struct CvaeConfig {
    int vocab = 0;
    int n_types = 0;
    Likelihood likelihood = Likelihood::NB;  // NB: CVAE_p, Bernoulli: CVAE_pb
    int latent = 256;
    int prior_steps = 12, prior_blocks = 2;
    double scale_clamp = 2.0;
    std::uint64_t init_seed = 1;

    void validate() const;
};

struct CvaeTerms {
    ad::Var loss;  // negated ELBO
    double recon = 0.0, kl = 0.0, total = 0.0;
};

class CvaeModel {
public:
    explicit CvaeModel(const CvaeConfig& cfg);
    CvaeModel(const CvaeModel&) = delete;
    CvaeModel& operator=(const CvaeModel&) = delete;

    const CvaeConfig& config() const { return cfg_; }
    ParamRegistry& params() { return reg_; }
    const ParamRegistry& params() const { return reg_; }

    CvaeTerms compute_loss(const Batch& batch, Rng& rng, bool deterministic = false) const;

    PredictionResult predict(const Batch& batch, Rng& rng,
                             PredictMode mode = PredictMode::Counts) const;

    // log p(M | posterior-mean latent, lesion features, label), per sample.
    Eigen::VectorXd heldout_loglik(const Batch& batch) const;

private:
    ad::Var pooled(const Batch& batch) const;
    NbHead decode(const ad::Var& z, const ad::Var& pooled_feat, const ad::Var& one_hot) const;
    GaussPost posterior(const Batch& batch, const ad::Var& pooled_feat) const;

    CvaeConfig cfg_;
    ParamRegistry reg_;
    Mlp trunk_;        // per-point features, pooled by max
    Linear m_embed_;   // log1p(counts) -> embedding
    Mlp q_net_;        // [m_embed, pooled, y] -> posterior heads
    Mlp dec_trunk_;    // [z, pooled, y] -> decoder features
    Linear head_r_, head_p_;
    FlowStack prior_;  // unconditional
};

}  // namespace llost
