#pragma once

#include <string>

#include "llost/coupling.hpp"
#include "llost/dataset.hpp"
#include "llost/mutation_vae.hpp"

namespace llost {

struct ModelConfig {
    int vocab = 0;
    int n_types = 0;
    Likelihood likelihood = Likelihood::NB;
    int shared = 200;        // s; the same size on both sides of the map
    int lesion_latent = 512;
    int dec_points = 256;    // lesion decoder output size
    bool label_condition = true;
    int shared_steps = 24, shared_blocks = 3;
    int prior_steps = 12, prior_blocks = 2;
    double scale_clamp = 2.0;
    double mmd_bandwidth = 0.0;  // <= 0: median heuristic per batch
    std::uint64_t init_seed = 1;

    // The mutation embedding width is tied to the likelihood variant.
    int mutation_latent() const { return likelihood == Likelihood::NB ? 300 : 500; }
    void validate() const;
};

struct ElboWeights {
    double recon_m = 1.0, recon_i = 1.0, mmd = 1.0, kl = 1.0;
};

// One objective evaluation. loss is the node to backprop (negated weighted
// total); the component Vars stay alive so callers can probe gradients of
// individual terms.
struct ElboTerms {
    ad::Var loss;
    ad::Var recon_m_v, recon_i_v, mmd_m_v, mmd_i_v, kl_m_v, kl_i_v;
    double recon_m = 0.0, recon_i = 0.0;
    double mmd_m = 0.0, mmd_i = 0.0;
    double kl_m = 0.0, kl_i = 0.0;
    double total = 0.0;
};

enum class PredictMode { Counts, Occurrence };

struct PredictionResult {
    Eigen::MatrixXd log_r, logits;    // B x V decoder heads
    Eigen::MatrixXd expected_counts;  // NB mean r p/(1-p); = occurrence for Bernoulli
    Eigen::MatrixXd occurrence;       // 1 - (1-p)^r under either likelihood
    Eigen::MatrixXd binary;           // occurrence >= 0.5
    std::vector<std::vector<int>> sampled_counts;  // filled in Counts mode
};

// Shared tail of every prediction path: expectations, occurrence
// probabilities, the 0.5-thresholded binary view, and (in Counts mode)
// sampled profiles. Occurrence 1-(1-p)^r is shared by both likelihoods (it
// is exactly what the Bernoulli loglik trains); the NB count mean exists
// only for the NB variant, so Bernoulli expected counts fall back to the
// occurrence probability and its samples are 0/1.
PredictionResult make_prediction_result(const Eigen::MatrixXd& log_r,
                                        const Eigen::MatrixXd& logits, Likelihood lik,
                                        PredictMode mode, Rng& rng);

// The dual-VAE cross-domain model: a point-cloud VAE and a profile VAE whose
// shared latents are tied by a label-conditioned invertible map, with
// conditional flow priors over the domain-specific latents.
class LlostModel {
public:
    explicit LlostModel(const ModelConfig& cfg);
    LlostModel(const LlostModel&) = delete;
    LlostModel& operator=(const LlostModel&) = delete;

    const ModelConfig& config() const { return cfg_; }
    ParamRegistry& params() { return reg_; }
    const ParamRegistry& params() const { return reg_; }

    const LesionVae& lesion() const { return lesion_; }
    const MutationVae& mutation() const { return mutation_; }
    const SharedMap& shared_map() const { return shared_map_; }
    const ConditionalPrior& lesion_prior() const { return prior_i_; }
    const ConditionalPrior& mutation_prior() const { return prior_m_; }

    // Single-sample objective on one batch. Reconstructions decode the
    // mapped shared latent of the opposite domain together with the
    // own-domain specific latent, mirroring the prediction path; MMD matches
    // each encoder's shared sample against the mapped one; the KL terms score
    // the specific latents under their flow priors. deterministic swaps
    // posterior samples for posterior means (rng untouched).
    ElboTerms compute_elbo(const Batch& batch, const ElboWeights& w, Rng& rng,
                           bool deterministic = false) const;

    // Lesion-to-profile prediction: encode the cloud, map the shared latent
    // under the label, draw the specific latent from its prior, decode.
    PredictionResult predict(const Batch& batch, Rng& rng,
                             PredictMode mode = PredictMode::Counts) const;

    // Per-sample log p(M | latents) with deterministic latents: shared from
    // the mapped lesion posterior mean, specific from the mutation posterior
    // mean. Feeds the perplexity metric.
    Eigen::VectorXd heldout_loglik(const Batch& batch) const;

    // Mapped shared latents (lesion side pushed to the mutation side),
    // deterministic; rows follow the batch. Used for 2-D projections.
    Eigen::MatrixXd shared_embedding(const Batch& batch) const;

private:
    ModelConfig cfg_;
    ParamRegistry reg_;
    LesionVae lesion_;
    MutationVae mutation_;
    SharedMap shared_map_;
    ConditionalPrior prior_i_, prior_m_;
};

}  // namespace llost
