#include "llost/cvae.hpp"

#include <cmath>
#include <stdexcept>

namespace llost {

namespace {
constexpr int kPooledDim = 512;
constexpr int kEmbedDim = 256;
constexpr int kQHidden = 512;
}  // namespace

void CvaeConfig::validate() const {
    if (vocab < 2) throw std::invalid_argument("CvaeConfig: vocab must be >= 2");
    if (n_types < 1) throw std::invalid_argument("CvaeConfig: n_types must be >= 1");
    if (latent < 2) throw std::invalid_argument("CvaeConfig: latent must be >= 2");
    if (prior_steps < 1 || prior_blocks < 1) {
        throw std::invalid_argument("CvaeConfig: flow depths must be >= 1");
    }
    if (scale_clamp <= 0.0) throw std::invalid_argument("CvaeConfig: scale_clamp must be > 0");
}

CvaeModel::CvaeModel(const CvaeConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.init_seed);
    trunk_ = Mlp(reg_, "cvae.enc", 3, {64, 128, 256}, kPooledDim, rng);
    m_embed_ = Linear(reg_, "cvae.m_embed", cfg_.vocab, kEmbedDim, rng);
    q_net_ = Mlp(reg_, "cvae.q", kEmbedDim + kPooledDim + cfg_.n_types, {kQHidden},
                 2 * cfg_.latent, rng);
    const int dec_in = cfg_.latent + kPooledDim + cfg_.n_types;
    const std::vector<int> dec_hidden =
        cfg_.likelihood == Likelihood::NB ? std::vector<int>{500} : std::vector<int>{};
    const int dec_out = cfg_.likelihood == Likelihood::NB ? 1000 : 800;
    dec_trunk_ = Mlp(reg_, "cvae.dec", dec_in, dec_hidden, dec_out, rng);
    head_r_ = Linear(reg_, "cvae.head_r", dec_out, cfg_.vocab, rng);
    head_p_ = Linear(reg_, "cvae.head_p", dec_out, cfg_.vocab, rng);
    prior_ = FlowStack(reg_, "cvae.prior", cfg_.latent, 0, cfg_.prior_steps, cfg_.prior_blocks,
                       rng, cfg_.scale_clamp);
}

ad::Var CvaeModel::pooled(const Batch& batch) const {
    using namespace ad;
    if (batch.size() < 1) throw std::invalid_argument("CvaeModel: empty batch");
    const Var stacked = constant(batch.clouds);
    return segmax_rows(trunk_(stacked), batch.n_points);
}

GaussPost CvaeModel::posterior(const Batch& batch, const ad::Var& pooled_feat) const {
    using namespace ad;
    const ad::Mat transformed = batch.counts.array().log1p();
    const Var emb = vtanh(m_embed_(constant(transformed)));
    const Var q_in = hcat({emb, pooled_feat, constant(batch.one_hot)});
    return make_posterior(q_net_(q_in), cfg_.latent);
}

NbHead CvaeModel::decode(const ad::Var& z, const ad::Var& pooled_feat,
                         const ad::Var& one_hot) const {
    using namespace ad;
    const Var h = vtanh(dec_trunk_(hcat({z, pooled_feat, one_hot})));
    NbHead head;
    head.log_r = softclamp(head_r_(h), 10.0);
    head.logits = softclamp(head_p_(h), 15.0);
    return head;
}

CvaeTerms CvaeModel::compute_loss(const Batch& batch, Rng& rng, bool deterministic) const {
    using namespace ad;
    if (batch.size() < 1) throw std::invalid_argument("compute_loss: empty batch");

    const Var feat = pooled(batch);
    const GaussPost post = posterior(batch, feat);
    const Var z = deterministic ? post.mean : post.sample(rng);
    const NbHead head = decode(z, feat, constant(batch.one_hot));

    const Var loglik = cfg_.likelihood == Likelihood::NB
                           ? nb_loglik_rows(head, batch.counts)
                           : bernoulli_loglik_rows(head, batch.occurrence);
    const Var recon = mean_all(loglik);

    const Var empty_cond = constant(ad::Mat::Zero(batch.size(), 0));
    const Var kl = mean_all(sub(neg(prior_.logprob(z, empty_cond)), post.entropy_rows()));

    const Var total = sub(recon, kl);

    CvaeTerms t;
    t.recon = recon->value(0, 0);
    t.kl = kl->value(0, 0);
    t.total = total->value(0, 0);
    t.loss = neg(total);
    if (!std::isfinite(t.recon)) throw std::runtime_error("non-finite baseline term recon");
    if (!std::isfinite(t.kl)) throw std::runtime_error("non-finite baseline term kl");
    return t;
}

PredictionResult CvaeModel::predict(const Batch& batch, Rng& rng, PredictMode mode) const {
    using namespace ad;
    const Var feat = pooled(batch);
    const ad::Mat z = prior_.sample(ad::Mat::Zero(batch.size(), 0), batch.size(), rng);
    const NbHead head = decode(constant(z), feat, constant(batch.one_hot));
    return make_prediction_result(head.log_r->value, head.logits->value, cfg_.likelihood, mode,
                                  rng);
}

Eigen::VectorXd CvaeModel::heldout_loglik(const Batch& batch) const {
    using namespace ad;
    const Var feat = pooled(batch);
    const GaussPost post = posterior(batch, feat);
    const NbHead head = decode(post.mean, feat, constant(batch.one_hot));
    const Var ll = cfg_.likelihood == Likelihood::NB
                       ? nb_loglik_rows(head, batch.counts)
                       : bernoulli_loglik_rows(head, batch.occurrence);
    return ll->value.col(0);
}

}  // namespace llost
