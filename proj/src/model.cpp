#include "llost/model.hpp"

#include <cmath>
#include <stdexcept>

#include "llost/mathutil.hpp"

namespace llost {

void ModelConfig::validate() const {
    if (vocab < 2) throw std::invalid_argument("ModelConfig: vocab must be >= 2");
    if (n_types < 1) throw std::invalid_argument("ModelConfig: n_types must be >= 1");
    if (shared < 1) throw std::invalid_argument("ModelConfig: shared size must be >= 1");
    if (shared >= lesion_latent || shared >= mutation_latent()) {
        throw std::invalid_argument("ModelConfig: shared size must leave a specific remainder");
    }
    if (dec_points < 1) throw std::invalid_argument("ModelConfig: dec_points must be >= 1");
    if (shared_steps < 1 || shared_blocks < 1 || prior_steps < 1 || prior_blocks < 1) {
        throw std::invalid_argument("ModelConfig: flow depths must be >= 1");
    }
    if (scale_clamp <= 0.0) throw std::invalid_argument("ModelConfig: scale_clamp must be > 0");
}

namespace {

Rng init_rng(const ModelConfig& cfg) {
    cfg.validate();
    return Rng(cfg.init_seed);
}

void check_term(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw std::runtime_error(std::string("non-finite ELBO term ") + name);
    }
}

}  // namespace

LlostModel::LlostModel(const ModelConfig& cfg) : cfg_(cfg) {
    Rng rng = init_rng(cfg_);
    lesion_ = LesionVae(reg_, "lesion", cfg_.lesion_latent, cfg_.shared, cfg_.dec_points, rng);
    mutation_ = MutationVae(reg_, "mutation", cfg_.vocab, cfg_.likelihood, cfg_.mutation_latent(),
                            cfg_.shared, rng);
    shared_map_ = SharedMap(reg_, "shared_map", cfg_.shared, cfg_.n_types, rng,
                            cfg_.label_condition, cfg_.shared_steps, cfg_.shared_blocks,
                            cfg_.scale_clamp);
    prior_i_ = ConditionalPrior(reg_, "prior_i", cfg_.lesion_latent - cfg_.shared, cfg_.shared,
                                rng, cfg_.prior_steps, cfg_.prior_blocks, cfg_.scale_clamp);
    prior_m_ = ConditionalPrior(reg_, "prior_m", cfg_.mutation_latent() - cfg_.shared, cfg_.shared,
                                rng, cfg_.prior_steps, cfg_.prior_blocks, cfg_.scale_clamp);
}

ElboTerms LlostModel::compute_elbo(const Batch& batch, const ElboWeights& w, Rng& rng,
                                   bool deterministic) const {
    using namespace ad;
    if (batch.size() < 2) throw std::invalid_argument("compute_elbo: batch needs >= 2 samples");

    const Var stacked = constant(batch.clouds);
    const auto [post_i_star, post_i0] = lesion_.encode(stacked, batch.n_points);
    const auto [post_m_star, post_m0] = mutation_.encode(batch.counts);
    const Var one_hot = constant(batch.one_hot);

    const Var zi_star = deterministic ? post_i_star.mean : post_i_star.sample(rng);
    const Var zm_star = deterministic ? post_m_star.mean : post_m_star.sample(rng);
    const Var zi0 = deterministic ? post_i0.mean : post_i0.sample(rng);
    const Var zm0 = deterministic ? post_m0.mean : post_m0.sample(rng);

    const Var mapped_m = shared_map_.map(zi_star, one_hot, MapDirection::LesionToMutation);
    const Var mapped_i = shared_map_.map(zm_star, one_hot, MapDirection::MutationToLesion);

    const NbHead head = mutation_.decode(hcat(mapped_m, zm0));
    const Var recon_m =
        mean_all(mutation_.loglik_rows(head, batch.counts, batch.occurrence));

    const Var decoded = lesion_.decode(hcat(mapped_i, zi0));
    const Var recon_i = neg(chamfer_sym(decoded, batch.cloud_list));

    const MmdConfig mmd_cfg{cfg_.mmd_bandwidth};
    const Var mmd_m = mmd_squared(zm_star, mapped_m, mmd_cfg);
    const Var mmd_i = mmd_squared(zi_star, mapped_i, mmd_cfg);

    // Definitional KL against the flow prior: -E[log p] - H(q), reusing the
    // reconstruction's specific-latent draw.
    const Var kl_m =
        mean_all(sub(neg(prior_m_.logprob_rows(zm0, mapped_m)), post_m0.entropy_rows()));
    const Var kl_i =
        mean_all(sub(neg(prior_i_.logprob_rows(zi0, mapped_i)), post_i0.entropy_rows()));

    const Var total = add(add(scale(recon_m, w.recon_m), scale(recon_i, w.recon_i)),
                          neg(add(scale(add(mmd_m, mmd_i), w.mmd), scale(add(kl_m, kl_i), w.kl))));

    ElboTerms t;
    t.recon_m_v = recon_m;
    t.recon_i_v = recon_i;
    t.mmd_m_v = mmd_m;
    t.mmd_i_v = mmd_i;
    t.kl_m_v = kl_m;
    t.kl_i_v = kl_i;
    t.recon_m = recon_m->value(0, 0);
    t.recon_i = recon_i->value(0, 0);
    t.mmd_m = mmd_m->value(0, 0);
    t.mmd_i = mmd_i->value(0, 0);
    t.kl_m = kl_m->value(0, 0);
    t.kl_i = kl_i->value(0, 0);
    t.total = total->value(0, 0);
    t.loss = neg(total);
    check_term(t.recon_m, "recon_M");
    check_term(t.recon_i, "recon_I");
    check_term(t.mmd_m, "mmd_M");
    check_term(t.mmd_i, "mmd_I");
    check_term(t.kl_m, "kl_M");
    check_term(t.kl_i, "kl_I");
    check_term(t.total, "total");
    return t;
}

PredictionResult make_prediction_result(const Eigen::MatrixXd& log_r,
                                        const Eigen::MatrixXd& logits, Likelihood lik,
                                        PredictMode mode, Rng& rng) {
    PredictionResult out;
    out.log_r = log_r;
    out.logits = logits;
    // Occurrence 1-(1-p)^r is the Bernoulli head's own mean, so it serves
    // both likelihoods; the NB count mean only exists for the NB variant.
    out.occurrence = occurrence_prob_matrix(log_r, logits);
    out.expected_counts = lik == Likelihood::NB ? nb_mean_matrix(log_r, logits) : out.occurrence;
    out.binary = (out.occurrence.array() >= 0.5).cast<double>();
    if (mode == PredictMode::Counts) {
        const int B = static_cast<int>(log_r.rows());
        const int V = static_cast<int>(log_r.cols());
        out.sampled_counts.resize(B);
        for (int i = 0; i < B; ++i) {
            if (lik == Likelihood::NB) {
                const Eigen::VectorXd r = log_r.row(i).array().exp();
                const Eigen::VectorXd p =
                    logits.row(i).unaryExpr([](double u) { return sigmoid(u); });
                out.sampled_counts[i] = sample_counts(r, p, rng);
            } else {
                std::vector<int> b(static_cast<size_t>(V));
                for (int g = 0; g < V; ++g) {
                    b[static_cast<size_t>(g)] = rng.uniform() < out.occurrence(i, g) ? 1 : 0;
                }
                out.sampled_counts[i] = std::move(b);
            }
        }
    }
    return out;
}

PredictionResult LlostModel::predict(const Batch& batch, Rng& rng, PredictMode mode) const {
    using namespace ad;
    if (batch.size() < 1) throw std::invalid_argument("predict: empty batch");

    const Var stacked = constant(batch.clouds);
    const auto [post_i_star, post_i0] = lesion_.encode(stacked, batch.n_points);
    const Var one_hot = constant(batch.one_hot);
    const Var z_star_m =
        shared_map_.map(post_i_star.mean, one_hot, MapDirection::LesionToMutation);
    const ad::Mat z_m0 = prior_m_.sample(z_star_m->value, rng);
    const NbHead head = mutation_.decode(hcat(z_star_m, constant(z_m0)));
    return make_prediction_result(head.log_r->value, head.logits->value, cfg_.likelihood, mode,
                                  rng);
}

Eigen::VectorXd LlostModel::heldout_loglik(const Batch& batch) const {
    using namespace ad;
    const Var stacked = constant(batch.clouds);
    const auto [post_i_star, post_i0] = lesion_.encode(stacked, batch.n_points);
    const auto [post_m_star, post_m0] = mutation_.encode(batch.counts);
    const Var one_hot = constant(batch.one_hot);
    const Var z_star_m =
        shared_map_.map(post_i_star.mean, one_hot, MapDirection::LesionToMutation);
    const NbHead head = mutation_.decode(hcat(z_star_m, post_m0.mean));
    const Var ll = mutation_.loglik_rows(head, batch.counts, batch.occurrence);
    return ll->value.col(0);
}

Eigen::MatrixXd LlostModel::shared_embedding(const Batch& batch) const {
    using namespace ad;
    const Var stacked = constant(batch.clouds);
    const auto [post_i_star, post_i0] = lesion_.encode(stacked, batch.n_points);
    const Var one_hot = constant(batch.one_hot);
    return shared_map_.map(post_i_star.mean, one_hot, MapDirection::LesionToMutation)->value;
}

}  // namespace llost
