#include "llost/coupling.hpp"

#include <stdexcept>

namespace llost {

SharedMap::SharedMap(ParamRegistry& reg, const std::string& prefix, int shared_dim, int n_labels,
                     Rng& rng, bool label_condition, int n_steps, int blocks_per_step,
                     double scale_clamp)
    : n_labels_(n_labels), label_condition_(label_condition) {
    if (n_labels < 1) throw std::invalid_argument("SharedMap: need at least one label");
    flow_ = FlowStack(reg, prefix, shared_dim, n_labels, n_steps, blocks_per_step, rng,
                      scale_clamp);
}

ad::Var SharedMap::condition(const ad::Var& one_hot) const {
    if (label_condition_) return one_hot;
    return ad::constant(ad::Mat::Zero(one_hot->rows(), one_hot->cols()));
}

ad::Var SharedMap::map(const ad::Var& z_star, const ad::Var& one_hot, MapDirection dir) const {
    if (one_hot->cols() != n_labels_) {
        throw std::invalid_argument("SharedMap::map: label dimension mismatch");
    }
    if (one_hot->rows() != z_star->rows()) {
        throw std::invalid_argument("SharedMap::map: batch size mismatch");
    }
    const ad::Var c = condition(one_hot);
    if (dir == MapDirection::LesionToMutation) return flow_.inverse(z_star, c);
    return flow_.forward(z_star, c).first;
}

ConditionalPrior::ConditionalPrior(ParamRegistry& reg, const std::string& prefix, int specific_dim,
                                   int shared_dim, Rng& rng, int n_steps, int blocks_per_step,
                                   double scale_clamp) {
    flow_ = FlowStack(reg, prefix, specific_dim, shared_dim, n_steps, blocks_per_step, rng,
                      scale_clamp);
}

ad::Var ConditionalPrior::logprob_rows(const ad::Var& z0, const ad::Var& z_star) const {
    return flow_.logprob(z0, z_star);
}

ad::Mat ConditionalPrior::sample(const ad::Mat& z_star, Rng& rng) const {
    return flow_.sample(z_star, static_cast<int>(z_star.rows()), rng);
}

ad::Var mmd_squared(const ad::Var& a, const ad::Var& b, const MmdConfig& cfg) {
    if (a->rows() < 2 || b->rows() < 2) {
        throw std::invalid_argument("mmd_squared: each side needs at least 2 rows");
    }
    if (a->cols() != b->cols()) throw std::invalid_argument("mmd_squared: dimension mismatch");
    const double h =
        cfg.bandwidth > 0.0 ? cfg.bandwidth : ad::median_bandwidth(a->value, b->value);
    return ad::mmd_iq(a, b, h);
}

ad::Var kl_rows(const GaussPost& post, const ad::Var& z_star, const ConditionalPrior& prior,
                Rng& rng) {
    const ad::Var z0 = post.sample(rng);
    return ad::sub(ad::neg(prior.logprob_rows(z0, z_star)), post.entropy_rows());
}

double kl_to_flow_prior(const GaussPost& post, const ad::Var& z_star, const ConditionalPrior& prior,
                        int n_samples, Rng& rng) {
    if (n_samples < 1) throw std::invalid_argument("kl_to_flow_prior: n_samples must be >= 1");
    // Draws stack as replicated rows so one flow pass covers all samples.
    GaussPost rep{ad::repeat_rows_each(post.mean, n_samples),
                  ad::repeat_rows_each(post.log_var, n_samples)};
    const ad::Var cond = ad::repeat_rows_each(z_star, n_samples);
    return kl_rows(rep, cond, prior, rng)->value.mean();
}

}  // namespace llost
