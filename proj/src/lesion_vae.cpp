#include "llost/lesion_vae.hpp"

#include <stdexcept>

#include "llost/mathutil.hpp"

namespace llost {

ad::Var GaussPost::sample(Rng& rng) const {
    ad::Mat eps(mean->rows(), mean->cols());
    for (int i = 0; i < mean->rows(); ++i) {
        for (int j = 0; j < mean->cols(); ++j) eps(i, j) = rng.normal();
    }
    using namespace ad;
    return add(mean, mul(vexp(scale(log_var, 0.5)), constant(std::move(eps))));
}

ad::Var GaussPost::entropy_rows() const {
    using namespace ad;
    // H = 0.5 * sum(1 + log 2pi + log_var)
    return scale(rowsum(add_scalar(log_var, 1.0 + kLog2Pi)), 0.5);
}

GaussPost make_posterior(const ad::Var& head_out, int d) {
    if (head_out->cols() != 2 * d) throw std::invalid_argument("make_posterior: width != 2d");
    GaussPost p;
    p.mean = ad::cols(head_out, 0, d);
    p.log_var = ad::softclamp(ad::cols(head_out, d, d), 10.0);
    return p;
}

LesionVae::LesionVae(ParamRegistry& reg, const std::string& prefix, int latent, int shared,
                     int n_dec_points, Rng& rng)
    : latent_(latent), shared_(shared), n_dec_points_(n_dec_points) {
    if (shared < 1 || shared >= latent) {
        throw std::invalid_argument("LesionVae: shared size must be in [1, latent)");
    }
    trunk_ = Mlp(reg, prefix + ".enc", 3, {64, 128, 256}, 512, rng);
    head_shared_ = Linear(reg, prefix + ".head_shared", 512, 2 * shared, rng);
    head_specific_ = Linear(reg, prefix + ".head_specific", 512, 2 * (latent - shared), rng);
    dec_ = Mlp(reg, prefix + ".dec", latent, {512, 1024}, 3 * n_dec_points, rng);
}

std::pair<GaussPost, GaussPost> LesionVae::encode(const ad::Var& stacked, int n_points) const {
    using namespace ad;
    if (n_points < 1 || stacked->rows() % n_points != 0) {
        throw std::invalid_argument("LesionVae::encode: rows must divide by n_points");
    }
    if (!stacked->value.allFinite()) {
        throw std::invalid_argument("LesionVae::encode: non-finite input");
    }
    const Var feat = trunk_(stacked);              // (B*N) x 512
    const Var pooled = segmax_rows(feat, n_points);  // B x 512
    return {make_posterior(head_shared_(pooled), shared_),
            make_posterior(head_specific_(pooled), latent_ - shared_)};
}

ad::Var LesionVae::decode(const ad::Var& z) const {
    if (z->cols() != latent_) throw std::invalid_argument("LesionVae::decode: wrong latent size");
    return dec_(z);
}

}  // namespace llost
