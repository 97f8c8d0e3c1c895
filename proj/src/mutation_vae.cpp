#include "llost/mutation_vae.hpp"

#include <stdexcept>

namespace llost {

MutationVae::MutationVae(ParamRegistry& reg, const std::string& prefix, int vocab, Likelihood lik,
                         int latent, int shared, Rng& rng)
    : vocab_(vocab), latent_(latent), shared_(shared), lik_(lik) {
    if (shared < 1 || shared >= latent) {
        throw std::invalid_argument("MutationVae: shared size must be in [1, latent)");
    }
    // Hidden widths and their mirror for the decoder.
    const std::vector<int> enc_hidden =
        lik == Likelihood::NB ? std::vector<int>{1000, 500} : std::vector<int>{800};
    std::vector<int> dec_hidden(enc_hidden.rbegin(), enc_hidden.rend());
    const int enc_out = enc_hidden.back();

    // Trunk emits the last hidden width; posterior heads hang off it.
    std::vector<int> trunk_hidden(enc_hidden.begin(), enc_hidden.end() - 1);
    enc_trunk_ = Mlp(reg, prefix + ".enc", vocab, trunk_hidden, enc_out, rng);
    head_shared_ = Linear(reg, prefix + ".head_shared", enc_out, 2 * shared, rng);
    head_specific_ = Linear(reg, prefix + ".head_specific", enc_out, 2 * (latent - shared), rng);

    std::vector<int> dec_trunk_hidden(dec_hidden.begin(), dec_hidden.end() - 1);
    const int dec_out = dec_hidden.back();
    dec_trunk_ = Mlp(reg, prefix + ".dec", latent, dec_trunk_hidden, dec_out, rng);
    head_r_ = Linear(reg, prefix + ".head_r", dec_out, vocab, rng);
    head_p_ = Linear(reg, prefix + ".head_p", dec_out, vocab, rng);
}

std::pair<GaussPost, GaussPost> MutationVae::encode(const ad::Mat& counts) const {
    using namespace ad;
    if (counts.cols() != vocab_) throw std::invalid_argument("MutationVae::encode: V mismatch");
    if (!counts.allFinite() || (counts.array() < 0.0).any()) {
        throw std::invalid_argument("MutationVae::encode: counts must be finite and nonnegative");
    }
    const Mat transformed = counts.array().log1p();
    const Var h = vtanh(enc_trunk_(constant(transformed)));
    return {make_posterior(head_shared_(h), shared_),
            make_posterior(head_specific_(h), latent_ - shared_)};
}

NbHead MutationVae::decode(const ad::Var& z) const {
    using namespace ad;
    if (z->cols() != latent_) throw std::invalid_argument("MutationVae::decode: wrong latent size");
    const Var h = vtanh(dec_trunk_(z));
    NbHead out;
    out.log_r = softclamp(head_r_(h), 10.0);
    out.logits = softclamp(head_p_(h), 15.0);
    return out;
}

ad::Var MutationVae::loglik_rows(const NbHead& head, const ad::Mat& counts,
                                 const ad::Mat& occurrence) const {
    return lik_ == Likelihood::NB ? nb_loglik_rows(head, counts)
                                  : bernoulli_loglik_rows(head, occurrence);
}

}  // namespace llost
