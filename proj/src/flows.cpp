#include "llost/flows.hpp"

#include <stdexcept>

#include "llost/mathutil.hpp"

namespace llost {

namespace {

std::vector<int> invert_perm(const std::vector<int>& p) {
    std::vector<int> inv(p.size());
    for (size_t i = 0; i < p.size(); ++i) inv[static_cast<size_t>(p[i])] = static_cast<int>(i);
    return inv;
}

void check_finite(const ad::Var& z, const ad::Var& c, const char* where) {
    if (!z->value.allFinite() || !c->value.allFinite()) {
        throw std::invalid_argument(std::string(where) + ": non-finite input");
    }
}

}  // namespace

FlowStack::FlowStack(ParamRegistry& reg, const std::string& prefix, int dim, int cond_dim,
                     int n_steps, int blocks_per_step, Rng& rng, double scale_clamp)
    : dim_(dim), cond_dim_(cond_dim), scale_clamp_(scale_clamp) {
    if (dim < 1) throw std::invalid_argument("FlowStack: dim must be >= 1");
    if (cond_dim < 0) throw std::invalid_argument("FlowStack: cond_dim must be >= 0");
    if (n_steps < 1 || blocks_per_step < 1) {
        throw std::invalid_argument("FlowStack: need at least one block");
    }

    const int n_blocks = n_steps * blocks_per_step;
    const int d1 = dim == 1 ? 1 : dim / 2;
    const int d2 = dim - d1;
    const std::vector<int> widths{128, 128};

    // Track the composition of the per-block permutations so the trailing
    // correction permutation restores the identity.
    std::vector<int> comp(dim);
    for (int i = 0; i < dim; ++i) comp[i] = i;

    blocks_.reserve(static_cast<size_t>(n_blocks));
    for (int b = 0; b < n_blocks; ++b) {
        Block blk;
        blk.d1 = d1;
        blk.d2 = d2;
        blk.perm = rng.permutation(dim);
        const std::string name = prefix + ".b" + std::to_string(b);
        blk.s_net = Mlp(reg, name + ".s", d2 + cond_dim, widths, d1, rng, /*zero_init_last=*/true);
        blk.t_net = Mlp(reg, name + ".t", d2 + cond_dim, widths, d1, rng, /*zero_init_last=*/true);

        std::vector<int> next(dim);
        for (int i = 0; i < dim; ++i) next[i] = comp[blk.perm[i]];
        comp = next;
        perm_inv_.push_back(invert_perm(blk.perm));
        blocks_.push_back(std::move(blk));
    }
    // comp[f[i]] = i  <=>  f = comp^{-1}
    final_perm_ = invert_perm(comp);
    final_perm_inv_ = comp;
}

std::pair<ad::Var, ad::Var> FlowStack::block_forward(const Block& b, const ad::Var& z,
                                                     const ad::Var& c) const {
    using namespace ad;
    const Var z1 = cols(z, 0, b.d1);
    const Var z2 = cols(z, b.d1, b.d2);
    const Var h = hcat(z2, c);
    const Var s = softclamp(b.s_net(h), scale_clamp_);
    const Var t = b.t_net(h);
    const Var y1 = add(mul(z1, vexp(s)), t);
    return {hcat(y1, z2), rowsum(s)};
}

ad::Var FlowStack::block_inverse(const Block& b, const ad::Var& y, const ad::Var& c) const {
    using namespace ad;
    const Var y1 = cols(y, 0, b.d1);
    const Var y2 = cols(y, b.d1, b.d2);
    const Var h = hcat(y2, c);
    const Var s = softclamp(b.s_net(h), scale_clamp_);
    const Var t = b.t_net(h);
    const Var z1 = mul(sub(y1, t), vexp(neg(s)));
    return hcat(z1, y2);
}

std::pair<ad::Var, ad::Var> FlowStack::forward(const ad::Var& z, const ad::Var& c) const {
    using namespace ad;
    if (z->cols() != dim_) throw std::invalid_argument("FlowStack::forward: wrong dimension");
    if (c->cols() != cond_dim_ || c->rows() != z->rows()) {
        throw std::invalid_argument("FlowStack::forward: condition shape mismatch");
    }
    check_finite(z, c, "FlowStack::forward");
    Var cur = z;
    Var logdet = constant(Mat::Zero(z->rows(), 1));
    for (const auto& b : blocks_) {
        cur = permute_cols(cur, b.perm);
        auto [y, ld] = block_forward(b, cur, c);
        cur = y;
        logdet = add(logdet, ld);
    }
    cur = permute_cols(cur, final_perm_);
    return {cur, logdet};
}

ad::Var FlowStack::inverse(const ad::Var& y, const ad::Var& c) const {
    using namespace ad;
    if (y->cols() != dim_) throw std::invalid_argument("FlowStack::inverse: wrong dimension");
    if (c->cols() != cond_dim_ || c->rows() != y->rows()) {
        throw std::invalid_argument("FlowStack::inverse: condition shape mismatch");
    }
    check_finite(y, c, "FlowStack::inverse");
    Var cur = permute_cols(y, final_perm_inv_);
    for (size_t i = blocks_.size(); i-- > 0;) {
        cur = block_inverse(blocks_[i], cur, c);
        cur = permute_cols(cur, perm_inv_[i]);
    }
    return cur;
}

ad::Var FlowStack::logprob(const ad::Var& z, const ad::Var& c) const {
    using namespace ad;
    auto [y, logdet] = forward(z, c);
    const Var quad = scale(rowsum(vsquare(y)), -0.5);
    return add_scalar(add(quad, logdet), -0.5 * dim_ * kLog2Pi);
}

ad::Mat FlowStack::sample(const ad::Mat& c, int n, Rng& rng) const {
    if (c.rows() != n) throw std::invalid_argument("FlowStack::sample: condition rows != n");
    ad::Mat eps(n, dim_);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim_; ++j) eps(i, j) = rng.normal();
    }
    return inverse(ad::constant(std::move(eps)), ad::constant(c))->value;
}

}  // namespace llost
