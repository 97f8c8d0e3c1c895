#pragma once

#include <utility>
#include <vector>

#include "llost/nn.hpp"

namespace llost {

// Conditional normalizing flow built from affine coupling blocks with fixed
// channel permutations. Rows are batch samples. The condition enters only the
// scale/shift networks, so invertibility holds for any condition.
//
// Coupling update on the partition (z1, z2):
//   y1 = z1 * exp(s(z2, c)) + t(z2, c),  y2 = z2,  logdet = sum(s)
// s and t are small MLPs whose last layers start at zero, and the interleaved
// permutations compose with a final correction permutation to the identity,
// so a freshly built stack is exactly the identity map with logdet 0.
class FlowStack {
public:
    FlowStack() = default;
    // n_steps flow steps of blocks_per_step couplings each. dim may be 1, in
    // which case the couplings degenerate to condition-only affine maps.
    FlowStack(ParamRegistry& reg, const std::string& prefix, int dim, int cond_dim, int n_steps,
              int blocks_per_step, Rng& rng, double scale_clamp = 2.0);

    int dim() const { return dim_; }
    int cond_dim() const { return cond_dim_; }

    // z: B x dim, c: B x cond_dim (B x 0 when unconditioned).
    // Returns (y, per-row logdet as B x 1).
    std::pair<ad::Var, ad::Var> forward(const ad::Var& z, const ad::Var& c) const;
    ad::Var inverse(const ad::Var& y, const ad::Var& c) const;

    // log p(z | c) under a standard-normal base at the forward image, B x 1.
    ad::Var logprob(const ad::Var& z, const ad::Var& c) const;

    // Draw n rows by pulling base samples through the inverse map.
    ad::Mat sample(const ad::Mat& c, int n, Rng& rng) const;

private:
    struct Block {
        Mlp s_net, t_net;
        int d1 = 0, d2 = 0;
        std::vector<int> perm;  // applied before the coupling
    };

    std::pair<ad::Var, ad::Var> block_forward(const Block& b, const ad::Var& z,
                                              const ad::Var& c) const;
    ad::Var block_inverse(const Block& b, const ad::Var& y, const ad::Var& c) const;

    int dim_ = 0, cond_dim_ = 0;
    double scale_clamp_ = 2.0;
    std::vector<Block> blocks_;
    std::vector<int> final_perm_;       // composes the block perms back to identity
    std::vector<int> final_perm_inv_;
    std::vector<std::vector<int>> perm_inv_;  // per-block inverses, for the reverse pass
};

}  // namespace llost
