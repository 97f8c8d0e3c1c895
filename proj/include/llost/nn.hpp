#pragma once

#include <map>
#include <string>
#include <vector>

#include "llost/autodiff.hpp"
#include "llost/rng.hpp"

namespace llost {

// Flat registry of named parameters. Names are stable across runs, which is
// what checkpointing and the optimizer key on.
class ParamRegistry {
public:
    ad::Var create(const std::string& name, int rows, int cols, double init_scale, Rng& rng);
    ad::Var create_zero(const std::string& name, int rows, int cols);

    const std::map<std::string, ad::Var>& all() const { return params_; }
    ad::Var get(const std::string& name) const;
    void zero_grad();
    std::size_t count() const;  // total scalar parameters

private:
    std::map<std::string, ad::Var> params_;
};

struct Linear {
    ad::Var w;  // in x out
    ad::Var b;  // 1 x out

    Linear() = default;
    // zero_init makes the layer output exactly zero at start; flow couplings
    // rely on that to begin at the identity map.
    Linear(ParamRegistry& reg, const std::string& name, int in, int out, Rng& rng,
           bool zero_init = false);

    ad::Var operator()(const ad::Var& x) const;
};

// Fully connected stack with tanh between layers and a linear last layer.
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;
    Mlp(ParamRegistry& reg, const std::string& name, int in, const std::vector<int>& hidden,
        int out, Rng& rng, bool zero_init_last = false);

    ad::Var operator()(ad::Var x) const;
};

class Adam {
public:
    Adam(ParamRegistry& reg, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    // Applies one update from the accumulated grads, then zeroes them.
    void step();

    double lr() const { return lr_; }
    long long t() const { return t_; }

    // Moment state round-trips through checkpoints.
    struct State {
        long long t = 0;
        std::map<std::string, ad::Mat> m;
        std::map<std::string, ad::Mat> v;
    };
    State state() const;
    void set_state(const State& s);

private:
    ParamRegistry* reg_;
    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::map<std::string, ad::Mat> m_, v_;
};

}  // namespace llost
