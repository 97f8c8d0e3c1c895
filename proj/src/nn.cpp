#include "llost/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace llost {

ad::Var ParamRegistry::create(const std::string& name, int rows, int cols, double init_scale,
                              Rng& rng) {
    if (params_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    ad::Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = init_scale * rng.normal();
    }
    auto v = ad::param(std::move(m));
    params_[name] = v;
    return v;
}

ad::Var ParamRegistry::create_zero(const std::string& name, int rows, int cols) {
    if (params_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    auto v = ad::param(ad::Mat::Zero(rows, cols));
    params_[name] = v;
    return v;
}

ad::Var ParamRegistry::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

void ParamRegistry::zero_grad() {
    for (auto& [name, p] : params_) p->grad.resize(0, 0);
}

std::size_t ParamRegistry::count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
}

Linear::Linear(ParamRegistry& reg, const std::string& name, int in, int out, Rng& rng,
               bool zero_init) {
    if (zero_init) {
        w = reg.create_zero(name + ".w", in, out);
    } else {
        // Xavier scale keeps tanh stacks in their linear regime at init.
        w = reg.create(name + ".w", in, out, std::sqrt(2.0 / (in + out)), rng);
    }
    b = reg.create_zero(name + ".b", 1, out);
}

ad::Var Linear::operator()(const ad::Var& x) const {
    return ad::add_rowvec(ad::matmul(x, w), b);
}

Mlp::Mlp(ParamRegistry& reg, const std::string& name, int in, const std::vector<int>& hidden,
         int out, Rng& rng, bool zero_init_last) {
    int d = in;
    for (size_t i = 0; i < hidden.size(); ++i) {
        layers.emplace_back(reg, name + ".l" + std::to_string(i), d, hidden[i], rng);
        d = hidden[i];
    }
    layers.emplace_back(reg, name + ".l" + std::to_string(hidden.size()), d, out, rng,
                        zero_init_last);
}

ad::Var Mlp::operator()(ad::Var x) const {
    for (size_t i = 0; i + 1 < layers.size(); ++i) x = ad::vtanh(layers[i](x));
    return layers.back()(x);
}

Adam::Adam(ParamRegistry& reg, double lr, double beta1, double beta2, double eps)
    : reg_(&reg), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (const auto& [name, p] : reg_->all()) {
        if (!p->has_grad()) continue;
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.size() == 0) {
            m = ad::Mat::Zero(p->value.rows(), p->value.cols());
            v = ad::Mat::Zero(p->value.rows(), p->value.cols());
        }
        m = beta1_ * m + (1.0 - beta1_) * p->grad;
        v = beta2_ * v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
        const ad::Mat mh = m / bc1;
        const ad::Mat vh = v / bc2;
        p->value -= lr_ * (mh.array() / (vh.array().sqrt() + eps_)).matrix();
    }
    reg_->zero_grad();
}

Adam::State Adam::state() const { return State{t_, m_, v_}; }

void Adam::set_state(const State& s) {
    t_ = s.t;
    m_ = s.m;
    v_ = s.v;
}

}  // namespace llost
