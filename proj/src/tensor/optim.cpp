#include "mug/optim.hpp"

#include <cmath>

namespace mug {

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options) : params_(std::move(params)), options_(options) {
    if (!(options_.learning_rate > 0.0)) throw ConfigError("AdamW learning rate must be positive");
    for (const Tensor& p : params_) {
        if (!p.is_leaf()) throw ContractError("AdamW parameters must be leaf tensors");
        first_moment_.emplace_back(p.numel(), 0.0);
        second_moment_.emplace_back(p.numel(), 0.0);
    }
}

void AdamW::step() {
    for (const Tensor& p : params_) {
        if (!p.has_grad()) throw ContractError("AdamW step with a parameter that has no gradient");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(options_.beta1, t);
    const double bc2 = 1.0 - std::pow(options_.beta2, t);
    const double lr = options_.learning_rate;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        auto w = p.mutable_data();
        const auto g = p.grad();
        auto& m = first_moment_[i];
        auto& v = second_moment_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] *= 1.0 - lr * options_.weight_decay;
            m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g[j];
            v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + options_.epsilon);
        }
    }
}

void AdamW::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace mug
