#include "mug/nn.hpp"

#include <cmath>

namespace mug {

Init Init::zeros() { return constant(0.0); }

Init Init::constant(double value) {
    return {[value](std::size_t n, std::mt19937_64&) { return std::vector<double>(n, value); }};
}

Init Init::gaussian(double stddev) {
    return {[stddev](std::size_t n, std::mt19937_64& rng) {
        std::normal_distribution<double> dist(0.0, stddev);
        std::vector<double> v(n);
        for (double& x : v) x = dist(rng);
        return v;
    }};
}

Init Init::custom(InitFn fn) { return {std::move(fn)}; }

Tensor ParamStore::create(const std::string& name, Shape shape, const Init& init) {
    if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    std::mt19937_64 rng(seed_ ^ fnv1a(name));
    std::vector<double> values = init.fn(shape_numel(shape), rng);
    Tensor t = Tensor::from_vector(std::move(shape), std::move(values));
    t.set_requires_grad(true);
    params_.push_back({name, t});
    return t;
}

std::vector<Tensor> ParamStore::tensors() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.tensor);
    return out;
}

Tensor ParamStore::get(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.tensor;
    }
    throw ConfigError("no parameter named '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return true;
    }
    return false;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias,
               double init_stddev) {
    const double stddev = init_stddev >= 0.0 ? init_stddev : 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = store.create(name + ".weight", {in, out}, Init::gaussian(stddev));
    if (with_bias) bias_ = store.create(name + ".bias", {out}, Init::zeros());
}

Tensor Linear::operator()(const Tensor& x) const {
    Tensor y = matmul(x, weight_);
    return bias_.defined() ? add(y, bias_) : y;
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t features) {
    gain_ = store.create(name + ".gain", {features}, Init::constant(1.0));
    shift_ = store.create(name + ".shift", {features}, Init::zeros());
}

}  // namespace mug
