#pragma once

// Named parameter storage and the two stock layers everything else builds on.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mug/checkpoint.hpp"
#include "mug/tensor.hpp"

namespace mug {

// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

using InitFn = std::function<std::vector<double>(std::size_t count, std::mt19937_64& rng)>;

struct Init {
    static Init zeros();
    static Init constant(double value);
    static Init gaussian(double stddev);
    static Init custom(InitFn fn);

    InitFn fn;
};

// Owns every trainable tensor of a model under a unique dotted name. Each
// parameter draws its initial values from an RNG seeded by (store seed, name),
// so adding or removing a component never shifts another component's init.
class ParamStore {
public:
    explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

    Tensor create(const std::string& name, Shape shape, const Init& init);

    const std::vector<NamedTensor>& named() const { return params_; }
    std::vector<NamedTensor>& named() { return params_; }
    std::vector<Tensor> tensors() const;
    Tensor get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::size_t parameter_count() const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::vector<NamedTensor> params_;
};

// y = x W + b with W: [in, out]. Default init N(0, 1/in).
class Linear {
public:
    Linear() = default;
    Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias = true,
           double init_stddev = -1.0);

    Tensor operator()(const Tensor& x) const;

    const Tensor& weight() const { return weight_; }
    const Tensor& bias() const { return bias_; }
    std::size_t in_features() const { return weight_.dim(0); }
    std::size_t out_features() const { return weight_.dim(1); }

private:
    Tensor weight_;
    Tensor bias_;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(ParamStore& store, const std::string& name, std::size_t features);

    Tensor operator()(const Tensor& x) const { return layer_norm(x, gain_, shift_); }

private:
    Tensor gain_;
    Tensor shift_;
};

}  // namespace mug
