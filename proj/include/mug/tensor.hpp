#pragma once

// Dense row-major f64 tensor with reverse-mode autodiff.
//
// A Tensor is a shared handle to a graph node. Copies alias the same node, so
// a parameter held by several modules is one parameter. Values are immutable
// once constructed; only leaf tensors expose mutable_data() (optimizer steps,
// checkpoint loading and finite-difference probes).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mug/error.hpp"

namespace mug {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
struct Access;
}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    // N(0, stddev^2) entries from a std::mt19937_64 seeded with `seed`.
    static Tensor seeded_gaussian(Shape shape, std::uint64_t seed, double stddev = 1.0);
    static Tensor from_vector(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    std::span<double> mutable_data();
    std::vector<double> to_vector() const;
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool on = true);
    bool is_leaf() const;

    bool has_grad() const;
    // Throws ContractError when no gradient has been populated.
    std::span<const double> grad() const;
    std::vector<double> grad_or_zeros() const;
    void zero_grad();

    // Reverse-mode pass from a one-element tensor. Every reachable tensor that
    // requires grad receives a populated gradient. Gradients never accumulate
    // across passes: a reachable tensor that still holds a gradient from an
    // earlier pass is a ContractError (reset with zero_grad()).
    void backward() const;

    // Same values, cut from the graph.
    Tensor detach() const;

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
    friend struct detail::Access;
};

// ---------------------------------------------------------------------------
// Custom autograd operations.
//
// `backward` receives the upstream gradient of the result and pushes
// contributions into inputs via grad_accumulator(). It is only invoked when at
// least one input requires grad.
using BackwardFn = std::function<void(std::span<const double> grad_out)>;

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                      BackwardFn backward);

// Gradient buffer of `t` during a backward pass. Empty span when `t` does not
// require grad, so callers can skip the work.
std::span<double> grad_accumulator(const Tensor& t);

// While alive, new op results on this thread are recorded without graph edges.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};
bool grad_mode_enabled();

// ---------------------------------------------------------------------------
// Elementwise. Binary ops broadcast over trailing dimensions.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor neg(const Tensor& x);

Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor square(const Tensor& x);
// Values outside [lo, hi] are clamped and receive zero gradient.
Tensor clamp(const Tensor& x, double lo, double hi);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// ---------------------------------------------------------------------------
// Reductions. The reduced axis is kept with extent 1.
enum class PoolKind { Avg, Max };

// Max pooling routes the gradient to the lowest index among tied maxima.
Tensor pool(const Tensor& x, std::size_t axis, PoolKind kind);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);   // shape [1]
Tensor mean_all(const Tensor& x);  // shape [1]
Tensor softmax(const Tensor& x, std::size_t axis);

// ---------------------------------------------------------------------------
// Linear algebra and layout.
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor transpose(const Tensor& x);                 // rank-2 only
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
Tensor reverse(const Tensor& x, std::size_t axis);
// out[i] = x[(i + offset) mod n] along `axis`: rotate([1,2,3], 1) == [2,3,1].
Tensor rotate(const Tensor& x, std::size_t axis, std::ptrdiff_t offset);

// Causal depthwise convolution over time. x: [T,D], weight: [D,k], bias: [D].
// y[t,d] = bias[d] + sum_j weight[d,j] * x[t-(k-1)+j, d], zero left padding, so
// weight[d,k-1] is the tap on the current step.
Tensor conv1d_depthwise(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Normalizes over the last axis, then applies per-feature gain and shift.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps = 1e-5);

}  // namespace mug
