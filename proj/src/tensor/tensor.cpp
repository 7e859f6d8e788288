#include "mug/tensor.hpp"

#include <random>
#include <sstream>
#include <unordered_set>

#include "node.hpp"

namespace mug {

using detail::Access;
using detail::Node;

namespace {

thread_local bool g_grad_mode = true;

void validate_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor dimension must be >= 1, got shape " + shape_string(shape));
    }
}

std::shared_ptr<Node> new_leaf(Shape shape, std::vector<double> values) {
    validate_shape(shape);
    if (values.size() != shape_numel(shape)) {
        throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    return node;
}

const Node& deref(const std::shared_ptr<Node>& n) {
    if (!n) throw ContractError("use of an undefined tensor");
    return *n;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
    validate_shape(shape);
    std::vector<double> values(shape_numel(shape), value);
    return Tensor(new_leaf(std::move(shape), std::move(values)));
}

Tensor Tensor::seeded_gaussian(Shape shape, std::uint64_t seed, double stddev) {
    validate_shape(shape);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = dist(rng);
    return Tensor(new_leaf(std::move(shape), std::move(values)));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values) {
    return Tensor(new_leaf(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double value) { return from_vector({1}, {value}); }

const Shape& Tensor::shape() const { return deref(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
    return s[axis];
}

std::size_t Tensor::numel() const { return deref(node_).data.size(); }

std::span<const double> Tensor::data() const { return deref(node_).data; }

std::span<double> Tensor::mutable_data() {
    deref(node_);
    if (!node_->leaf) throw ContractError("mutable_data() is only available on leaf tensors");
    return node_->data;
}

std::vector<double> Tensor::to_vector() const { return deref(node_).data; }

double Tensor::item() const {
    const Node& n = deref(node_);
    if (n.data.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(n.shape));
    return n.data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    const Node& n = deref(node_);
    if (index.size() != n.shape.size()) throw ShapeError("index rank does not match tensor rank");
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= n.shape[axis]) throw ShapeError("index out of range");
        flat = flat * n.shape[axis] + i;
        ++axis;
    }
    return n.data[flat];
}

bool Tensor::requires_grad() const { return deref(node_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
    deref(node_);
    if (!node_->leaf) throw ContractError("requires_grad can only be set on leaf tensors");
    node_->requires_grad = on;
    return *this;
}

bool Tensor::is_leaf() const { return deref(node_).leaf; }

bool Tensor::has_grad() const { return deref(node_).has_grad; }

std::span<const double> Tensor::grad() const {
    const Node& n = deref(node_);
    if (!n.has_grad) throw ContractError("gradient requested but not populated");
    return n.grad;
}

std::vector<double> Tensor::grad_or_zeros() const {
    const Node& n = deref(node_);
    if (!n.has_grad) return std::vector<double>(n.data.size(), 0.0);
    return n.grad;
}

void Tensor::zero_grad() {
    deref(node_);
    node_->grad.clear();
    node_->has_grad = false;
}

void Tensor::backward() const {
    const Node& root = deref(node_);
    if (root.data.size() != 1) {
        throw ContractError("backward() requires a one-element tensor, got shape " + shape_string(root.shape));
    }
    if (!root.requires_grad) throw ContractError("backward() on a tensor that does not require grad");

    // Iterative post-order DFS yields a topological order (parents first).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        if (n->has_grad) {
            throw ContractError("gradient already populated on a reachable tensor of shape " +
                                shape_string(n->shape) + "; call zero_grad() before another backward pass");
        }
    }
    for (Node* n : order) {
        n->grad.assign(n->data.size(), 0.0);
        n->has_grad = true;
    }
    node_->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->leaf && n->backward) n->backward(n->grad);
    }
}

Tensor Tensor::detach() const {
    const Node& n = deref(node_);
    return Tensor(new_leaf(n.shape, n.data));
}

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs, BackwardFn backward) {
    auto node = new_leaf(std::move(shape), std::move(values));
    node->leaf = false;
    bool needs = false;
    if (g_grad_mode) {
        for (const Tensor& in : inputs) needs = needs || in.requires_grad();
    }
    if (needs) {
        node->requires_grad = true;
        node->parents.reserve(inputs.size());
        for (const Tensor& in : inputs) node->parents.push_back(Access::node(in));
        node->backward = std::move(backward);
    }
    return Access::wrap(std::move(node));
}

std::span<double> grad_accumulator(const Tensor& t) {
    const auto& n = Access::node(t);
    if (!n || !n->requires_grad || !n->has_grad) return {};
    return n->grad;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }
bool grad_mode_enabled() { return g_grad_mode; }

}  // namespace mug
