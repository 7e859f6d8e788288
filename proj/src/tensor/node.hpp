#pragma once

#include <memory>
#include <vector>

#include "mug/tensor.hpp"

namespace mug::detail {

struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;
};

struct Access {
    static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }
    static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
};

}  // namespace mug::detail
