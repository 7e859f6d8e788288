#pragma once

#include <cstddef>
#include <vector>

#include "mug/tensor.hpp"

namespace mug {

struct AdamWOptions {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

// Decoupled weight decay Adam. Parameters are leaf tensors updated in place.
class AdamW {
public:
    AdamW(std::vector<Tensor> params, AdamWOptions options);

    // Requires every parameter to carry a populated gradient.
    void step();
    void zero_grad();

    std::size_t step_count() const { return step_; }
    const AdamWOptions& options() const { return options_; }

private:
    std::vector<Tensor> params_;
    AdamWOptions options_;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
    std::size_t step_ = 0;
};

}  // namespace mug
