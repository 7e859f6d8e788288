#pragma once

// Central finite-difference gradient checking. The numeric side only ever
// evaluates the loss; it never touches the autodiff path it is checking.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mug/checkpoint.hpp"
#include "mug/tensor.hpp"

namespace mug {

struct GradCheckOptions {
    double step = 1e-5;
    // Denominator floor for the relative error, so entries whose true
    // gradient is ~0 are judged on absolute error instead.
    double denominator_floor = 1e-6;
    // 0 checks every entry; otherwise a seeded sample of this many per tensor.
    std::size_t max_entries_per_tensor = 0;
    std::uint64_t seed = 0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t entries_checked = 0;
    std::string worst_entry;
};

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::vector<NamedTensor> params,
                                const GradCheckOptions& options = {});

}  // namespace mug
