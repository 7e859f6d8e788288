#include "mug/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mug {

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::vector<NamedTensor> params,
                                const GradCheckOptions& options) {
    for (auto& p : params) p.tensor.zero_grad();
    loss().backward();
    std::vector<std::vector<double>> analytic;
    for (auto& p : params) analytic.push_back(p.tensor.grad_or_zeros());
    for (auto& p : params) p.tensor.zero_grad();

    GradCheckResult result;
    std::mt19937_64 rng(options.seed);
    NoGradGuard no_grad;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& t = params[pi].tensor;
        std::vector<std::size_t> entries(t.numel());
        std::iota(entries.begin(), entries.end(), 0);
        if (options.max_entries_per_tensor != 0 && entries.size() > options.max_entries_per_tensor) {
            std::shuffle(entries.begin(), entries.end(), rng);
            entries.resize(options.max_entries_per_tensor);
            std::sort(entries.begin(), entries.end());
        }
        for (std::size_t j : entries) {
            auto w = t.mutable_data();
            const double original = w[j];
            w[j] = original + options.step;
            const double up = loss().item();
            w[j] = original - options.step;
            const double down = loss().item();
            w[j] = original;
            const double numeric = (up - down) / (2.0 * options.step);
            const double a = analytic[pi][j];
            const double abs_err = std::abs(a - numeric);
            const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
            result.max_abs_error = std::max(result.max_abs_error, abs_err);
            if (rel_err > result.max_rel_error || result.entries_checked == 0) {
                result.max_rel_error = rel_err;
                result.worst_entry = params[pi].name + "[" + std::to_string(j) + "] analytic=" +
                                     std::to_string(a) + " numeric=" + std::to_string(numeric);
            }
            ++result.entries_checked;
        }
    }
    return result;
}

}  // namespace mug
