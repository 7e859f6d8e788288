#include <cmath>

#include "mug/ssm.hpp"

namespace mug::ssm {

namespace {

const char* direction_name(ScanDirection d) {
    switch (d) {
        case ScanDirection::Forward: return "forward";
        case ScanDirection::Backward: return "backward";
        case ScanDirection::Dynamic: return "dynamic";
    }
    return "?";
}

}  // namespace

MambaBlock::MambaBlock(ParamStore& store, const std::string& name, const MambaConfig& config,
                       std::vector<Branch> branches, Modality modality)
    : config_(config) {
    if (config.conv_kernel < 1) throw ConfigError("conv kernel size must be >= 1");
    if (config.d_model == 0 || config.expand == 0 || config.state == 0) {
        throw ConfigError("mamba block dimensions must be positive");
    }
    if (branches.empty()) throw ConfigError("mamba block needs at least one scan branch");
    const std::size_t Di = config.d_inner();
    const std::size_t k = config.conv_kernel;
    norm_ = LayerNorm(store, name + ".norm", config.d_model);
    in_proj_ = Linear(store, name + ".in_proj", config.d_model, 2 * Di);
    out_proj_ = Linear(store, name + ".out_proj", Di, config.d_model);
    for (const Branch& b : branches) {
        const std::string prefix = name + "." + direction_name(b.direction);
        BranchParams p;
        p.direction = b.direction;
        p.conv_weight = store.create(prefix + ".conv.weight", {Di, k}, Init::gaussian(1.0 / std::sqrt(static_cast<double>(k))));
        p.conv_bias = store.create(prefix + ".conv.bias", {Di}, Init::zeros());
        p.ssm = SsmParams(store, prefix + ".ssm", Di, config.state, config.resolved_dt_rank(), b.shared, modality);
        if (b.direction == ScanDirection::Dynamic) p.start_score = Linear(store, prefix + ".start_score", Di, 1);
        branches_.push_back(std::move(p));
    }
}

Tensor MambaBlock::forward(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != config_.d_model) {
        throw ShapeError("mamba block expects [T," + std::to_string(config_.d_model) + "], got " + shape_string(x.shape()));
    }
    const std::size_t T = x.dim(0);
    const std::size_t Di = config_.d_inner();
    const Tensor proj = in_proj_(norm_(x));
    const Tensor u = slice(proj, 1, 0, Di);
    const Tensor gate = silu(slice(proj, 1, Di, Di));

    Tensor mixed;
    for (const BranchParams& b : branches_) {
        Tensor y;
        switch (b.direction) {
            case ScanDirection::Forward: {
                const Tensor v = silu(conv1d_depthwise(u, b.conv_weight, b.conv_bias));
                y = selective_scan(v, b.ssm.project(v), b.ssm.a_log(), b.ssm.d_skip(), config_.kernel);
                break;
            }
            case ScanDirection::Backward: {
                // Convolve in reversed time too, so the branch is causal in its own scan order.
                const Tensor v = reverse(silu(conv1d_depthwise(reverse(u, 0), b.conv_weight, b.conv_bias)), 0);
                y = selective_scan_reversed(v, b.ssm, config_.kernel);
                break;
            }
            case ScanDirection::Dynamic: {
                const Tensor v = silu(conv1d_depthwise(u, b.conv_weight, b.conv_bias));
                const Tensor logits = reshape(b.start_score(v), {T});
                y = selective_scan_dynamic(v, b.ssm, logits, config_.kernel);
                break;
            }
        }
        mixed = mixed.defined() ? add(mixed, y) : y;
    }
    return add(x, out_proj_(mul(mixed, gate)));
}

}  // namespace mug::ssm
