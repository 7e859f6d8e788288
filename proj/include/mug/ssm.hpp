#pragma once

// Selective state-space scans and the Mamba-style block built on them.
//
// Per channel i and state n, with A = -exp(a_log) (strictly negative):
//   A_bar[t,i,n] = exp(delta[t,i] * A[i,n])        zero-order hold
//   B_bar[t,i,n] = delta[t,i] * B[t,n]             Euler
//   h[t,i,n]     = A_bar[t,i,n] * h[t-1,i,n] + B_bar[t,i,n] * x[t,i],  h[-1] = 0
//   y[t,i]       = sum_n C[t,n] * h[t,i,n] + d_skip[i] * x[t,i]

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mug/modality.hpp"
#include "mug/nn.hpp"
#include "mug/tensor.hpp"

namespace mug::ssm {

enum class ScanKernel { Sequential, Parallel };

// Discretized coefficients, both laid out [T, D_inner, N].
struct Discretized {
    Tensor a_bar;
    Tensor b_bar;
};

// delta: [T,D_inner] (> 0), a_log: [D_inner,N], b: [T,N]. Not differentiable;
// the scan op fuses the same arithmetic into its own forward/backward.
Discretized discretize(const Tensor& delta, const Tensor& a_log, const Tensor& b);

// One element of the linear recurrence h' = a*h + b, composed as
// combine(earlier, later) = (earlier.a * later.a, later.a * earlier.b + later.b).
struct ScanElement {
    double a;
    double b;
};

constexpr ScanElement combine(ScanElement earlier, ScanElement later) {
    return {earlier.a * later.a, later.a * earlier.b + later.b};
}

// Input-dependent per-step coefficients: delta [T,D_inner], b and c [T,N].
struct StepParams {
    Tensor delta;
    Tensor b;
    Tensor c;
};

// Differentiable selective scan. Both kernels compute the same recurrence; the
// parallel one evaluates it (and its adjoint) with a Brent-Kung prefix scan
// over time, vectorized across all D_inner*N chains.
Tensor selective_scan(const Tensor& x, const StepParams& steps, const Tensor& a_log, const Tensor& d_skip,
                      ScanKernel kernel = ScanKernel::Sequential);

// A B-projection shared between the audio and visual scans of one direction.
// Each modality mixes it with its private projection:
//   B_m = (1 - sigmoid(alpha_m)) * B_private + sigmoid(alpha_m) * B_shared
// With `enabled` false the shared matrix is bypassed entirely.
struct SharedMatrixHandle {
    Tensor b_shared;  // [D_inner, N]
    Tensor alpha_audio;
    Tensor alpha_visual;
    bool enabled = true;

    static std::shared_ptr<SharedMatrixHandle> create(ParamStore& store, const std::string& name,
                                                      std::size_t d_inner, std::size_t state);
    const Tensor& alpha(Modality m) const { return m == Modality::Audio ? alpha_audio : alpha_visual; }
};

class SsmParams {
public:
    SsmParams() = default;
    SsmParams(ParamStore& store, const std::string& name, std::size_t d_inner, std::size_t state,
              std::size_t dt_rank, std::shared_ptr<SharedMatrixHandle> shared = nullptr,
              Modality modality = Modality::Audio);

    // delta = softplus(x W_down W_up + dt_bias), B = x B_eff, C = x W_c.
    StepParams project(const Tensor& x) const;
    Tensor effective_b() const;

    const Tensor& a_log() const { return a_log_; }
    const Tensor& d_skip() const { return d_skip_; }
    const Tensor& b_private() const { return b_proj_; }
    std::size_t d_inner() const { return a_log_.dim(0); }
    std::size_t state() const { return a_log_.dim(1); }

private:
    Tensor a_log_;
    Tensor b_proj_;
    Tensor c_proj_;
    Tensor dt_down_;
    Tensor dt_up_;
    Tensor dt_bias_;
    Tensor d_skip_;
    std::shared_ptr<SharedMatrixHandle> shared_;
    Modality modality_ = Modality::Audio;
};

Tensor selective_scan_sequential(const Tensor& x, const SsmParams& params);
Tensor selective_scan_parallel(const Tensor& x, const SsmParams& params);

// Scan over the reversed segment order, re-reversed to the original
// orientation. Per-step coefficients come from the reversed input.
Tensor selective_scan_reversed(const Tensor& x, const SsmParams& params,
                               ScanKernel kernel = ScanKernel::Sequential);

// Soft mixture over all T cyclic start positions:
//   p = softmax(start_logits);  y = sum_s p_s * rotate(scan(rotate(x, s)), -s)
Tensor selective_scan_dynamic(const Tensor& x, const SsmParams& params, const Tensor& start_logits,
                              ScanKernel kernel = ScanKernel::Sequential);

enum class ScanDirection { Forward, Backward, Dynamic };

struct MambaConfig {
    std::size_t d_model = 64;
    std::size_t expand = 2;
    std::size_t state = 16;
    std::size_t conv_kernel = 4;
    std::size_t dt_rank = 0;  // 0: ceil(d_model / 16)
    ScanKernel kernel = ScanKernel::Sequential;

    std::size_t d_inner() const { return expand * d_model; }
    std::size_t resolved_dt_rank() const { return dt_rank != 0 ? dt_rank : (d_model + 15) / 16; }
};

// Pre-norm residual block:
//   u, z = split(in_proj(layer_norm(x)))
//   branch_k = scan_k(silu(conv_k(u)))       one per configured direction
//   y = x + out_proj(sum_k branch_k * silu(z))
// With the single Forward direction this is the standard Mamba block. The
// Backward branch convolves and scans the time-reversed sequence; the Dynamic
// branch scores each step with a linear head to get its start logits.
class MambaBlock {
public:
    struct Branch {
        ScanDirection direction;
        std::shared_ptr<SharedMatrixHandle> shared;  // may be null
    };

    MambaBlock() = default;
    MambaBlock(ParamStore& store, const std::string& name, const MambaConfig& config,
               std::vector<Branch> branches = {{ScanDirection::Forward, nullptr}},
               Modality modality = Modality::Audio);

    Tensor forward(const Tensor& x) const;
    const MambaConfig& config() const { return config_; }

private:
    struct BranchParams {
        ScanDirection direction;
        Tensor conv_weight;
        Tensor conv_bias;
        SsmParams ssm;
        Linear start_score;  // Dynamic only
    };

    MambaConfig config_;
    LayerNorm norm_;
    Linear in_proj_;
    Linear out_proj_;
    std::vector<BranchParams> branches_;
};

}  // namespace mug::ssm
