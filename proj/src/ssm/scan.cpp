#include <cmath>

#include "mug/ssm.hpp"

namespace mug::ssm {

namespace {

void check_shapes(const Tensor& x, const StepParams& s, const Tensor& a_log, const Tensor& d_skip) {
    if (x.rank() != 2) throw ShapeError("scan input must be [T,D_inner], got " + shape_string(x.shape()));
    const std::size_t T = x.dim(0), Di = x.dim(1);
    if (a_log.rank() != 2 || a_log.dim(0) != Di) throw ShapeError("a_log must be [D_inner,N]");
    const std::size_t N = a_log.dim(1);
    if (s.delta.shape() != Shape{T, Di}) throw ShapeError("delta must be [T,D_inner], got " + shape_string(s.delta.shape()));
    if (s.b.shape() != Shape{T, N}) throw ShapeError("B must be [T,N], got " + shape_string(s.b.shape()));
    if (s.c.shape() != Shape{T, N}) throw ShapeError("C must be [T,N], got " + shape_string(s.c.shape()));
    if (d_skip.shape() != Shape{Di}) throw ShapeError("d_skip must be [D_inner]");
}

void check_positive(std::span<const double> delta) {
    for (double d : delta) {
        if (!(d > 0.0)) throw ContractError("scan step size delta must be strictly positive");
    }
}

// In-place inclusive prefix scan of T rows of `width` independent chains
// under combine(). Rows are element pairs (a[t*width + j], b[t*width + j]).
void brent_kung(std::vector<double>& a, std::vector<double>& b, std::size_t T, std::size_t width) {
    auto fold = [&](std::size_t earlier, std::size_t later) {
        double* al = a.data() + later * width;
        double* bl = b.data() + later * width;
        const double* ae = a.data() + earlier * width;
        const double* be = b.data() + earlier * width;
        for (std::size_t j = 0; j < width; ++j) {
            bl[j] = al[j] * be[j] + bl[j];
            al[j] = ae[j] * al[j];
        }
    };
    std::size_t d = 1;
    for (; d < T; d *= 2) {
        for (std::size_t k = 2 * d - 1; k < T; k += 2 * d) fold(k - d, k);
    }
    for (d /= 4; d >= 1; d /= 2) {
        for (std::size_t k = 3 * d - 1; k < T; k += 2 * d) fold(k - d, k);
    }
}

}  // namespace

Discretized discretize(const Tensor& delta, const Tensor& a_log, const Tensor& b) {
    if (delta.rank() != 2 || a_log.rank() != 2 || b.rank() != 2 || delta.dim(1) != a_log.dim(0) ||
        b.dim(0) != delta.dim(0) || b.dim(1) != a_log.dim(1)) {
        throw ShapeError("discretize expects delta [T,D], a_log [D,N], B [T,N]");
    }
    check_positive(delta.data());
    const std::size_t T = delta.dim(0), Di = delta.dim(1), N = a_log.dim(1);
    const auto dv = delta.data();
    const auto av = a_log.data();
    const auto bv = b.data();
    std::vector<double> a_bar(T * Di * N), b_bar(T * Di * N);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < Di; ++i)
            for (std::size_t n = 0; n < N; ++n) {
                const std::size_t at = (t * Di + i) * N + n;
                const double dt = dv[t * Di + i];
                a_bar[at] = std::exp(dt * -std::exp(av[i * N + n]));
                b_bar[at] = dt * bv[t * N + n];
            }
    return {Tensor::from_vector({T, Di, N}, std::move(a_bar)), Tensor::from_vector({T, Di, N}, std::move(b_bar))};
}

Tensor selective_scan(const Tensor& x, const StepParams& steps, const Tensor& a_log, const Tensor& d_skip,
                      ScanKernel kernel) {
    check_shapes(x, steps, a_log, d_skip);
    check_positive(steps.delta.data());
    const std::size_t T = x.dim(0), Di = x.dim(1), N = a_log.dim(1), W = Di * N;
    const auto xv = x.data();
    const auto dv = steps.delta.data();
    const auto bv = steps.b.data();
    const auto cv = steps.c.data();
    const auto av = a_log.data();
    const auto sv = d_skip.data();

    std::vector<double> A(W);
    for (std::size_t j = 0; j < W; ++j) A[j] = -std::exp(av[j]);

    // a_bar and hidden states are kept for the backward pass.
    auto a_bar = std::make_shared<std::vector<double>>(T * W);
    auto h = std::make_shared<std::vector<double>>(T * W);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < Di; ++i) {
            const double dt = dv[t * Di + i];
            const double u = dt * xv[t * Di + i];
            for (std::size_t n = 0; n < N; ++n) {
                (*a_bar)[t * W + i * N + n] = std::exp(dt * A[i * N + n]);
                (*h)[t * W + i * N + n] = u * bv[t * N + n];  // B_bar * x
            }
        }
    if (kernel == ScanKernel::Sequential) {
        for (std::size_t t = 1; t < T; ++t)
            for (std::size_t j = 0; j < W; ++j) (*h)[t * W + j] += (*a_bar)[t * W + j] * (*h)[(t - 1) * W + j];
    } else {
        std::vector<double> a_acc = *a_bar;
        brent_kung(a_acc, *h, T, W);
    }

    std::vector<double> y(T * Di);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < Di; ++i) {
            double s = sv[i] * xv[t * Di + i];
            for (std::size_t n = 0; n < N; ++n) s += cv[t * N + n] * (*h)[t * W + i * N + n];
            y[t * Di + i] = s;
        }

    const Tensor delta = steps.delta, b = steps.b, c = steps.c;
    return make_op_result(
        {T, Di}, std::move(y), {x, delta, b, c, a_log, d_skip},
        [=](std::span<const double> gy) {
            const auto xv = x.data();
            const auto dv = delta.data();
            const auto bv = b.data();
            const auto cv = c.data();
            const auto sv = d_skip.data();
            auto gx = grad_accumulator(x);
            auto gdelta = grad_accumulator(delta);
            auto gb = grad_accumulator(b);
            auto gc = grad_accumulator(c);
            auto galog = grad_accumulator(a_log);
            auto gskip = grad_accumulator(d_skip);

            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t i = 0; i < Di; ++i) {
                    const double g = gy[t * Di + i];
                    if (!gskip.empty()) gskip[i] += g * xv[t * Di + i];
                    if (!gx.empty()) gx[t * Di + i] += g * sv[i];
                    if (!gc.empty())
                        for (std::size_t n = 0; n < N; ++n) gc[t * N + n] += g * (*h)[t * W + i * N + n];
                }

            // Adjoint of the state: gh[t] = gy[t] C[t] + a_bar[t+1] gh[t+1].
            std::vector<double> gh(T * W);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t i = 0; i < Di; ++i)
                    for (std::size_t n = 0; n < N; ++n) gh[t * W + i * N + n] = gy[t * Di + i] * cv[t * N + n];
            if (kernel == ScanKernel::Sequential) {
                for (std::size_t t = T - 1; t-- > 0;)
                    for (std::size_t j = 0; j < W; ++j) gh[t * W + j] += (*a_bar)[(t + 1) * W + j] * gh[(t + 1) * W + j];
            } else {
                // Same recurrence run forward in reversed time.
                std::vector<double> ra(T * W, 0.0), rb(T * W);
                for (std::size_t s = 0; s < T; ++s) {
                    const std::size_t t = T - 1 - s;
                    std::copy_n(gh.begin() + static_cast<std::ptrdiff_t>(t * W), W, rb.begin() + static_cast<std::ptrdiff_t>(s * W));
                    if (s > 0) std::copy_n(a_bar->begin() + static_cast<std::ptrdiff_t>((t + 1) * W), W, ra.begin() + static_cast<std::ptrdiff_t>(s * W));
                }
                brent_kung(ra, rb, T, W);
                for (std::size_t s = 0; s < T; ++s)
                    std::copy_n(rb.begin() + static_cast<std::ptrdiff_t>(s * W), W, gh.begin() + static_cast<std::ptrdiff_t>((T - 1 - s) * W));
            }

            std::vector<double> gA(W, 0.0);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t i = 0; i < Di; ++i) {
                    const double dt = dv[t * Di + i];
                    const double xi = xv[t * Di + i];
                    double gdt = 0.0, gxi = 0.0;
                    for (std::size_t n = 0; n < N; ++n) {
                        const std::size_t j = i * N + n;
                        const double ghv = gh[t * W + j];
                        const double abar = (*a_bar)[t * W + j];
                        const double hprev = t > 0 ? (*h)[(t - 1) * W + j] : 0.0;
                        const double g_abar = ghv * hprev;
                        const double g_bbar = ghv * xi;
                        gxi += ghv * dt * bv[t * N + n];
                        gdt += g_abar * abar * A[j] + g_bbar * bv[t * N + n];
                        gA[j] += g_abar * abar * dt;
                        if (!gb.empty()) gb[t * N + n] += g_bbar * dt;
                    }
                    if (!gx.empty()) gx[t * Di + i] += gxi;
                    if (!gdelta.empty()) gdelta[t * Di + i] += gdt;
                }
            if (!galog.empty())
                for (std::size_t j = 0; j < W; ++j) galog[j] += gA[j] * A[j];
        });
}

std::shared_ptr<SharedMatrixHandle> SharedMatrixHandle::create(ParamStore& store, const std::string& name,
                                                               std::size_t d_inner, std::size_t state) {
    auto handle = std::make_shared<SharedMatrixHandle>();
    handle->b_shared =
        store.create(name + ".b_shared", {d_inner, state}, Init::gaussian(1.0 / std::sqrt(static_cast<double>(d_inner))));
    handle->alpha_audio = store.create(name + ".alpha_audio", {1}, Init::zeros());
    handle->alpha_visual = store.create(name + ".alpha_visual", {1}, Init::zeros());
    return handle;
}

SsmParams::SsmParams(ParamStore& store, const std::string& name, std::size_t d_inner, std::size_t state,
                     std::size_t dt_rank, std::shared_ptr<SharedMatrixHandle> shared, Modality modality)
    : shared_(std::move(shared)), modality_(modality) {
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d_inner));
    a_log_ = store.create(name + ".a_log", {d_inner, state}, Init::custom([state](std::size_t count, std::mt19937_64&) {
                              std::vector<double> v(count);
                              for (std::size_t j = 0; j < count; ++j) v[j] = std::log(static_cast<double>(j % state + 1));
                              return v;
                          }));
    b_proj_ = store.create(name + ".b_proj", {d_inner, state}, Init::gaussian(proj_std));
    c_proj_ = store.create(name + ".c_proj", {d_inner, state}, Init::gaussian(proj_std));
    dt_down_ = store.create(name + ".dt_down", {d_inner, dt_rank}, Init::gaussian(proj_std));
    dt_up_ = store.create(name + ".dt_up", {dt_rank, d_inner}, Init::gaussian(1.0 / std::sqrt(static_cast<double>(dt_rank))));
    // Step sizes start log-uniform in [0.001, 0.1]; the bias is their inverse softplus.
    dt_bias_ = store.create(name + ".dt_bias", {d_inner}, Init::custom([](std::size_t count, std::mt19937_64& rng) {
                                std::uniform_real_distribution<double> u(std::log(1e-3), std::log(1e-1));
                                std::vector<double> v(count);
                                for (double& b : v) {
                                    const double dt = std::exp(u(rng));
                                    b = dt + std::log(-std::expm1(-dt));
                                }
                                return v;
                            }));
    d_skip_ = store.create(name + ".d_skip", {d_inner}, Init::constant(1.0));
    if (shared_ && (shared_->b_shared.shape() != Shape{d_inner, state})) {
        throw ShapeError("shared B projection does not match [D_inner,N] of '" + name + "'");
    }
}

Tensor SsmParams::effective_b() const {
    if (!shared_ || !shared_->enabled) return b_proj_;
    const Tensor mix = sigmoid(shared_->alpha(modality_));
    return add(b_proj_, mul(mix, sub(shared_->b_shared, b_proj_)));
}

StepParams SsmParams::project(const Tensor& x) const {
    StepParams s;
    s.delta = softplus(add(matmul(matmul(x, dt_down_), dt_up_), dt_bias_));
    s.b = matmul(x, effective_b());
    s.c = matmul(x, c_proj_);
    return s;
}

Tensor selective_scan_sequential(const Tensor& x, const SsmParams& params) {
    return selective_scan(x, params.project(x), params.a_log(), params.d_skip(), ScanKernel::Sequential);
}

Tensor selective_scan_parallel(const Tensor& x, const SsmParams& params) {
    return selective_scan(x, params.project(x), params.a_log(), params.d_skip(), ScanKernel::Parallel);
}

Tensor selective_scan_reversed(const Tensor& x, const SsmParams& params, ScanKernel kernel) {
    const Tensor xr = reverse(x, 0);
    return reverse(selective_scan(xr, params.project(xr), params.a_log(), params.d_skip(), kernel), 0);
}

Tensor selective_scan_dynamic(const Tensor& x, const SsmParams& params, const Tensor& start_logits, ScanKernel kernel) {
    const std::size_t T = x.dim(0);
    if (start_logits.shape() != Shape{T}) {
        throw ShapeError("start_logits must be [" + std::to_string(T) + "], got " + shape_string(start_logits.shape()));
    }
    const Tensor p = softmax(start_logits, 0);
    // Projections are row-wise, so rotating them equals projecting the rotated input.
    const StepParams steps = params.project(x);
    Tensor out;
    for (std::size_t s = 0; s < T; ++s) {
        const auto off = static_cast<std::ptrdiff_t>(s);
        StepParams rs{rotate(steps.delta, 0, off), rotate(steps.b, 0, off), rotate(steps.c, 0, off)};
        Tensor y = selective_scan(rotate(x, 0, off), rs, params.a_log(), params.d_skip(), kernel);
        Tensor term = mul(rotate(y, 0, -off), slice(p, 0, s, 1));
        out = out.defined() ? add(out, term) : term;
    }
    return out;
}

}  // namespace mug::ssm
