#include <algorithm>
#include <cmath>
#include <numeric>

#include "mug/tensor.hpp"

namespace mug {

namespace {

// Index maps from each output element back to each operand. Empty maps mean
// the operand already has the output shape.
struct BroadcastMap {
    Shape out;
    std::vector<std::size_t> ia;
    std::vector<std::size_t> ib;
};

BroadcastMap broadcast_map(const Shape& a, const Shape& b) {
    BroadcastMap m;
    if (a == b) {
        m.out = a;
        return m;
    }
    const std::size_t rank = std::max(a.size(), b.size());
    Shape pa(rank, 1), pb(rank, 1);
    std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
    std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
    m.out.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
            throw ShapeError("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
        }
        m.out[i] = std::max(pa[i], pb[i]);
    }
    std::vector<std::size_t> sa(rank, 0), sb(rank, 0);
    std::size_t acc_a = 1, acc_b = 1;
    for (std::size_t i = rank; i-- > 0;) {
        sa[i] = pa[i] == 1 ? 0 : acc_a;
        sb[i] = pb[i] == 1 ? 0 : acc_b;
        acc_a *= pa[i];
        acc_b *= pb[i];
    }
    const std::size_t n = shape_numel(m.out);
    m.ia.resize(n);
    m.ib.resize(n);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t off_a = 0, off_b = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        m.ia[flat] = off_a;
        m.ib[flat] = off_b;
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            off_a += sa[d];
            off_b += sb[d];
            if (idx[d] < m.out[d]) break;
            off_a -= sa[d] * idx[d];
            off_b -= sb[d] * idx[d];
            idx[d] = 0;
        }
    }
    return m;
}

template <class F, class DA, class DB>
Tensor binary_op(const Tensor& a, const Tensor& b, F f, DA da, DB db) {
    auto map = std::make_shared<BroadcastMap>(broadcast_map(a.shape(), b.shape()));
    const auto av = a.data();
    const auto bv = b.data();
    const std::size_t n = shape_numel(map->out);
    std::vector<double> out(n);
    if (map->ia.empty()) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i], bv[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(av[map->ia[i]], bv[map->ib[i]]);
    }
    Shape shape = map->out;
    return make_op_result(std::move(shape), std::move(out), {a, b}, [a, b, map, da, db](std::span<const double> g) {
        const auto av = a.data();
        const auto bv = b.data();
        auto ga = grad_accumulator(a);
        auto gb = grad_accumulator(b);
        const bool identity = map->ia.empty();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::size_t ia = identity ? i : map->ia[i];
            const std::size_t ib = identity ? i : map->ib[i];
            if (!ga.empty()) ga[ia] += g[i] * da(av[ia], bv[ib]);
            if (!gb.empty()) gb[ib] += g[i] * db(av[ia], bv[ib]);
        }
    });
}

// `df(x, y)` is dy/dx given input x and output y.
template <class F, class DF>
Tensor unary_op(const Tensor& x, F f, DF df) {
    const auto xv = x.data();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    auto y = std::make_shared<std::vector<double>>(out);
    return make_op_result(x.shape(), std::move(out), {x}, [x, y, df](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        if (gx.empty()) return;
        const auto xv = x.data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], (*y)[i]);
    });
}

struct AxisSplit {
    std::size_t outer, n, inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " invalid for shape " + shape_string(s));
    }
    AxisSplit r{1, s[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

Shape reduced_shape(Shape s, std::size_t axis) {
    s[axis] = 1;
    return s;
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// Gathers along one axis: out[o, i, in] = x[o, index[i], in]; the gradient is
// the matching scatter.
Tensor gather_axis(const Tensor& x, std::size_t axis, std::vector<std::size_t> index) {
    const AxisSplit sp = split_axis(x.shape(), axis);
    Shape shape = x.shape();
    shape[axis] = index.size();
    const auto xv = x.data();
    const std::size_t m = index.size();
    std::vector<double> out(sp.outer * m * sp.inner);
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < m; ++i)
            std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>((o * sp.n + index[i]) * sp.inner), sp.inner,
                        out.begin() + static_cast<std::ptrdiff_t>((o * m + i) * sp.inner));
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(index));
    return make_op_result(std::move(shape), std::move(out), {x}, [x, sp, idx](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        if (gx.empty()) return;
        const std::size_t m = idx->size();
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < sp.inner; ++k)
                    gx[(o * sp.n + (*idx)[i]) * sp.inner + k] += g[(o * m + i) * sp.inner + k];
    });
}

}  // namespace

// --- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
    return unary_op(
        x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
    return unary_op(
        x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor sigmoid(const Tensor& x) {
    return unary_op(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v * stable_sigmoid(v); },
        [](double v, double) {
            const double s = stable_sigmoid(v);
            return s * (1.0 + v * (1.0 - s));
        });
}

Tensor softplus(const Tensor& x) {
    return unary_op(x, stable_softplus, [](double v, double) { return stable_sigmoid(v); });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor tanh(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) throw ContractError("clamp bounds are inverted");
    return unary_op(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

// --- reductions ------------------------------------------------------------

Tensor pool(const Tensor& x, std::size_t axis, PoolKind kind) {
    const AxisSplit sp = split_axis(x.shape(), axis);
    const auto xv = x.data();
    std::vector<double> out(sp.outer * sp.inner);
    if (kind == PoolKind::Avg) {
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t i = 0; i < sp.n; ++i)
                for (std::size_t k = 0; k < sp.inner; ++k) out[o * sp.inner + k] += xv[(o * sp.n + i) * sp.inner + k];
        for (double& v : out) v /= static_cast<double>(sp.n);
        return make_op_result(reduced_shape(x.shape(), axis), std::move(out), {x}, [x, sp](std::span<const double> g) {
            auto gx = grad_accumulator(x);
            if (gx.empty()) return;
            const double w = 1.0 / static_cast<double>(sp.n);
            for (std::size_t o = 0; o < sp.outer; ++o)
                for (std::size_t i = 0; i < sp.n; ++i)
                    for (std::size_t k = 0; k < sp.inner; ++k) gx[(o * sp.n + i) * sp.inner + k] += g[o * sp.inner + k] * w;
        });
    }
    auto argmax = std::make_shared<std::vector<std::size_t>>(sp.outer * sp.inner);
    for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t k = 0; k < sp.inner; ++k) {
            std::size_t best = o * sp.n * sp.inner + k;
            for (std::size_t i = 1; i < sp.n; ++i) {
                const std::size_t at = (o * sp.n + i) * sp.inner + k;
                if (xv[at] > xv[best]) best = at;
            }
            (*argmax)[o * sp.inner + k] = best;
            out[o * sp.inner + k] = xv[best];
        }
    }
    return make_op_result(reduced_shape(x.shape(), axis), std::move(out), {x}, [x, argmax](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        if (gx.empty()) return;
        for (std::size_t j = 0; j < g.size(); ++j) gx[(*argmax)[j]] += g[j];
    });
}

Tensor sum(const Tensor& x, std::size_t axis) {
    const std::size_t n = x.dim(axis);
    return scale(pool(x, axis, PoolKind::Avg), static_cast<double>(n));
}

Tensor mean(const Tensor& x, std::size_t axis) { return pool(x, axis, PoolKind::Avg); }

Tensor sum_all(const Tensor& x) {
    const auto xv = x.data();
    double s = 0.0;
    for (double v : xv) s += v;
    return make_op_result({1}, {s}, {x}, [x](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        for (double& v : gx) v += g[0];
    });
}

Tensor mean_all(const Tensor& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.numel())); }

Tensor softmax(const Tensor& x, std::size_t axis) {
    const AxisSplit sp = split_axis(x.shape(), axis);
    const auto xv = x.data();
    std::vector<double> out(xv.size());
    for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t k = 0; k < sp.inner; ++k) {
            const auto at = [&](std::size_t i) { return (o * sp.n + i) * sp.inner + k; };
            double mx = xv[at(0)];
            for (std::size_t i = 1; i < sp.n; ++i) mx = std::max(mx, xv[at(i)]);
            double z = 0.0;
            for (std::size_t i = 0; i < sp.n; ++i) {
                out[at(i)] = std::exp(xv[at(i)] - mx);
                z += out[at(i)];
            }
            for (std::size_t i = 0; i < sp.n; ++i) out[at(i)] /= z;
        }
    }
    auto y = std::make_shared<std::vector<double>>(out);
    return make_op_result(x.shape(), std::move(out), {x}, [x, y, sp](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        if (gx.empty()) return;
        for (std::size_t o = 0; o < sp.outer; ++o) {
            for (std::size_t k = 0; k < sp.inner; ++k) {
                const auto at = [&](std::size_t i) { return (o * sp.n + i) * sp.inner + k; };
                double dot = 0.0;
                for (std::size_t i = 0; i < sp.n; ++i) dot += g[at(i)] * (*y)[at(i)];
                for (std::size_t i = 0; i < sp.n; ++i) gx[at(i)] += (*y)[at(i)] * (g[at(i)] - dot);
            }
        }
    });
}

// --- linear algebra and layout ---------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul expects [m,k] x [k,n], got " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = av[i * k + p];
            const double* brow = bv.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
        }
    }
    return make_op_result({m, n}, std::move(out), {a, b}, [a, b, m, k, n](std::span<const double> g) {
        const auto av = a.data();
        const auto bv = b.data();
        auto ga = grad_accumulator(a);
        auto gb = grad_accumulator(b);
        if (!ga.empty()) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
                    ga[i * k + p] += s;
                }
        }
        if (!gb.empty()) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double s = av[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * g[i * n + j];
                }
        }
    });
}

Tensor transpose(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_string(x.shape()));
    const std::size_t r = x.dim(0), c = x.dim(1);
    const auto xv = x.data();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
    return make_op_result({c, r}, std::move(out), {x}, [x, r, c](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        if (gx.empty()) return;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw ShapeError("cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
    }
    return make_op_result(std::move(shape), x.to_vector(), {x}, [x](std::span<const double> g) {
        auto gx = grad_accumulator(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    Shape shape = parts.front().shape();
    if (axis >= shape.size()) throw ShapeError("concat axis out of range for " + shape_string(shape));
    std::vector<std::size_t> extents;
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == shape.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == shape[d];
        if (!ok) throw ShapeError("concat shape mismatch: " + shape_string(s) + " vs " + shape_string(shape));
        extents.push_back(s[axis]);
        total += s[axis];
    }
    shape[axis] = total;
    const AxisSplit sp = split_axis(shape, axis);
    std::vector<double> out(shape_numel(shape));
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const auto pv = parts[pi].data();
        const std::size_t block = extents[pi] * sp.inner;
        for (std::size_t o = 0; o < sp.outer; ++o)
            std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                        out.begin() + static_cast<std::ptrdiff_t>((o * sp.n + offset) * sp.inner));
        offset += extents[pi];
    }
    return make_op_result(std::move(shape), std::move(out), parts, [parts, extents, sp](std::span<const double> g) {
        std::size_t offset = 0;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
            auto gp = grad_accumulator(parts[pi]);
            const std::size_t block = extents[pi] * sp.inner;
            if (!gp.empty()) {
                for (std::size_t o = 0; o < sp.outer; ++o)
                    for (std::size_t j = 0; j < block; ++j) gp[o * block + j] += g[(o * sp.n + offset) * sp.inner + j];
            }
            offset += extents[pi];
        }
    });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
    const std::size_t n = x.dim(axis);
    if (length == 0 || start + length > n) {
        throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") out of range for extent " + std::to_string(n));
    }
    std::vector<std::size_t> index(length);
    std::iota(index.begin(), index.end(), start);
    return gather_axis(x, axis, std::move(index));
}

Tensor reverse(const Tensor& x, std::size_t axis) {
    const std::size_t n = x.dim(axis);
    std::vector<std::size_t> index(n);
    for (std::size_t i = 0; i < n; ++i) index[i] = n - 1 - i;
    return gather_axis(x, axis, std::move(index));
}

Tensor rotate(const Tensor& x, std::size_t axis, std::ptrdiff_t offset) {
    const auto n = static_cast<std::ptrdiff_t>(x.dim(axis));
    const std::ptrdiff_t s = ((offset % n) + n) % n;
    std::vector<std::size_t> index(static_cast<std::size_t>(n));
    for (std::ptrdiff_t i = 0; i < n; ++i) index[static_cast<std::size_t>(i)] = static_cast<std::size_t>((i + s) % n);
    return gather_axis(x, axis, std::move(index));
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 2) throw ShapeError("conv1d_depthwise expects x of shape [T,D], got " + shape_string(x.shape()));
    const std::size_t T = x.dim(0), D = x.dim(1);
    if (weight.rank() != 2 || weight.dim(0) != D) {
        throw ShapeError("conv1d_depthwise weight must be [D,k], got " + shape_string(weight.shape()));
    }
    if (bias.shape() != Shape{D}) throw ShapeError("conv1d_depthwise bias must be [D]");
    const std::size_t k = weight.dim(1);
    const auto xv = x.data();
    const auto wv = weight.data();
    const auto bv = bias.data();
    std::vector<double> out(T * D);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            double s = bv[d];
            for (std::size_t j = 0; j < k; ++j) {
                // Input step t - (k-1) + j, skipped when it falls in the left padding.
                if (t + j + 1 < k) continue;
                s += wv[d * k + j] * xv[(t + j + 1 - k) * D + d];
            }
            out[t * D + d] = s;
        }
    }
    return make_op_result({T, D}, std::move(out), {x, weight, bias}, [x, weight, bias, T, D, k](std::span<const double> g) {
        const auto xv = x.data();
        const auto wv = weight.data();
        auto gx = grad_accumulator(x);
        auto gw = grad_accumulator(weight);
        auto gb = grad_accumulator(bias);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t d = 0; d < D; ++d) {
                const double go = g[t * D + d];
                if (!gb.empty()) gb[d] += go;
                for (std::size_t j = 0; j < k; ++j) {
                    if (t + j + 1 < k) continue;
                    const std::size_t src = (t + j + 1 - k) * D + d;
                    if (!gw.empty()) gw[d * k + j] += go * xv[src];
                    if (!gx.empty()) gx[src] += go * wv[d * k + j];
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps) {
    const std::size_t D = x.shape().back();
    if (gain.shape() != Shape{D} || shift.shape() != Shape{D}) {
        throw ShapeError("layer_norm gain/shift must be [" + std::to_string(D) + "]");
    }
    const std::size_t rows = x.numel() / D;
    const auto xv = x.data();
    const auto gv = gain.data();
    const auto sv = shift.data();
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    auto rstd = std::make_shared<std::vector<double>>(rows);
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        double mu = 0.0;
        for (std::size_t d = 0; d < D; ++d) mu += xv[r * D + d];
        mu /= static_cast<double>(D);
        double var = 0.0;
        for (std::size_t d = 0; d < D; ++d) var += (xv[r * D + d] - mu) * (xv[r * D + d] - mu);
        var /= static_cast<double>(D);
        const double rs = 1.0 / std::sqrt(var + eps);
        (*rstd)[r] = rs;
        for (std::size_t d = 0; d < D; ++d) {
            const double h = (xv[r * D + d] - mu) * rs;
            (*xhat)[r * D + d] = h;
            out[r * D + d] = h * gv[d] + sv[d];
        }
    }
    return make_op_result(x.shape(), std::move(out), {x, gain, shift}, [x, gain, shift, xhat, rstd, rows, D](std::span<const double> g) {
        const auto gv = gain.data();
        auto gx = grad_accumulator(x);
        auto gg = grad_accumulator(gain);
        auto gs = grad_accumulator(shift);
        for (std::size_t r = 0; r < rows; ++r) {
            double mean_gh = 0.0, mean_ghh = 0.0;
            for (std::size_t d = 0; d < D; ++d) {
                const double go = g[r * D + d];
                const double h = (*xhat)[r * D + d];
                if (!gg.empty()) gg[d] += go * h;
                if (!gs.empty()) gs[d] += go;
                mean_gh += go * gv[d];
                mean_ghh += go * gv[d] * h;
            }
            if (gx.empty()) continue;
            mean_gh /= static_cast<double>(D);
            mean_ghh /= static_cast<double>(D);
            for (std::size_t d = 0; d < D; ++d) {
                const double gh = g[r * D + d] * gv[d];
                gx[r * D + d] += (*rstd)[r] * (gh - mean_gh - (*xhat)[r * D + d] * mean_ghh);
            }
        }
    });
}

}  // namespace mug
