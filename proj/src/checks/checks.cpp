#include "mug/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "mug/gradcheck.hpp"
#include "mug/model.hpp"
#include "mug/ssm.hpp"

namespace mug::checks {

using namespace mug::ssm;

namespace {

Tensor uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = u(rng);
    return Tensor::from_vector(std::move(shape), std::move(v));
}

Tensor param(Shape shape, std::uint64_t seed, double stddev = 1.0) {
    Tensor t = Tensor::seeded_gaussian(std::move(shape), seed, stddev);
    t.set_requires_grad(true);
    return t;
}

Tensor positive_param(Shape shape, std::mt19937_64& rng, double lo, double hi) {
    Tensor t = uniform(std::move(shape), rng, lo, hi);
    t.set_requires_grad(true);
    return t;
}

Tensor probe_loss(const Tensor& y, std::uint64_t seed) { return sum_all(mul(y, Tensor::seeded_gaussian(y.shape(), seed))); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::string dims(std::size_t T, std::size_t D, std::size_t N) {
    return "T=" + std::to_string(T) + " D=" + std::to_string(D) + " N=" + std::to_string(N);
}

model::ModelConfig tiny_model(std::uint64_t seed) {
    model::ModelConfig c;
    c.segments = 4;
    c.d_model = 8;
    c.classes = 3;
    c.state = 4;
    c.text_dim = 6;
    c.audio_dim = 5;
    c.visual_dim = 7;
    c.seed = seed;
    return c;
}

data::VideoRecord random_record(const model::ModelConfig& c, std::uint64_t seed) {
    data::VideoRecord r;
    r.id = "probe" + std::to_string(seed);
    r.audio = Tensor::seeded_gaussian({c.segments, c.audio_dim}, seed);
    r.visual = Tensor::seeded_gaussian({c.segments, c.visual_dim}, seed + 1);
    r.pseudo_a = data::LabelMatrix(c.segments, c.classes);
    r.pseudo_v = data::LabelMatrix(c.segments, c.classes);
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < c.segments; ++t)
        for (std::size_t k = 0; k < c.classes; ++k) {
            if (rng() % 3 == 0) r.pseudo_a.set(t, k, true);
            if (rng() % 3 == 0) r.pseudo_v.set(t, k, true);
        }
    r.pseudo_v.set_null(c.segments - 1, true);
    r.video_label.assign(c.classes, 0);
    const auto a = r.pseudo_a.column_any(), v = r.pseudo_v.column_any();
    for (std::size_t k = 0; k < c.classes; ++k) r.video_label[k] = a[k] | v[k];
    return r;
}

}  // namespace

bool all_pass(const std::vector<CheckOutcome>& outcomes) {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const CheckOutcome& o) { return o.pass(); });
}

double worst_value(const std::vector<CheckOutcome>& outcomes) {
    double m = 0.0;
    for (const auto& o : outcomes) m = std::max(m, o.value);
    return m;
}

ScanOracleReport scan_oracle_suite(std::size_t cases, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_t(1, 64), pick_dn(1, 16);
    ScanOracleReport report;
    for (std::size_t k = 0; k < cases; ++k) {
        const std::size_t T = pick_t(rng), D = pick_dn(rng), N = pick_dn(rng);
        const std::uint64_t s = rng();
        const Tensor x = Tensor::seeded_gaussian({T, D}, s);
        const StepParams steps{uniform({T, D}, rng, 0.01, 0.6), Tensor::seeded_gaussian({T, N}, s + 1),
                               Tensor::seeded_gaussian({T, N}, s + 2)};
        const Tensor a_log = uniform({D, N}, rng, -1.0, 1.5);
        const Tensor d_skip = Tensor::seeded_gaussian({D}, s + 3);
        const Tensor seq = selective_scan(x, steps, a_log, d_skip, ScanKernel::Sequential);
        const Tensor par = selective_scan(x, steps, a_log, d_skip, ScanKernel::Parallel);
        const double dev = max_abs_diff(seq.data(), par.data());
        if (dev > report.max_abs_deviation || report.worst_case.empty()) {
            report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
            report.worst_case = dims(T, D, N);
        }
        ++report.cases;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<CheckOutcome> scan_definition_checks(std::uint64_t seed) {
    CheckOutcome backward{"backward scan == reverse(forward(reverse(x)))", 0.0, 0.0, true, ""};
    CheckOutcome one_hot{"dynamic scan, one-hot start == forward", 0.0, 0.0, true, ""};
    CheckOutcome mixture{"dynamic scan == term-by-term mixture", 0.0, 1e-12, false, ""};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_t(1, 12), pick_d(1, 8), pick_n(1, 8);
    for (std::size_t k = 0; k < 10; ++k) {
        const std::size_t T = pick_t(rng), D = pick_d(rng), N = pick_n(rng);
        ParamStore store(rng());
        const SsmParams p(store, "ssm", D, N, 2);
        const Tensor x = Tensor::seeded_gaussian({T, D}, rng());
        for (ScanKernel kernel : {ScanKernel::Sequential, ScanKernel::Parallel}) {
            const Tensor expect = reverse(selective_scan(reverse(x, 0), p.project(reverse(x, 0)), p.a_log(),
                                                         p.d_skip(), kernel),
                                          0);
            const double dev = max_abs_diff(selective_scan_reversed(x, p, kernel).data(), expect.data());
            if (dev > backward.value) backward.detail = dims(T, D, N);
            backward.value = std::max(backward.value, dev);
        }

        const Tensor fwd = selective_scan_sequential(x, p);
        std::vector<double> at_zero(T, -1e4);
        at_zero[0] = 0.0;
        const double dev0 = max_abs_diff(
            selective_scan_dynamic(x, p, Tensor::from_vector({T}, at_zero)).data(), fwd.data());
        if (dev0 > one_hot.value) one_hot.detail = dims(T, D, N);
        one_hot.value = std::max(one_hot.value, dev0);

        const Tensor z = Tensor::seeded_gaussian({T}, rng(), 2.0);
        double norm = 0.0;
        std::vector<double> w(T);
        for (std::size_t s = 0; s < T; ++s) norm += w[s] = std::exp(z.at({s}));
        std::vector<double> oracle(T * D, 0.0);
        for (std::size_t s = 0; s < T; ++s) {
            const auto off = static_cast<std::ptrdiff_t>(s);
            const auto term = rotate(selective_scan_sequential(rotate(x, 0, off), p), 0, -off).to_vector();
            for (std::size_t j = 0; j < T * D; ++j) oracle[j] += w[s] / norm * term[j];
        }
        const double dev = max_abs_diff(selective_scan_dynamic(x, p, z).data(), oracle);
        if (dev > mixture.value) mixture.detail = dims(T, D, N);
        mixture.value = std::max(mixture.value, dev);
    }
    return {backward, one_hot, mixture};
}

std::vector<CheckOutcome> gradient_suite(std::uint64_t seed) {
    constexpr double kTol = 1e-3;
    std::vector<CheckOutcome> out;
    std::mt19937_64 rng(seed);
    auto run = [&](const std::string& name, const std::function<Tensor()>& loss, std::vector<NamedTensor> params,
                   GradCheckOptions opts = {}) {
        opts.seed = seed;
        const GradCheckResult r = check_gradients(loss, std::move(params), opts);
        out.push_back({name, r.max_rel_error, kTol, false,
                       std::to_string(r.entries_checked) + " entries, worst " + r.worst_entry});
    };
    const std::uint64_t s = seed * 1000;
    Tensor x = param({3, 4}, s + 1), y = param({4}, s + 2), pos = positive_param({3, 4}, rng, 0.5, 2.0);
    auto p = [&](const Tensor& t) { return probe_loss(t, s + 99); };
    run("add", [&] { return p(add(x, y)); }, {{"x", x}, {"y", y}});
    run("sub", [&] { return p(sub(x, y)); }, {{"x", x}, {"y", y}});
    run("mul", [&] { return p(mul(x, y)); }, {{"x", x}, {"y", y}});
    run("div", [&] { return p(div(x, pos)); }, {{"x", x}, {"pos", pos}});
    run("scale", [&] { return p(scale(x, -1.7)); }, {{"x", x}});
    run("add_scalar", [&] { return p(add_scalar(x, 0.3)); }, {{"x", x}});
    run("neg", [&] { return p(neg(x)); }, {{"x", x}});
    run("sigmoid", [&] { return p(sigmoid(x)); }, {{"x", x}});
    run("silu", [&] { return p(silu(x)); }, {{"x", x}});
    run("softplus", [&] { return p(softplus(x)); }, {{"x", x}});
    run("exp", [&] { return p(exp(x)); }, {{"x", x}});
    run("log", [&] { return p(log(pos)); }, {{"pos", pos}});
    run("tanh", [&] { return p(tanh(x)); }, {{"x", x}});
    run("relu", [&] { return p(relu(x)); }, {{"x", x}});
    run("square", [&] { return p(square(x)); }, {{"x", x}});
    run("clamp", [&] { return p(clamp(x, -0.5, 0.5)); }, {{"x", x}});

    Tensor cube = param({3, 4, 2}, s + 3);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::string ax = "(axis " + std::to_string(axis) + ")";
        run("pool avg " + ax, [&] { return p(pool(cube, axis, PoolKind::Avg)); }, {{"x", cube}});
        run("pool max " + ax, [&] { return p(pool(cube, axis, PoolKind::Max)); }, {{"x", cube}});
        run("sum " + ax, [&] { return p(sum(cube, axis)); }, {{"x", cube}});
        run("mean " + ax, [&] { return p(mean(cube, axis)); }, {{"x", cube}});
        run("softmax " + ax, [&] { return p(softmax(cube, axis)); }, {{"x", cube}});
    }
    run("sum_all", [&] { return sum_all(square(cube)); }, {{"x", cube}});
    run("mean_all", [&] { return mean_all(square(cube)); }, {{"x", cube}});

    Tensor m = param({4, 5}, s + 4);
    run("matmul", [&] { return p(matmul(x, m)); }, {{"a", x}, {"b", m}});
    run("transpose", [&] { return p(transpose(m)); }, {{"x", m}});
    run("reshape", [&] { return p(reshape(m, {2, 10})); }, {{"x", m}});
    run("concat", [&] { return p(concat({x, transpose(m)}, 0)); }, {{"a", x}, {"b", m}});
    run("slice", [&] { return p(slice(m, 1, 1, 3)); }, {{"x", m}});
    run("reverse", [&] { return p(reverse(m, 0)); }, {{"x", m}});
    run("rotate", [&] { return p(rotate(m, 0, 2)); }, {{"x", m}});

    Tensor cx = param({6, 3}, s + 5), cw = param({3, 4}, s + 6), cb = param({3}, s + 7);
    run("conv1d_depthwise", [&] { return p(conv1d_depthwise(cx, cw, cb)); }, {{"x", cx}, {"w", cw}, {"b", cb}});
    Tensor lg = param({5}, s + 8), ls = param({5}, s + 9), lx = param({3, 5}, s + 10);
    run("layer_norm", [&] { return p(layer_norm(lx, lg, ls)); }, {{"x", lx}, {"g", lg}, {"s", ls}});

    for (ScanKernel kernel : {ScanKernel::Sequential, ScanKernel::Parallel}) {
        Tensor sx = param({7, 3}, s + 11), sb = param({7, 4}, s + 12), sc = param({7, 4}, s + 13);
        Tensor sd = positive_param({7, 3}, rng, 0.01, 0.6), sa = positive_param({3, 4}, rng, -1.0, 1.5);
        Tensor sk = param({3}, s + 14);
        run(kernel == ScanKernel::Sequential ? "selective_scan (sequential)" : "selective_scan (parallel)",
            [&] { return p(selective_scan(sx, {sd, sb, sc}, sa, sk, kernel)); },
            {{"x", sx}, {"delta", sd}, {"b", sb}, {"c", sc}, {"a_log", sa}, {"d_skip", sk}});
    }
    {
        ParamStore store(s + 15);
        const SsmParams sp(store, "ssm", 3, 4, 2);
        Tensor dx = param({4, 3}, s + 16), logits = param({4}, s + 17);
        auto params = store.named();
        params.push_back({"x", dx});
        params.push_back({"logits", logits});
        run("selective_scan_dynamic", [&] { return p(selective_scan_dynamic(dx, sp, logits)); }, params);
    }
    {
        ParamStore store(s + 18);
        MambaConfig mc;
        mc.d_model = 4;
        mc.state = 3;
        const MambaBlock block(store, "block", mc,
                               {{ScanDirection::Forward, nullptr},
                                {ScanDirection::Backward, nullptr},
                                {ScanDirection::Dynamic, nullptr}});
        Tensor bx = param({5, 4}, s + 19);
        auto params = store.named();
        params.push_back({"x", bx});
        run("mamba block (3 directions)", [&] { return p(block.forward(bx)); }, params);
    }
    {
        Tensor f = param({3, 4}, s + 20), sc = param({3, 4}, s + 21), bi = param({3, 4}, s + 22);
        run("plsim_fuse", [&] { return p(model::plsim_fuse(f, sc, bi)); }, {{"f", f}, {"scale", sc}, {"bias", bi}});
        Tensor seg_a = positive_param({4, 3}, rng, 0.05, 0.95), seg_v = positive_param({4, 3}, rng, 0.05, 0.95);
        Tensor ta = positive_param({4, 3}, rng, 0.1, 1.0), tv = positive_param({4, 3}, rng, 0.1, 1.0);
        Tensor mod = positive_param({2, 3}, rng, 0.1, 1.0);
        run("mmil_pool", [&] { return p(model::mmil_pool(seg_a, seg_v, ta, tv, mod)); },
            {{"seg_a", seg_a}, {"seg_v", seg_v}, {"time_a", ta}, {"time_v", tv}, {"modality", mod}});
        const Tensor target = Tensor::from_vector({4, 3}, {1, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 1});
        const Tensor mask = Tensor::from_vector({4}, {1, 0, 1, 1});
        run("binary_cross_entropy", [&] { return model::binary_cross_entropy(seg_a, target, mask); },
            {{"prob", seg_a}});
    }
    {
        const model::ModelConfig c = tiny_model(seed + 17);
        model::AvMamba net(c, data::Vocabulary::standard(c.classes));
        // Nudge zero-initialized biases off ReLU kinks (empty label rows give
        // all-zero text embeddings).
        for (auto& np : net.params().named()) {
            if (!np.name.ends_with("bias") || np.name.ends_with("dt_bias")) continue;
            auto d = np.tensor.mutable_data();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += 0.05 * std::cos(3.0 * static_cast<double>(i) + 1.0);
        }
        const data::VideoRecord rec = random_record(c, seed + 3);
        const model::LossTargets targets = model::LossTargets::from_record(rec);
        GradCheckOptions opts;
        opts.denominator_floor = 1e-5;
        run("full model loss (T=4, d=8, C=3)",
            [&] { return model::compute_loss(net.forward(rec), targets, c.lambda_a, c.lambda_v); },
            net.params().named(), opts);
    }
    return out;
}

std::vector<CheckOutcome> shared_matrix_checks(std::uint64_t seed) {
    CheckOutcome sum_rule{"shared-B gradient == sum of modality gradients", 0.0, 1e-10, false, ""};
    CheckOutcome hard_off{"hard-off sharing ignores shared matrices", 0.0, 0.0, true, ""};
    model::ModelConfig c = tiny_model(seed);
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
        ParamStore store(seed * 31 + trial);
        const model::AdaptiveMambaFusion amf(store, "amf", c, model::AmfMode::Full);
        const std::uint64_t s = seed * 100 + trial * 10;
        const Tensor fa = Tensor::seeded_gaussian({c.segments, c.d_model}, s + 1);
        const Tensor fv = Tensor::seeded_gaussian({c.segments, c.d_model}, s + 2);
        const Tensor wa = Tensor::seeded_gaussian({c.segments, c.d_model}, s + 3);
        const Tensor wv = Tensor::seeded_gaussian({c.segments, c.d_model}, s + 4);
        auto loss_a = [&] { return sum_all(mul(amf.forward(fa, fv).a, wa)); };
        auto loss_v = [&] { return sum_all(mul(amf.forward(fa, fv).v, wv)); };
        auto reset = [&] {
            for (auto& p : store.named()) p.tensor.zero_grad();
        };
        for (const auto& h : amf.shared()) {
            reset();
            loss_a().backward();
            const auto ga = h->b_shared.grad_or_zeros();
            reset();
            loss_v().backward();
            const auto gv = h->b_shared.grad_or_zeros();
            reset();
            add(loss_a(), loss_v()).backward();
            const auto gs = h->b_shared.grad_or_zeros();
            for (std::size_t i = 0; i < gs.size(); ++i)
                sum_rule.value = std::max(sum_rule.value, std::abs(gs[i] - (ga[i] + gv[i])));
        }
        reset();

        for (const auto& h : amf.shared()) h->enabled = false;
        const auto before = amf.forward(fa, fv);
        for (const auto& h : amf.shared())
            for (double& v : h->b_shared.mutable_data()) v += 1.0 + static_cast<double>(trial);
        const auto after = amf.forward(fa, fv);
        hard_off.value = std::max({hard_off.value, max_abs_diff(before.a.data(), after.a.data()),
                                   max_abs_diff(before.v.data(), after.v.data())});
    }
    sum_rule.detail = "3 initializations x 3 scan directions";
    hard_off.detail = "max output change after perturbing the shared matrices";
    return {sum_rule, hard_off};
}

std::vector<CheckOutcome> block_fidelity_checks(std::uint64_t seed, std::size_t trials) {
    CheckOutcome identity{"fusion with zero scale/bias is the identity", 0.0, 0.0, true, ""};
    CheckOutcome factors{"enhancement factors in (1,2)", 0.0, 0.0, true, ""};
    CheckOutcome weights{"attention weights in (0,1)", 0.0, 0.0, true, ""};
    std::size_t factor_count = 0, weight_count = 0;
    model::ModelConfig c = tiny_model(seed);
    for (std::size_t k = 0; k < trials; ++k) {
        const std::uint64_t s = seed * 1000 + k * 10;
        // Unit-scale inputs: far larger ones saturate the sigmoid to exactly 0 or 1 in doubles.
        const double spread = 0.5 * static_cast<double>(1 + k % 5);
        const Tensor f = Tensor::seeded_gaussian({c.segments, c.d_model}, s, spread);
        const Tensor zero = Tensor::zeros(f.shape());
        identity.value = std::max(identity.value, max_abs_diff(model::plsim_fuse(f, zero, zero).data(), f.data()));

        ParamStore store(s + 1);
        const model::MambaFeatureEnhancement mfe(store, "mfe", c.d_model);
        const Tensor fa = Tensor::seeded_gaussian(f.shape(), s + 2, spread);
        const Tensor fv = Tensor::seeded_gaussian(f.shape(), s + 3, spread);
        const auto r = mfe.forward(fa, fv, Tensor::seeded_gaussian(f.shape(), s + 4, spread));
        for (const auto& [in, enhanced] : {std::pair{fa, r.a}, std::pair{fv, r.v}})
            for (std::size_t i = 0; i < in.numel(); ++i) {
                if (in.data()[i] == 0.0) continue;
                const double factor = enhanced.data()[i] / in.data()[i];
                ++factor_count;
                if (!(factor > 1.0 && factor < 2.0)) factors.value += 1.0;
            }

        const model::TemporalSpatialAttention tsa(store, "tsa", c);
        const auto t = tsa.forward(f);
        for (const Tensor* w : {&t.channel_weights, &t.temporal_weights})
            for (double v : w->data()) {
                ++weight_count;
                if (!(v > 0.0 && v < 1.0)) weights.value += 1.0;
            }
    }
    identity.detail = std::to_string(trials) + " random inputs";
    factors.detail = std::to_string(factor_count) + " entries checked";
    weights.detail = std::to_string(weight_count) + " weights checked";
    return {identity, factors, weights};
}

}  // namespace mug::checks
