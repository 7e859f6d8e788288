#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mug/gradcheck.hpp"
#include "mug/model.hpp"

using namespace mug;
using namespace mug::model;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.segments = 4;
    c.d_model = 8;
    c.classes = 3;
    c.state = 4;
    c.text_dim = 6;
    c.audio_dim = 5;
    c.visual_dim = 7;
    c.seed = 17;
    return c;
}

data::Vocabulary vocab(std::size_t C) { return data::Vocabulary::standard(C); }

data::VideoRecord random_record(const ModelConfig& c, std::uint64_t seed) {
    data::VideoRecord r;
    r.id = "vid" + std::to_string(seed);
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

Tensor weight(const ParamStore& s, const std::string& name) { return s.get(name); }

// Row-major [in,out] linear map applied by hand.
std::vector<double> linear_by_hand(const std::vector<double>& x, const Tensor& w, const Tensor& b) {
    const std::size_t in = w.dim(0), out = w.dim(1);
    std::vector<double> y(out);
    for (std::size_t j = 0; j < out; ++j) {
        double acc = b.at({j});
        for (std::size_t i = 0; i < in; ++i) acc += x[i] * w.at({i, j});
        y[j] = acc;
    }
    return y;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> row(const Tensor& t, std::size_t r) {
    const std::size_t n = t.dim(1);
    return std::vector<double>(t.data().begin() + static_cast<std::ptrdiff_t>(r * n),
                               t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
}

}  // namespace

TEST(Tsa, ZeroInputGivesHalfWeightsAndZeroOutput) {
    ParamStore store(1);
    const ModelConfig c = tiny_config();
    const TemporalSpatialAttention tsa(store, "tsa", c);
    const auto r = tsa.forward(Tensor::zeros({4, c.d_model}));
    for (double w : r.channel_weights.data()) EXPECT_EQ(w, 0.5);
    for (double s : r.temporal_weights.data()) EXPECT_EQ(s, 0.5);
    for (double v : r.output.data()) EXPECT_EQ(v, 0.0);
}

TEST(Tsa, WeightsInUnitIntervalAndComposition) {
    ParamStore store(2);
    ModelConfig c = tiny_config();
    c.d_model = 4;
    const TemporalSpatialAttention tsa(store, "tsa", c);
    const Tensor f = Tensor::seeded_gaussian({3, 4}, 3, 2.0);
    const auto r = tsa.forward(f);
    EXPECT_EQ(r.channel_weights.shape(), (Shape{1, 4}));
    EXPECT_EQ(r.temporal_weights.shape(), (Shape{3, 1}));
    for (double w : r.channel_weights.data()) EXPECT_TRUE(w > 0.0 && w < 1.0);
    for (double s : r.temporal_weights.data()) EXPECT_TRUE(s > 0.0 && s < 1.0);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t k = 0; k < 4; ++k) {
            const double expect = f.at({t, k}) * r.channel_weights.at({0, k}) * r.temporal_weights.at({t, 0});
            EXPECT_NEAR(r.output.at({t, k}), expect, 1e-12);
            EXPECT_LE(std::abs(r.output.at({t, k})), std::abs(f.at({t, k})));
        }
}

TEST(Amf, ShapesAndSharedHandles) {
    ParamStore store(3);
    const ModelConfig c = tiny_config();
    const AdaptiveMambaFusion amf(store, "amf", c, AmfMode::Full);
    ASSERT_EQ(amf.shared().size(), 3u);
    const auto r = amf.forward(Tensor::seeded_gaussian({4, 8}, 1), Tensor::seeded_gaussian({4, 8}, 2));
    EXPECT_EQ(r.a.shape(), (Shape{4, 8}));
    EXPECT_EQ(r.v.shape(), (Shape{4, 8}));
    EXPECT_EQ(r.mix.shape(), (Shape{4, 8}));
    EXPECT_THROW(amf.forward(Tensor::zeros({4, 8}), Tensor::zeros({3, 8})), ShapeError);

    ParamStore private_store(3);
    const AdaptiveMambaFusion priv(private_store, "amf", c, AmfMode::Private);
    EXPECT_TRUE(priv.shared().empty());
    EXPECT_FALSE(private_store.contains("amf.mix.weight"));
    const auto pr = priv.forward(Tensor::seeded_gaussian({4, 8}, 1), Tensor::seeded_gaussian({4, 8}, 2));
    for (double v : pr.mix.data()) EXPECT_EQ(v, 0.0);
}

TEST(Amf, HardOffSharingIgnoresSharedMatrices) {
    ParamStore store(4);
    const AdaptiveMambaFusion amf(store, "amf", tiny_config(), AmfMode::Full);
    for (const auto& h : amf.shared()) h->enabled = false;
    const Tensor fa = Tensor::seeded_gaussian({4, 8}, 5), fv = Tensor::seeded_gaussian({4, 8}, 6);
    const auto before = amf.forward(fa, fv);
    for (const auto& h : amf.shared())
        for (double& v : h->b_shared.mutable_data()) v += 1.0;
    const auto after = amf.forward(fa, fv);
    EXPECT_EQ(before.a.to_vector(), after.a.to_vector());
    EXPECT_EQ(before.v.to_vector(), after.v.to_vector());
}

TEST(Amf, SharedGradientIsSumOfModalityGradients) {
    ParamStore store(5);
    const AdaptiveMambaFusion amf(store, "amf", tiny_config(), AmfMode::Full);
    const Tensor fa = Tensor::seeded_gaussian({4, 8}, 7), fv = Tensor::seeded_gaussian({4, 8}, 8);
    const Tensor wa = Tensor::seeded_gaussian({4, 8}, 9), wv = Tensor::seeded_gaussian({4, 8}, 10);
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
        double norm_a = 0.0;
        for (std::size_t i = 0; i < gs.size(); ++i) {
            EXPECT_NEAR(gs[i], ga[i] + gv[i], 1e-10);
            norm_a += std::abs(ga[i]);
        }
        EXPECT_GT(norm_a, 0.0);
    }
}

TEST(Mfe, ZeroInputsAndFactorRange) {
    ParamStore store(6);
    const MambaFeatureEnhancement mfe(store, "mfe", 3);
    const auto z = mfe.forward(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    for (double e : z.gate.data()) EXPECT_EQ(e, 0.5);
    for (double v : z.a.data()) EXPECT_EQ(v, 0.0);

    const Tensor fa = Tensor::seeded_gaussian({5, 3}, 1, 3.0), fv = Tensor::seeded_gaussian({5, 3}, 2, 3.0);
    const auto r = mfe.forward(fa, fv, Tensor::seeded_gaussian({5, 3}, 3, 3.0));
    for (std::size_t i = 0; i < fa.numel(); ++i) {
        if (fa.data()[i] == 0.0) continue;
        const double factor = r.a.data()[i] / fa.data()[i];
        EXPECT_GT(factor, 1.0);
        EXPECT_LT(factor, 2.0);
    }
}

TEST(Mfe, MatchesHandFormula) {
    ParamStore store(7);
    const MambaFeatureEnhancement mfe(store, "mfe", 3);
    for (auto& p : store.named()) {  // non-zero biases
        auto d = p.tensor.mutable_data();
        if (p.name.ends_with(".bias"))
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.1 * (static_cast<double>(i) - 1.0);
    }
    const Tensor fa = Tensor::seeded_gaussian({2, 3}, 4), fv = Tensor::seeded_gaussian({2, 3}, 5),
                 fm = Tensor::seeded_gaussian({2, 3}, 6);
    const auto r = mfe.forward(fa, fv, fm);
    for (std::size_t t = 0; t < 2; ++t) {
        std::vector<double> prod(3);
        for (std::size_t k = 0; k < 3; ++k) prod[k] = fa.at({t, k}) * fv.at({t, k});
        const auto p = linear_by_hand(prod, weight(store, "mfe.p.weight"), weight(store, "mfe.p.bias"));
        const auto q = linear_by_hand(row(fm, t), weight(store, "mfe.q.weight"), weight(store, "mfe.q.bias"));
        for (std::size_t k = 0; k < 3; ++k) {
            const double e = sigmoid_ref(p[k] + q[k]);
            EXPECT_NEAR(r.a.at({t, k}), fa.at({t, k}) * (1.0 + e), 1e-12);
            EXPECT_NEAR(r.v.at({t, k}), fv.at({t, k}) * (1.0 + e), 1e-12);
        }
    }
}

TEST(TextStub, DeterministicUnitVectors) {
    const TextEncoder a(vocab(5), 16), b(vocab(5), 16);
    EXPECT_EQ(a.category_vector(Modality::Audio, 2).to_vector(), b.category_vector(Modality::Audio, 2).to_vector());
    EXPECT_NE(a.category_vector(Modality::Audio, 2).to_vector(), a.category_vector(Modality::Visual, 2).to_vector());
    double norm = 0.0;
    const Tensor unit = a.category_vector(Modality::Visual, 4);
    for (double v : unit.data()) norm += v * v;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_EQ(TextEncoder::prompt(Modality::Audio, "Frying_(food)"), "this is a sound of Frying (food)");
    EXPECT_EQ(TextEncoder::prompt(Modality::Visual, "Dog"), "A photo of Dog");
}

TEST(TextStub, SegmentEmbeddings) {
    const TextEncoder enc(vocab(5), 8);
    const Tensor e = enc.embed({{}, {"Dog"}, {"Dog", "Speech"}}, Modality::Visual);
    ASSERT_EQ(e.shape(), (Shape{3, 8}));
    const Tensor dog = enc.category_vector(Modality::Visual, 3), speech = enc.category_vector(Modality::Visual, 0);
    for (std::size_t k = 0; k < 8; ++k) {
        EXPECT_EQ(e.at({0, k}), 0.0);
        EXPECT_EQ(e.at({1, k}), dog.at({k}));
        EXPECT_EQ(e.at({2, k}), (dog.at({k}) + speech.at({k})) / 2.0);
    }
    data::LabelMatrix m(2, 5);
    m.set(0, 1, true);
    m.set_null(1, true);
    const Tensor fromm = enc.embed(m, Modality::Audio);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(fromm.at({1, k}), 0.0);
    EXPECT_THROW(enc.embed({{"Giraffe"}}, Modality::Audio), VocabularyError);
}

TEST(Plsim, FuseIdentitiesAndFormula) {
    const Tensor f = Tensor::seeded_gaussian({3, 4}, 1);
    EXPECT_EQ(plsim_fuse(f, Tensor::zeros({3, 4}), Tensor::zeros({3, 4})).to_vector(), f.to_vector());
    const auto doubled = plsim_fuse(f, Tensor::full({3, 4}, 1.0), Tensor::zeros({3, 4}));
    for (std::size_t i = 0; i < f.numel(); ++i) EXPECT_EQ(doubled.data()[i], 2.0 * f.data()[i]);
    const Tensor s = Tensor::seeded_gaussian({3, 4}, 2), b = Tensor::seeded_gaussian({3, 4}, 3);
    const auto r = plsim_fuse(f, s, b);
    for (std::size_t i = 0; i < f.numel(); ++i) {
        EXPECT_NEAR(r.data()[i], f.data()[i] * s.data()[i] + b.data()[i] + f.data()[i], 1e-12);
    }
    EXPECT_THROW(plsim_fuse(f, Tensor::zeros({3, 3}), b), ShapeError);
}

TEST(Plsim, FourDistinctMlps) {
    ParamStore store(8);
    const SemanticInteraction plsim(store, "plsim", 6, 4);
    const Tensor text = Tensor::seeded_gaussian({2, 6}, 1);
    const auto pa = plsim.parameters(text, Modality::Audio), pv = plsim.parameters(text, Modality::Visual);
    EXPECT_NE(pa.scale.to_vector(), pa.bias.to_vector());
    EXPECT_NE(pa.scale.to_vector(), pv.scale.to_vector());
    EXPECT_NE(pv.scale.to_vector(), pv.bias.to_vector());
    std::size_t groups = 0;
    for (const auto& p : store.named()) groups += p.name.ends_with(".1.weight");
    EXPECT_EQ(groups, 4u);
}

TEST(Attention, RowsSumToOneAndSingleSegment) {
    ParamStore store(9);
    const Attention att(store, "att", 4);
    const auto r = att.forward(Tensor::seeded_gaussian({5, 4}, 1), Tensor::seeded_gaussian({3, 4}, 2));
    EXPECT_EQ(r.weights.shape(), (Shape{5, 3}));
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += r.weights.at({i, j});
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    const Tensor one = Tensor::seeded_gaussian({1, 4}, 3);
    const auto single = att.forward(one, one);
    const auto v = linear_by_hand(row(one, 0), weight(store, "att.v.weight"), weight(store, "att.v.bias"));
    EXPECT_EQ(single.output.shape(), (Shape{1, 4}));
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(single.output.at({0, k}), v[k], 1e-15);
}

TEST(Attention, HandComputedTwoSegmentHybridLayer) {
    ParamStore store(10);
    const HybridAttentionTail han(store, "han", 3);
    const Tensor fa = Tensor::seeded_gaussian({2, 3}, 11), fv = Tensor::seeded_gaussian({2, 3}, 12);
    const auto out = han.forward(fa, fv);

    auto attend = [&](const std::string& prefix, const Tensor& qs, const Tensor& ks, std::size_t t) {
        const auto q = linear_by_hand(row(qs, t), weight(store, prefix + ".q.weight"), weight(store, prefix + ".q.bias"));
        std::vector<std::vector<double>> k, v;
        for (std::size_t j = 0; j < 2; ++j) {
            k.push_back(linear_by_hand(row(ks, j), weight(store, prefix + ".k.weight"), weight(store, prefix + ".k.bias")));
            v.push_back(linear_by_hand(row(ks, j), weight(store, prefix + ".v.weight"), weight(store, prefix + ".v.bias")));
        }
        double s[2];
        for (std::size_t j = 0; j < 2; ++j) {
            s[j] = 0.0;
            for (std::size_t d = 0; d < 3; ++d) s[j] += q[d] * k[j][d];
            s[j] /= std::sqrt(3.0);
        }
        const double w0 = 1.0 / (1.0 + std::exp(s[1] - s[0]));
        std::vector<double> o(3);
        for (std::size_t d = 0; d < 3; ++d) o[d] = w0 * v[0][d] + (1.0 - w0) * v[1][d];
        return o;
    };
    for (std::size_t t = 0; t < 2; ++t) {
        const auto sa = attend("han.self", fa, fa, t), ca = attend("han.cross", fa, fv, t);
        const auto sv = attend("han.self", fv, fv, t), cv = attend("han.cross", fv, fa, t);
        for (std::size_t d = 0; d < 3; ++d) {
            EXPECT_NEAR(out.a.at({t, d}), fa.at({t, d}) + sa[d] + ca[d], 1e-10);
            EXPECT_NEAR(out.v.at({t, d}), fv.at({t, d}) + sv[d] + cv[d], 1e-10);
        }
    }
}

TEST(Mmil, UniformAttentionAveragesOverTime) {
    const Tensor seg = sigmoid(Tensor::seeded_gaussian({4, 3}, 1));
    const Tensor uniform_t = Tensor::full({4, 3}, 0.25), uniform_m = Tensor::full({2, 3}, 0.5);
    const Tensor video = mmil_pool(seg, seg, uniform_t, uniform_t, uniform_m);
    for (std::size_t c = 0; c < 3; ++c) {
        double m = 0.0;
        for (std::size_t t = 0; t < 4; ++t) m += seg.at({t, c});
        EXPECT_NEAR(video.at({c}), m / 4.0, 1e-15);
    }
}

TEST(Mmil, HeadMatchesHandComputedPooling) {
    ParamStore store(11);
    const MmilHead head(store, "mmil", 3, 2, 0.5);
    const Tensor ga = Tensor::seeded_gaussian({3, 3}, 1), gv = Tensor::seeded_gaussian({3, 3}, 2);
    const ModelOutputs out = head.forward(ga, gv);
    const Tensor cw = weight(store, "mmil.classifier.weight"), cb = weight(store, "mmil.classifier.bias");
    const Tensor tw = weight(store, "mmil.time_attention.weight"), tb = weight(store, "mmil.time_attention.bias");
    const Tensor mw = weight(store, "mmil.modality_attention.weight"), mb = weight(store, "mmil.modality_attention.bias");
    for (std::size_t c = 0; c < 2; ++c) {
        double pooled[2], mod_logit[2];
        for (int m = 0; m < 2; ++m) {
            const Tensor& g = m == 0 ? ga : gv;
            double tl[3], z = 0.0, acc = 0.0;
            mod_logit[m] = 0.0;
            for (std::size_t t = 0; t < 3; ++t) {
                tl[t] = std::exp(linear_by_hand(row(g, t), tw, tb)[c]);
                z += tl[t];
                mod_logit[m] += linear_by_hand(row(g, t), mw, mb)[c] / 3.0;
            }
            for (std::size_t t = 0; t < 3; ++t) acc += tl[t] / z * sigmoid_ref(linear_by_hand(row(g, t), cw, cb)[c]);
            pooled[m] = acc;
        }
        const double wa = 1.0 / (1.0 + std::exp(mod_logit[1] - mod_logit[0]));
        EXPECT_NEAR(out.video_prob.at({c}), wa * pooled[0] + (1.0 - wa) * pooled[1], 1e-10);
        EXPECT_NEAR(out.modality_attention.at({0, c}) + out.modality_attention.at({1, c}), 1.0, 1e-12);
    }
}

TEST(AvMambaModel, OutputShapesAndRanges) {
    const ModelConfig c = tiny_config();
    const AvMamba model(c, vocab(c.classes));
    const auto rec = random_record(c, 1);
    const ModelOutputs out = model.forward(rec);
    EXPECT_EQ(out.seg_prob_a.shape(), (Shape{4, 3}));
    EXPECT_EQ(out.seg_prob_v.shape(), (Shape{4, 3}));
    EXPECT_EQ(out.video_prob.shape(), (Shape{3}));
    for (const Tensor* t : {&out.seg_prob_a, &out.seg_prob_v, &out.video_prob})
        for (double p : t->data()) EXPECT_TRUE(p > 0.0 && p < 1.0);
    for (const Tensor* a : {&out.time_attention_a, &out.time_attention_v})
        for (std::size_t k = 0; k < 3; ++k) {
            double s = 0.0;
            for (std::size_t t = 0; t < 4; ++t) s += a->at({t, k});
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    const StageFeatures& s = out.stages;
    for (const Tensor* t : {&s.input_a, &s.tsa_a, &s.tsa_v, &s.amf_a, &s.amf_v, &s.amf_mix, &s.mfe_a, &s.mfe_v,
                            &s.plsim_a, &s.plsim_v, &s.han_a, &s.han_v}) {
        EXPECT_EQ(t->shape(), (Shape{4, 8}));
    }
    auto bad = rec;
    bad.audio = Tensor::zeros({4, c.audio_dim + 1});
    EXPECT_THROW(model.forward(bad), ShapeError);
    EXPECT_THROW(AvMamba(c, vocab(4)), ConfigError);
}

TEST(AvMambaModel, BatchPermutationPermutesOutputs) {
    const ModelConfig c = tiny_config();
    const AvMamba model(c, vocab(c.classes));
    const auto r0 = random_record(c, 1), r1 = random_record(c, 5), r2 = random_record(c, 9);
    const auto fwd = model.forward({&r0, &r1, &r2});
    const auto rev = model.forward({&r2, &r0, &r1});
    EXPECT_EQ(fwd[0].video_prob.to_vector(), rev[1].video_prob.to_vector());
    EXPECT_EQ(fwd[1].seg_prob_a.to_vector(), rev[2].seg_prob_a.to_vector());
    EXPECT_EQ(fwd[2].seg_prob_v.to_vector(), rev[0].seg_prob_v.to_vector());
}

TEST(AvMambaModel, FullModelGradientCheck) {
    const ModelConfig c = tiny_config();
    AvMamba model(c, vocab(c.classes));
    // Offset the zero-initialized biases: empty label rows give all-zero text
    // embeddings, which would otherwise sit exactly on a ReLU kink.
    for (auto& p : model.params().named()) {
        if (!p.name.ends_with("bias") || p.name.ends_with("dt_bias")) continue;
        auto d = p.tensor.mutable_data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += 0.05 * std::cos(3.0 * static_cast<double>(i) + 1.0);
    }
    const auto rec = random_record(c, 3);
    const LossTargets targets = LossTargets::from_record(rec);
    GradCheckOptions opts;
    opts.denominator_floor = 1e-5;
    const auto r = check_gradients([&] { return compute_loss(model.forward(rec), targets, 1.0, 1.0); },
                                   model.params().named(), opts);
    EXPECT_LT(r.max_rel_error, 1e-3) << r.worst_entry;
    EXPECT_EQ(r.entries_checked, model.parameter_count());
}

TEST(AvMambaModel, ZeroedSemanticMlpsEqualAblatedModel) {
    ModelConfig c = tiny_config();
    AvMamba full(c, vocab(c.classes));
    for (auto& p : full.params().named()) {
        if (!p.name.starts_with("plsim.")) continue;
        for (double& v : p.tensor.mutable_data()) v = 0.0;
    }
    c.use_plsim = false;
    const AvMamba ablated(c, vocab(c.classes));
    const auto rec = random_record(c, 4);
    const auto a = full.forward(rec), b = ablated.forward(rec);
    EXPECT_EQ(a.video_prob.to_vector(), b.video_prob.to_vector());
    EXPECT_EQ(a.seg_prob_a.to_vector(), b.seg_prob_a.to_vector());
    EXPECT_EQ(a.seg_prob_v.to_vector(), b.seg_prob_v.to_vector());
}

TEST(AvMambaModel, AblationsLeaveOtherParametersUntouched) {
    ModelConfig c = tiny_config();
    const AvMamba full(c, vocab(c.classes));
    c.use_tsa = false;
    c.amf = AmfMode::Private;
    const AvMamba ablated(c, vocab(c.classes));
    for (const auto& p : ablated.params().named()) {
        if (p.name.starts_with("amf.")) continue;
        EXPECT_EQ(p.tensor.to_vector(), full.params().get(p.name).to_vector()) << p.name;
    }
}

TEST(AvMambaModel, BaselineSkeletonCensus) {
    ModelConfig c = tiny_config();
    c.use_tsa = false;
    c.amf = AmfMode::Off;
    c.use_mfe = false;
    c.use_plsim = false;
    const AvMamba model(c, vocab(c.classes));
    for (const auto& p : model.params().named()) {
        EXPECT_TRUE(p.name.starts_with("input.") || p.name.starts_with("han.") || p.name.starts_with("mmil.")) << p.name;
    }
    EXPECT_EQ(model.forward(random_record(c, 1)).video_prob.shape(), (Shape{3}));
}

TEST(AvMambaModel, FullScaleParameterCountInBand) {
    const AvMamba model(ModelConfig::full_scale(), vocab(25));
    const std::size_t n = model.parameter_count();
    EXPECT_GE(n, 3'800'000u);
    EXPECT_LE(n, 15'200'000u);
}

TEST(Loss, MatchesDirectFormula) {
    const ModelConfig c = tiny_config();
    const AvMamba model(c, vocab(c.classes));
    const auto rec = random_record(c, 6);
    const ModelOutputs out = model.forward(rec);
    const LossTargets tg = LossTargets::from_record(rec);
    auto bce = [](double p, double y) {
        p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
        return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    };
    double video = 0.0;
    for (std::size_t k = 0; k < 3; ++k) video += bce(out.video_prob.at({k}), rec.video_label[k]);
    video /= 3.0;
    auto seg_term = [&](const Tensor& prob, const data::LabelMatrix& y) {
        double s = 0.0;
        std::size_t rows = 0;
        for (std::size_t t = 0; t < 4; ++t) {
            if (y.is_null(t)) continue;
            ++rows;
            for (std::size_t k = 0; k < 3; ++k) s += bce(prob.at({t, k}), y.get(t, k) ? 1.0 : 0.0);
        }
        return s / static_cast<double>(rows * 3);
    };
    const double expect = video + 0.7 * seg_term(out.seg_prob_a, rec.pseudo_a) + 1.3 * seg_term(out.seg_prob_v, rec.pseudo_v);
    EXPECT_NEAR(compute_loss(out, tg, 0.7, 1.3).item(), expect, 1e-12);
    EXPECT_NEAR(compute_loss(out, tg, 0.0, 0.0).item(), video, 1e-12);
}

TEST(Loss, SaturatedAndInvalidTargets) {
    ModelOutputs out;
    out.video_prob = Tensor::from_vector({2}, {1.0, 0.0});
    out.seg_prob_a = Tensor::from_vector({1, 2}, {1.0, 0.0});
    out.seg_prob_v = Tensor::from_vector({1, 2}, {1.0, 0.0});
    LossTargets tg{Tensor::from_vector({2}, {1.0, 0.0}), Tensor::from_vector({1, 2}, {1.0, 0.0}),
                   Tensor::from_vector({1, 2}, {1.0, 0.0}), Tensor::full({1}, 1.0), Tensor::full({1}, 1.0)};
    const double l = compute_loss(out, tg, 1.0, 1.0).item();
    EXPECT_LE(l, -3.0 * std::log(1.0 - 1e-7) + 1e-15);
    EXPECT_TRUE(std::isfinite(l));
    tg.mask_v = Tensor::zeros({1});
    EXPECT_LE(compute_loss(out, tg, 1.0, 1.0).item(), l);
    tg.pseudo_a = Tensor::from_vector({1, 2}, {0.5, 0.0});
    EXPECT_THROW(compute_loss(out, tg, 1.0, 1.0), ContractError);
}

TEST(Loss, UntrainedModelNearChanceLevel) {
    ModelConfig c = tiny_config();
    c.d_model = 16;
    c.classes = 10;
    const AvMamba model(c, vocab(c.classes));
    double total = 0.0;
    for (std::uint64_t s = 0; s < 8; ++s) {
        const auto rec = random_record(c, 100 + s);
        total += compute_loss(model.forward(rec), LossTargets::from_record(rec), 1.0, 1.0).item();
    }
    const double expected = std::log(2.0) * 3.0;
    EXPECT_NEAR(total / 8.0, expected, 0.2 * expected);
}
