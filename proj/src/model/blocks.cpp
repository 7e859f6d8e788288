#include <cmath>

#include "mug/error.hpp"
#include "mug/model.hpp"

namespace mug::model {

using ssm::MambaBlock;
using ssm::ScanDirection;

TemporalSpatialAttention::TemporalSpatialAttention(ParamStore& store, const std::string& name, const ModelConfig& config)
    : channel_(store, name + ".channel", config.mamba(config.d_model)),
      temporal_(store, name + ".temporal", config.mamba(2)),
      temporal_out_(store, name + ".temporal_out", 2, 1) {}

TemporalSpatialAttention::Result TemporalSpatialAttention::forward(const Tensor& f) const {
    // Channel attention: each pooled [1, d] vector is a length-1 sequence.
    const Tensor avg_t = pool(f, 0, PoolKind::Avg);
    const Tensor max_t = pool(f, 0, PoolKind::Max);
    const Tensor w = sigmoid(add(channel_.forward(avg_t), channel_.forward(max_t)));
    const Tensor weighted = mul(f, w);

    // Temporal attention over the [T, 2] map of channel-pooled statistics.
    const Tensor pooled = concat({pool(weighted, 1, PoolKind::Avg), pool(weighted, 1, PoolKind::Max)}, 1);
    const Tensor s = sigmoid(temporal_out_(temporal_.forward(pooled)));
    return {mul(weighted, s), w, s};
}

AdaptiveMambaFusion::AdaptiveMambaFusion(ParamStore& store, const std::string& name, const ModelConfig& config,
                                         AmfMode mode)
    : mode_(mode) {
    if (mode == AmfMode::Off) throw ContractError("AdaptiveMambaFusion constructed in Off mode");
    const ssm::MambaConfig mc = config.mamba(config.d_model);
    const char* directions[] = {"forward", "backward", "dynamic"};
    if (mode == AmfMode::Full) {
        for (const char* dir : directions) {
            shared_.push_back(ssm::SharedMatrixHandle::create(store, name + ".shared." + dir, mc.d_inner(), mc.state));
        }
    }
    auto branches = [&] {
        std::vector<MambaBlock::Branch> b;
        const ScanDirection kinds[] = {ScanDirection::Forward, ScanDirection::Backward, ScanDirection::Dynamic};
        for (std::size_t i = 0; i < 3; ++i) b.push_back({kinds[i], shared_.empty() ? nullptr : shared_[i]});
        return b;
    };
    block_a_ = MambaBlock(store, name + ".a", mc, branches(), Modality::Audio);
    block_v_ = MambaBlock(store, name + ".v", mc, branches(), Modality::Visual);
    if (mode == AmfMode::Full) mix_ = Linear(store, name + ".mix", 2 * config.d_model, config.d_model);
}

AdaptiveMambaFusion::Result AdaptiveMambaFusion::forward(const Tensor& f_a, const Tensor& f_v) const {
    if (f_a.shape() != f_v.shape()) {
        throw ShapeError("fusion inputs differ: " + shape_string(f_a.shape()) + " vs " + shape_string(f_v.shape()));
    }
    Result r;
    r.a = block_a_.forward(f_a);
    r.v = block_v_.forward(f_v);
    r.mix = mode_ == AmfMode::Full ? mix_(concat({r.a, r.v}, 1)) : Tensor::zeros(f_a.shape());
    return r;
}

MambaFeatureEnhancement::MambaFeatureEnhancement(ParamStore& store, const std::string& name, std::size_t d)
    : p_(store, name + ".p", d, d), q_(store, name + ".q", d, d) {}

MambaFeatureEnhancement::Result MambaFeatureEnhancement::forward(const Tensor& f_a, const Tensor& f_v,
                                                                 const Tensor& f_mix) const {
    if (f_a.shape() != f_v.shape() || f_a.shape() != f_mix.shape()) throw ShapeError("enhancement inputs differ in shape");
    const Tensor e = sigmoid(add(p_(mul(f_a, f_v)), q_(f_mix)));
    const Tensor factor = add_scalar(e, 1.0);
    return {mul(f_a, factor), mul(f_v, factor), e};
}

TwoLayerMlp::TwoLayerMlp(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out)
    : first_(store, name + ".0", in, hidden),
      // Small output layer so text conditioning starts close to the identity.
      second_(store, name + ".1", hidden, out, true, 0.02) {}

Tensor plsim_fuse(const Tensor& f, const Tensor& scale, const Tensor& bias) {
    if (scale.shape() != f.shape() || bias.shape() != f.shape()) throw ShapeError("semantic parameters must match features");
    return add(add(mul(f, scale), bias), f);
}

SemanticInteraction::SemanticInteraction(ParamStore& store, const std::string& name, std::size_t text_dim, std::size_t d)
    : audio_scale_(store, name + ".audio_scale", text_dim, d, d),
      audio_bias_(store, name + ".audio_bias", text_dim, d, d),
      visual_scale_(store, name + ".visual_scale", text_dim, d, d),
      visual_bias_(store, name + ".visual_bias", text_dim, d, d) {}

SemanticInteraction::Params SemanticInteraction::parameters(const Tensor& text, Modality m) const {
    if (m == Modality::Audio) return {audio_scale_(text), audio_bias_(text)};
    return {visual_scale_(text), visual_bias_(text)};
}

Tensor SemanticInteraction::forward(const Tensor& f, const Tensor& text, Modality m) const {
    if (text.rank() != 2 || text.dim(0) != f.dim(0)) throw ShapeError("text embedding must be [T, text_dim]");
    const Params p = parameters(text, m);
    return plsim_fuse(f, p.scale, p.bias);
}

Attention::Attention(ParamStore& store, const std::string& name, std::size_t d)
    : q_(store, name + ".q", d, d), k_(store, name + ".k", d, d), v_(store, name + ".v", d, d) {}

Attention::Result Attention::forward(const Tensor& query_source, const Tensor& key_source) const {
    const Tensor q = q_(query_source);
    const Tensor k = k_(key_source);
    const Tensor v = v_(key_source);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
    const Tensor w = softmax(scale(matmul(q, transpose(k)), inv_sqrt_d), 1);
    return {matmul(w, v), w};
}

HybridAttentionTail::HybridAttentionTail(ParamStore& store, const std::string& name, std::size_t d)
    : self_(store, name + ".self", d), cross_(store, name + ".cross", d) {}

HybridAttentionTail::Result HybridAttentionTail::forward(const Tensor& f_a, const Tensor& f_v) const {
    const Tensor a = add(add(f_a, self_.forward(f_a, f_a).output), cross_.forward(f_a, f_v).output);
    const Tensor v = add(add(f_v, self_.forward(f_v, f_v).output), cross_.forward(f_v, f_a).output);
    return {a, v};
}

MmilHead::MmilHead(ParamStore& store, const std::string& name, std::size_t d, std::size_t classes, double classifier_std)
    : classifier_(store, name + ".classifier", d, classes, true, classifier_std),
      time_attention_(store, name + ".time_attention", d, classes),
      modality_attention_(store, name + ".modality_attention", d, classes) {}

Tensor mmil_pool(const Tensor& seg_a, const Tensor& seg_v, const Tensor& time_a, const Tensor& time_v,
                 const Tensor& modality) {
    const std::size_t C = seg_a.dim(1);
    const Tensor per_modality = concat({sum(mul(time_a, seg_a), 0), sum(mul(time_v, seg_v), 0)}, 0);  // [2, C]
    return reshape(sum(mul(modality, per_modality), 0), {C});
}

ModelOutputs MmilHead::forward(const Tensor& g_a, const Tensor& g_v) const {
    ModelOutputs out;
    out.seg_prob_a = sigmoid(classifier_(g_a));
    out.seg_prob_v = sigmoid(classifier_(g_v));
    out.time_attention_a = softmax(time_attention_(g_a), 0);
    out.time_attention_v = softmax(time_attention_(g_v), 0);
    out.modality_attention =
        softmax(concat({mean(modality_attention_(g_a), 0), mean(modality_attention_(g_v), 0)}, 0), 0);
    out.video_prob = mmil_pool(out.seg_prob_a, out.seg_prob_v, out.time_attention_a, out.time_attention_v,
                               out.modality_attention);
    return out;
}

}  // namespace mug::model
