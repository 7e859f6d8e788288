#include <cmath>

#include "mug/error.hpp"
#include "mug/model.hpp"

namespace mug::model {

void ModelConfig::validate() const {
    const std::pair<std::size_t, const char*> dims[] = {
        {segments, "segments"}, {d_model, "d_model"},     {classes, "classes"},       {state, "state"},
        {expand, "expand"},     {conv_kernel, "conv_kernel"}, {text_dim, "text_dim"}, {audio_dim, "audio_dim"},
        {visual_dim, "visual_dim"}};
    for (auto [v, name] : dims) {
        if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
    }
    if (!(lambda_a >= 0.0) || !(lambda_v >= 0.0) || !std::isfinite(lambda_a) || !std::isfinite(lambda_v)) {
        throw ConfigError("model.lambda_a and model.lambda_v must be finite and >= 0");
    }
    if (!(classifier_init_std > 0.0) || !std::isfinite(classifier_init_std)) {
        throw ConfigError("model.classifier_init_std must be positive");
    }
}

ssm::MambaConfig ModelConfig::mamba(std::size_t width) const {
    ssm::MambaConfig m;
    m.d_model = width;
    m.expand = expand;
    m.state = state;
    m.conv_kernel = conv_kernel;
    m.dt_rank = dt_rank;
    m.kernel = kernel;
    return m;
}

ModelConfig ModelConfig::full_scale() {
    ModelConfig c;
    c.segments = 10;
    c.d_model = 512;
    c.classes = 25;
    c.state = 16;
    c.expand = 2;
    c.conv_kernel = 4;
    c.text_dim = 512;
    c.audio_dim = 128;
    c.visual_dim = 2048;
    return c;
}

AvMamba::AvMamba(const ModelConfig& config, const data::Vocabulary& vocabulary)
    : config_(config), store_(config.seed), text_(vocabulary, config.text_dim) {
    config.validate();
    if (vocabulary.size() != config.classes) {
        throw ConfigError("vocabulary has " + std::to_string(vocabulary.size()) + " classes but model.classes is " +
                          std::to_string(config.classes));
    }
    const std::size_t d = config.d_model;
    input_a_ = Linear(store_, "input.a", config.audio_dim, d);
    input_v_ = Linear(store_, "input.v", config.visual_dim, d);
    if (config.use_tsa) {
        tsa_a_ = TemporalSpatialAttention(store_, "tsa.a", config);
        tsa_v_ = TemporalSpatialAttention(store_, "tsa.v", config);
    }
    if (config.amf != AmfMode::Off) amf_ = AdaptiveMambaFusion(store_, "amf", config, config.amf);
    if (config.use_mfe) mfe_ = MambaFeatureEnhancement(store_, "mfe", d);
    if (config.use_plsim) plsim_ = SemanticInteraction(store_, "plsim", config.text_dim, d);
    han_ = HybridAttentionTail(store_, "han", d);
    head_ = MmilHead(store_, "mmil", d, config.classes, config.classifier_init_std);
}

ModelOutputs AvMamba::forward(const Tensor& audio, const Tensor& visual, const data::LabelMatrix* pseudo_a,
                              const data::LabelMatrix* pseudo_v) const {
    if (audio.rank() != 2 || audio.dim(1) != config_.audio_dim) {
        throw ShapeError("audio features must be [T, " + std::to_string(config_.audio_dim) + "], got " +
                         shape_string(audio.shape()));
    }
    if (visual.rank() != 2 || visual.dim(1) != config_.visual_dim) {
        throw ShapeError("visual features must be [T, " + std::to_string(config_.visual_dim) + "], got " +
                         shape_string(visual.shape()));
    }
    const std::size_t T = audio.dim(0);
    if (visual.dim(0) != T) throw ShapeError("audio and visual segment counts differ");

    StageFeatures s;
    s.input_a = input_a_(audio);
    s.input_v = input_v_(visual);
    s.tsa_a = config_.use_tsa ? tsa_a_.forward(s.input_a).output : s.input_a;
    s.tsa_v = config_.use_tsa ? tsa_v_.forward(s.input_v).output : s.input_v;
    if (config_.amf != AmfMode::Off) {
        auto r = amf_.forward(s.tsa_a, s.tsa_v);
        s.amf_a = r.a;
        s.amf_v = r.v;
        s.amf_mix = r.mix;
    } else {
        s.amf_a = s.tsa_a;
        s.amf_v = s.tsa_v;
        s.amf_mix = Tensor::zeros(s.tsa_a.shape());
    }
    if (config_.use_mfe) {
        auto r = mfe_.forward(s.amf_a, s.amf_v, s.amf_mix);
        s.mfe_a = r.a;
        s.mfe_v = r.v;
    } else {
        s.mfe_a = s.amf_a;
        s.mfe_v = s.amf_v;
    }
    if (config_.use_plsim) {
        if (!pseudo_a || !pseudo_v) throw ContractError("semantic interaction needs pseudo-labels for both modalities");
        if (pseudo_a->segments() != T || pseudo_v->segments() != T) {
            throw ShapeError("pseudo-label segment count does not match features");
        }
        s.plsim_a = plsim_.forward(s.mfe_a, text_.embed(*pseudo_a, Modality::Audio), Modality::Audio);
        s.plsim_v = plsim_.forward(s.mfe_v, text_.embed(*pseudo_v, Modality::Visual), Modality::Visual);
    } else {
        s.plsim_a = s.mfe_a;
        s.plsim_v = s.mfe_v;
    }
    auto g = han_.forward(s.plsim_a, s.plsim_v);
    s.han_a = g.a;
    s.han_v = g.v;
    ModelOutputs out = head_.forward(s.han_a, s.han_v);
    out.stages = std::move(s);
    return out;
}

ModelOutputs AvMamba::forward(const data::VideoRecord& video) const {
    return forward(video.audio, video.visual, &video.pseudo_a, &video.pseudo_v);
}

std::vector<ModelOutputs> AvMamba::forward(const std::vector<const data::VideoRecord*>& batch) const {
    std::vector<ModelOutputs> out;
    out.reserve(batch.size());
    for (const data::VideoRecord* v : batch) out.push_back(forward(*v));
    return out;
}

}  // namespace mug::model
