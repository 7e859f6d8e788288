#pragma once

// Audio-visual video parsing network:
//   input projections -> temporal-spatial attention -> adaptive mamba fusion
//   -> mamba feature enhancement -> pseudo-label semantic interaction
//   -> hybrid attention tail -> multimodal multiple-instance head.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mug/dataset.hpp"
#include "mug/labels.hpp"
#include "mug/modality.hpp"
#include "mug/nn.hpp"
#include "mug/ssm.hpp"
#include "mug/tensor.hpp"

namespace mug::model {

// Full: shared B handles across modalities plus the mixed feature.
// Private: the same three-direction blocks per modality, no sharing, no mix.
// Off: the stage is skipped.
enum class AmfMode { Full, Private, Off };

struct ModelConfig {
    std::size_t segments = 10;
    std::size_t d_model = 64;
    std::size_t classes = 25;
    std::size_t state = 16;
    std::size_t expand = 2;
    std::size_t conv_kernel = 4;
    std::size_t dt_rank = 0;  // 0: ceil(d_model / 16)
    std::size_t text_dim = 64;
    std::size_t audio_dim = 32;
    std::size_t visual_dim = 48;
    double lambda_a = 1.0;
    double lambda_v = 1.0;
    double classifier_init_std = 0.02;
    ssm::ScanKernel kernel = ssm::ScanKernel::Sequential;
    std::uint64_t seed = 0;

    bool use_tsa = true;
    AmfMode amf = AmfMode::Full;
    bool use_mfe = true;
    bool use_plsim = true;

    void validate() const;
    ssm::MambaConfig mamba(std::size_t width) const;

    // Full-size widths: 512-d fused features over 128-d audio and 2048-d
    // visual inputs, 512-d text embeddings.
    static ModelConfig full_scale();
};

struct StageFeatures {
    Tensor input_a, input_v;
    Tensor tsa_a, tsa_v;
    Tensor amf_a, amf_v, amf_mix;
    Tensor mfe_a, mfe_v;
    Tensor plsim_a, plsim_v;
    Tensor han_a, han_v;
};

struct ModelOutputs {
    Tensor seg_prob_a;          // [T, C]
    Tensor seg_prob_v;          // [T, C]
    Tensor video_prob;          // [C]
    Tensor time_attention_a;    // [T, C], columns sum to 1
    Tensor time_attention_v;
    Tensor modality_attention;  // [2, C], row 0 audio; columns sum to 1
    StageFeatures stages;
};

// Channel weights from avg/max pooling over time through one shared
// length-1 mamba block, then temporal weights from channel-pooled maps.
class TemporalSpatialAttention {
public:
    TemporalSpatialAttention() = default;
    TemporalSpatialAttention(ParamStore& store, const std::string& name, const ModelConfig& config);

    struct Result {
        Tensor output;           // [T, d]
        Tensor channel_weights;  // [1, d] in (0,1)
        Tensor temporal_weights; // [T, 1] in (0,1)
    };
    Result forward(const Tensor& f) const;

private:
    ssm::MambaBlock channel_;
    ssm::MambaBlock temporal_;
    Linear temporal_out_;
};

class AdaptiveMambaFusion {
public:
    AdaptiveMambaFusion() = default;
    AdaptiveMambaFusion(ParamStore& store, const std::string& name, const ModelConfig& config, AmfMode mode);

    struct Result {
        Tensor a, v, mix;
    };
    Result forward(const Tensor& f_a, const Tensor& f_v) const;

    // Forward, backward, dynamic; empty in Private mode.
    const std::vector<std::shared_ptr<ssm::SharedMatrixHandle>>& shared() const { return shared_; }

private:
    AmfMode mode_ = AmfMode::Full;
    std::vector<std::shared_ptr<ssm::SharedMatrixHandle>> shared_;
    ssm::MambaBlock block_a_;
    ssm::MambaBlock block_v_;
    Linear mix_;
};

// e = sigmoid(P(f_a * f_v) + Q(f_mix)); f_m * (1 + e).
class MambaFeatureEnhancement {
public:
    MambaFeatureEnhancement() = default;
    MambaFeatureEnhancement(ParamStore& store, const std::string& name, std::size_t d);

    struct Result {
        Tensor a, v;
        Tensor gate;  // e, [T, d]
    };
    Result forward(const Tensor& f_a, const Tensor& f_v, const Tensor& f_mix) const;

private:
    Linear p_;
    Linear q_;
};

// Deterministic stand-in for a frozen text encoder: every prompt maps to a
// fixed unit vector seeded by its FNV-1a hash.
class TextEncoder {
public:
    TextEncoder(data::Vocabulary vocabulary, std::size_t dim);

    static std::string prompt(Modality m, const std::string& category);
    Tensor category_vector(Modality m, std::size_t category) const;  // [dim]
    // Mean of each segment's category vectors, zero for empty or null rows.
    Tensor embed(const data::LabelMatrix& labels, Modality m) const;  // [T, dim]
    // Same, from category names; unknown names raise VocabularyError.
    Tensor embed(const std::vector<std::vector<std::string>>& segments, Modality m) const;

    std::size_t dim() const { return dim_; }
    const data::Vocabulary& vocabulary() const { return vocabulary_; }

private:
    data::Vocabulary vocabulary_;
    std::size_t dim_;
    std::array<std::vector<double>, 2> table_;  // [C * dim] per modality
};

class TwoLayerMlp {
public:
    TwoLayerMlp() = default;
    TwoLayerMlp(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out);
    Tensor operator()(const Tensor& x) const { return second_(relu(first_(x))); }

private:
    Linear first_;
    Linear second_;
};

// output = f * scale + bias + f
Tensor plsim_fuse(const Tensor& f, const Tensor& scale, const Tensor& bias);

class SemanticInteraction {
public:
    SemanticInteraction() = default;
    SemanticInteraction(ParamStore& store, const std::string& name, std::size_t text_dim, std::size_t d);

    struct Params {
        Tensor scale, bias;  // [T, d]
    };
    Params parameters(const Tensor& text, Modality m) const;
    Tensor forward(const Tensor& f, const Tensor& text, Modality m) const;

private:
    TwoLayerMlp audio_scale_, audio_bias_, visual_scale_, visual_bias_;
};

// Single-head scaled dot-product attention with biased Q/K/V maps.
class Attention {
public:
    Attention() = default;
    Attention(ParamStore& store, const std::string& name, std::size_t d);

    struct Result {
        Tensor output;   // [Tq, d]
        Tensor weights;  // [Tq, Tk], rows sum to 1
    };
    Result forward(const Tensor& query_source, const Tensor& key_source) const;

private:
    Linear q_, k_, v_;
};

// g_m = f_m + SelfAttn(f_m) + CrossAttn(f_m <- f_other); weights shared by
// both modalities.
class HybridAttentionTail {
public:
    HybridAttentionTail() = default;
    HybridAttentionTail(ParamStore& store, const std::string& name, std::size_t d);

    struct Result {
        Tensor a, v;
    };
    Result forward(const Tensor& f_a, const Tensor& f_v) const;
    const Attention& self_attention() const { return self_; }
    const Attention& cross_attention() const { return cross_; }

private:
    Attention self_;
    Attention cross_;
};

class MmilHead {
public:
    MmilHead() = default;
    MmilHead(ParamStore& store, const std::string& name, std::size_t d, std::size_t classes, double classifier_std);

    // Fills the probability and attention fields of ModelOutputs.
    ModelOutputs forward(const Tensor& g_a, const Tensor& g_v) const;

private:
    Linear classifier_;
    Linear time_attention_;
    Linear modality_attention_;
};

// Pools per-segment probabilities into a video-level prediction:
//   video[c] = sum_m mod[m,c] * sum_t time_m[t,c] * seg_m[t,c]
Tensor mmil_pool(const Tensor& seg_a, const Tensor& seg_v, const Tensor& time_a, const Tensor& time_v,
                 const Tensor& modality);

class AvMamba {
public:
    AvMamba(const ModelConfig& config, const data::Vocabulary& vocabulary);
    AvMamba(const AvMamba&) = delete;
    AvMamba& operator=(const AvMamba&) = delete;

    // pseudo_a / pseudo_v feed the semantic interaction stage; they may be
    // null when that stage is disabled.
    ModelOutputs forward(const Tensor& audio, const Tensor& visual, const data::LabelMatrix* pseudo_a,
                         const data::LabelMatrix* pseudo_v) const;
    ModelOutputs forward(const data::VideoRecord& video) const;
    std::vector<ModelOutputs> forward(const std::vector<const data::VideoRecord*>& batch) const;

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    std::size_t parameter_count() const { return store_.parameter_count(); }
    const AdaptiveMambaFusion* amf() const { return config_.amf == AmfMode::Off ? nullptr : &amf_; }
    const TextEncoder& text_encoder() const { return text_; }

private:
    ModelConfig config_;
    ParamStore store_;
    TextEncoder text_;
    Linear input_a_, input_v_;
    TemporalSpatialAttention tsa_a_, tsa_v_;
    AdaptiveMambaFusion amf_;
    MambaFeatureEnhancement mfe_;
    SemanticInteraction plsim_;
    HybridAttentionTail han_;
    MmilHead head_;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy of clamped probabilities; `mask` ([rows], 0/1)
// drops whole rows and the mean runs over the kept rows. Zero if none kept.
Tensor binary_cross_entropy(const Tensor& prob, const Tensor& target, const Tensor& mask = {});

struct LossTargets {
    Tensor video_label;  // [C]
    Tensor pseudo_a;     // [T, C]
    Tensor pseudo_v;
    Tensor mask_a;       // [T], 0 on unannotated rows
    Tensor mask_v;

    static LossTargets from_record(const data::VideoRecord& video);
};

// BCE(video) + lambda_a * BCE(seg_a, pseudo_a) + lambda_v * BCE(seg_v, pseudo_v)
Tensor compute_loss(const ModelOutputs& outputs, const LossTargets& targets, double lambda_a, double lambda_v);

}  // namespace mug::model
