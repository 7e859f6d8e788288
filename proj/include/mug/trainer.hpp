#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mug/checkpoint.hpp"
#include "mug/cmrc.hpp"
#include "mug/dataset.hpp"
#include "mug/metrics.hpp"
#include "mug/model.hpp"
#include "mug/synthetic.hpp"

namespace mug::trainer {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double learning_rate = 3e-4;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    bool eval_train = false;  // also score the (unaugmented) training split each epoch

    void validate() const;
};

struct EvalConfig {
    double segment_threshold = 0.5;
    double video_threshold = 0.5;
    double iou_threshold = 0.5;

    void validate() const;
};

// Everything a run depends on. When `data_dir` is empty the splits are
// generated in memory from `synth`; otherwise DATA_DIR/train and DATA_DIR/val
// are loaded. Segment count, class count and feature widths in `model` are
// always taken from the data.
struct ExperimentConfig {
    model::ModelConfig model;
    TrainConfig train;
    data::SynthConfig synth;
    augment::AugmentConfig augment;
    EvalConfig eval;
    std::filesystem::path data_dir;

    // Sets the model, training, synthetic and augmentation seeds together.
    void set_seed(std::uint64_t seed);
    void validate() const;
};

// Unknown keys and ill-typed values raise ConfigError naming `source` and the
// dotted field path.
ExperimentConfig parse_config(const nlohmann::ordered_json& j, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

struct Splits {
    data::Dataset train;
    data::Dataset val;
};

Splits load_splits(const ExperimentConfig& config);

// Copies the data-dependent sizes into a model config.
model::ModelConfig fit_model_to_data(model::ModelConfig model, const data::Dataset& dataset);

std::unique_ptr<model::AvMamba> build_model(const ExperimentConfig& config, const data::Dataset& dataset);

// Value copies of every parameter, detached from the live model.
std::vector<NamedTensor> snapshot(const model::AvMamba& model);
void restore(model::AvMamba& model, const std::vector<NamedTensor>& state);

using Predictor = std::function<metrics::SegmentPrediction(const data::VideoRecord&)>;

Predictor model_predictor(const model::AvMamba& model, const EvalConfig& eval);
// Debug path: predicts the ground truth itself.
Predictor oracle_predictor();

std::vector<metrics::SegmentPrediction> predict(const Predictor& predictor, const data::Dataset& dataset);
metrics::MetricReport evaluate(const Predictor& predictor, const data::Dataset& dataset, const EvalConfig& eval);
metrics::MetricReport evaluate(const model::AvMamba& model, const data::Dataset& dataset, const EvalConfig& eval);
void write_predictions(const std::filesystem::path& path, const std::vector<metrics::SegmentPrediction>& preds,
                       const data::Vocabulary& vocabulary);

// Builds the CMRC batch for the training split; empty when the multiplier
// (or explicit target) is zero.
augment::CmrcBatch augment_training_split(const data::Dataset& train, const augment::AugmentConfig& config);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double seconds = 0.0;
    std::optional<metrics::MetricReport> val;
    std::optional<metrics::MetricReport> train;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    std::size_t parameter_count = 0;
    std::size_t base_videos = 0;
    std::size_t augmented_videos = 0;
    std::size_t best_epoch = 0;
    double best_score = -1.0;  // validation segment-level Type@AV

    void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
    TrainLog log;
    std::vector<NamedTensor> best;   // best validation epoch, or the last epoch without validation
    std::vector<NamedTensor> final;
};

// Return false to stop after this epoch.
using EpochCallback = std::function<bool(const EpochLog&, const model::AvMamba&)>;

// Trains on `splits.train` plus its CMRC batch, validating on `splits.val`
// when it has ground truth. Non-finite losses raise TrainingError naming the
// first non-finite tensor.
TrainResult train(const ExperimentConfig& config, const Splits& splits, const EpochCallback& on_epoch = {});

// Writes checkpoint.mugc (best), final.mugc, train_log.csv and config.json.
void save_run(const std::filesystem::path& dir, const ExperimentConfig& config, const TrainResult& result);

metrics::MetricReport evaluate_checkpoint(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                          const data::Dataset& dataset);

enum class Component { Cmrc, Tsa, Amf, Mfe, Plsim };

Component parse_component(const std::string& name);
const char* component_name(Component c);
// TSA, MFE, PLSIM become identities; AMF runs private scans without shared
// matrices or mix; CMRC sets the multiplier to zero.
ExperimentConfig ablated_config(ExperimentConfig config, Component c);

struct AblationResult {
    metrics::MetricReport report;  // validation report of the best checkpoint
    TrainLog log;
};

AblationResult ablate(const ExperimentConfig& config, Component c, const Splits& splits);

}  // namespace mug::trainer
