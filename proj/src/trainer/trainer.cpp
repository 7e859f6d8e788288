#include "mug/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "mug/error.hpp"
#include "mug/optim.hpp"

namespace mug::trainer {

namespace fs = std::filesystem;
using data::Dataset;
using data::VideoRecord;
using metrics::MetricReport;

Splits load_splits(const ExperimentConfig& config) {
    if (config.data_dir.empty()) {
        const data::SynthDataset s = data::generate_synthetic_dataset(config.synth);
        return {s.train.to_dataset(), s.val.to_dataset()};
    }
    Splits out{data::load_dataset(config.data_dir / "train"), {}};
    if (fs::exists(config.data_dir / "val")) out.val = data::load_dataset(config.data_dir / "val");
    return out;
}

model::ModelConfig fit_model_to_data(model::ModelConfig m, const Dataset& d) {
    if (d.videos.empty()) throw ContractError("dataset '" + d.split + "' has no videos");
    m.segments = d.segments;
    m.classes = d.vocabulary.size();
    m.audio_dim = d.audio_dim();
    m.visual_dim = d.visual_dim();
    return m;
}

std::unique_ptr<model::AvMamba> build_model(const ExperimentConfig& config, const Dataset& dataset) {
    return std::make_unique<model::AvMamba>(fit_model_to_data(config.model, dataset), dataset.vocabulary);
}

std::vector<NamedTensor> snapshot(const model::AvMamba& model) {
    std::vector<NamedTensor> out;
    for (const NamedTensor& p : model.params().named()) {
        out.push_back({p.name, Tensor::from_vector(p.tensor.shape(), p.tensor.to_vector())});
    }
    return out;
}

void restore(model::AvMamba& model, const std::vector<NamedTensor>& state) { restore_into(state, model.params().named()); }

Predictor model_predictor(const model::AvMamba& model, const EvalConfig& eval) {
    return [&model, eval](const VideoRecord& v) {
        NoGradGuard guard;
        const model::ModelOutputs out = model.forward(v);
        return metrics::binarize(v.id, out.seg_prob_a, out.seg_prob_v, out.video_prob, eval.segment_threshold,
                                 eval.video_threshold);
    };
}

Predictor oracle_predictor() {
    return [](const VideoRecord& v) {
        if (!v.truth) throw EvaluationError("video '" + v.id + "' has no ground truth to inject");
        return metrics::SegmentPrediction{v.id, v.truth->audio, v.truth->visual};
    };
}

std::vector<metrics::SegmentPrediction> predict(const Predictor& predictor, const Dataset& dataset) {
    std::vector<metrics::SegmentPrediction> out;
    out.reserve(dataset.videos.size());
    for (const VideoRecord& v : dataset.videos) out.push_back(predictor(v));
    return out;
}

MetricReport evaluate(const Predictor& predictor, const Dataset& dataset, const EvalConfig& eval) {
    data::LabelTable gt;
    for (const VideoRecord& v : dataset.videos) {
        if (!v.truth) throw EvaluationError("video '" + v.id + "' in split '" + dataset.split + "' has no ground truth");
        gt.emplace(v.id, *v.truth);
    }
    return metrics::aggregate_report(predict(predictor, dataset), gt, eval.iou_threshold);
}

MetricReport evaluate(const model::AvMamba& model, const Dataset& dataset, const EvalConfig& eval) {
    return evaluate(model_predictor(model, eval), dataset, eval);
}

void write_predictions(const fs::path& path, const std::vector<metrics::SegmentPrediction>& preds,
                       const data::Vocabulary& vocabulary) {
    data::LabelTable table;
    for (const auto& p : preds) {
        data::VideoLabels l;
        l.audio = p.audio;
        l.visual = p.visual;
        table.emplace(p.video_id, std::move(l));
    }
    data::write_label_csv(path, table, vocabulary);
}

augment::CmrcBatch augment_training_split(const Dataset& train, const augment::AugmentConfig& config) {
    const std::size_t base = train.videos.size();
    const std::size_t target = config.resolve_target(base);
    if (target == 0) return {};
    const auto dist = augment::count_label_distribution(train.videos, config.resolve_min_count(base));
    return augment::generate_cmrc_batch(train.videos, dist, target, config.seed, config.candidates);
}

namespace {

bool all_finite(const Tensor& t) {
    if (!t.defined()) return true;
    return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

std::string first_non_finite(const model::AvMamba& m, const VideoRecord& v, const model::ModelOutputs& out) {
    for (const NamedTensor& p : m.params().named()) {
        if (!all_finite(p.tensor)) return "parameter '" + p.name + "'";
    }
    if (!all_finite(v.audio)) return "audio features of '" + v.id + "'";
    if (!all_finite(v.visual)) return "visual features of '" + v.id + "'";
    const model::StageFeatures& s = out.stages;
    const std::pair<const char*, const Tensor*> stages[] = {
        {"input_a", &s.input_a}, {"input_v", &s.input_v}, {"tsa_a", &s.tsa_a},     {"tsa_v", &s.tsa_v},
        {"amf_a", &s.amf_a},     {"amf_v", &s.amf_v},     {"amf_mix", &s.amf_mix}, {"mfe_a", &s.mfe_a},
        {"mfe_v", &s.mfe_v},     {"plsim_a", &s.plsim_a}, {"plsim_v", &s.plsim_v}, {"han_a", &s.han_a},
        {"han_v", &s.han_v},     {"seg_prob_a", &out.seg_prob_a}, {"seg_prob_v", &out.seg_prob_v},
        {"time_attention_a", &out.time_attention_a}, {"time_attention_v", &out.time_attention_v},
        {"modality_attention", &out.modality_attention}, {"video_prob", &out.video_prob}};
    for (auto [name, t] : stages) {
        if (!all_finite(*t)) return "activation '" + std::string(name) + "' of '" + v.id + "'";
    }
    return "loss of '" + v.id + "'";
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const Splits& splits, const EpochCallback& on_epoch) {
    config.validate();
    const auto model = build_model(config, splits.train);
    const augment::CmrcBatch extra = augment_training_split(splits.train, config.augment);

    std::vector<const VideoRecord*> pool;
    for (const VideoRecord& v : splits.train.videos) pool.push_back(&v);
    for (const VideoRecord& v : extra.records) pool.push_back(&v);
    std::vector<model::LossTargets> targets;
    targets.reserve(pool.size());
    for (const VideoRecord* v : pool) targets.push_back(model::LossTargets::from_record(*v));

    const model::ModelConfig& mc = model->config();
    AdamWOptions opts;
    opts.learning_rate = config.train.learning_rate;
    opts.weight_decay = config.train.weight_decay;
    AdamW opt(model->params().tensors(), opts);

    TrainResult result;
    TrainLog& log = result.log;
    log.parameter_count = model->parameter_count();
    log.base_videos = splits.train.videos.size();
    log.augmented_videos = extra.records.size();
    const bool validate = !splits.val.videos.empty() && splits.val.has_ground_truth();

    std::vector<std::size_t> order(pool.size());
    for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(config.train.seed + epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += config.train.batch_size) {
            const std::size_t end = std::min(order.size(), b + config.train.batch_size);
            Tensor batch_loss;
            for (std::size_t i = b; i < end; ++i) {
                const VideoRecord& v = *pool[order[i]];
                model::ModelOutputs out;
                try {
                    out = model->forward(v);
                } catch (const Error& e) {
                    // Non-finite values can trip contract checks before any loss exists.
                    const std::string bad = first_non_finite(*model, v, out);
                    if (bad.starts_with("loss")) throw;
                    throw TrainingError("non-finite values at epoch " + std::to_string(epoch) + " (" + e.what() +
                                        "): first non-finite tensor is " + bad);
                }
                const Tensor loss = model::compute_loss(out, targets[order[i]], mc.lambda_a, mc.lambda_v);
                if (!std::isfinite(loss.item())) {
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ": first non-finite tensor is " +
                                        first_non_finite(*model, v, out));
                }
                loss_sum += loss.item();
                batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
            }
            scale(batch_loss, 1.0 / static_cast<double>(end - b)).backward();
            opt.step();
            opt.zero_grad();
        }

        EpochLog e;
        e.epoch = epoch;
        e.train_loss = loss_sum / static_cast<double>(pool.size());
        if (validate) {
            e.val = evaluate(*model, splits.val, config.eval);
            if (e.val->segment[3] > log.best_score) {
                log.best_score = e.val->segment[3];
                log.best_epoch = epoch;
                result.best = snapshot(*model);
            }
        }
        if (config.train.eval_train && splits.train.has_ground_truth()) e.train = evaluate(*model, splits.train, config.eval);
        e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.epochs.push_back(e);
        if (on_epoch && !on_epoch(e, *model)) break;
    }
    result.final = snapshot(*model);
    if (!validate) {
        result.best = result.final;
        log.best_epoch = log.epochs.back().epoch;
    }
    return result;
}

void TrainLog::write_csv(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    const bool has_val = std::any_of(epochs.begin(), epochs.end(), [](const EpochLog& e) { return e.val.has_value(); });
    const bool has_train = std::any_of(epochs.begin(), epochs.end(), [](const EpochLog& e) { return e.train.has_value(); });
    auto prefixed = [](const std::string& prefix) {
        std::string h = MetricReport::csv_header(), out = prefix;
        for (char c : h) out += c == ',' ? "," + prefix : std::string(1, c);
        return out;
    };
    out << "epoch,train_loss,seconds";
    if (has_val) out << ',' << prefixed("val_");
    if (has_train) out << ',' << prefixed("train_");
    out << '\n';
    const std::string blanks(2 * MetricReport::kScores - 1, ',');
    out.precision(17);
    for (const EpochLog& e : epochs) {
        out << e.epoch << ',' << e.train_loss << ',' << e.seconds;
        if (has_val) out << ',' << (e.val ? e.val->csv_row() : blanks);
        if (has_train) out << ',' << (e.train ? e.train->csv_row() : blanks);
        out << '\n';
    }
}

void save_run(const fs::path& dir, const ExperimentConfig& config, const TrainResult& result) {
    fs::create_directories(dir);
    save_checkpoint(dir / "checkpoint.mugc", result.best);
    save_checkpoint(dir / "final.mugc", result.final);
    result.log.write_csv(dir / "train_log.csv");
    save_config(dir / "config.json", config);
    nlohmann::ordered_json s = {{"parameters", result.log.parameter_count},
                                {"base_videos", result.log.base_videos},
                                {"augmented_videos", result.log.augmented_videos},
                                {"epochs", result.log.epochs.size()},
                                {"best_epoch", result.log.best_epoch},
                                {"best_val_segment_type_av", result.log.best_score}};
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << s.dump(2) << '\n';
}

MetricReport evaluate_checkpoint(const ExperimentConfig& config, const fs::path& checkpoint, const Dataset& dataset) {
    const auto model = build_model(config, dataset);
    restore(*model, load_checkpoint(checkpoint));
    return evaluate(*model, dataset, config.eval);
}

Component parse_component(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (n == "CMRC") return Component::Cmrc;
    if (n == "TSA") return Component::Tsa;
    if (n == "AMF") return Component::Amf;
    if (n == "MFE") return Component::Mfe;
    if (n == "PLSIM") return Component::Plsim;
    throw ConfigError("unknown component '" + name + "' (expected CMRC, TSA, AMF, MFE or PLSIM)");
}

const char* component_name(Component c) {
    switch (c) {
        case Component::Cmrc: return "CMRC";
        case Component::Tsa: return "TSA";
        case Component::Amf: return "AMF";
        case Component::Mfe: return "MFE";
        case Component::Plsim: return "PLSIM";
    }
    return "?";
}

ExperimentConfig ablated_config(ExperimentConfig config, Component c) {
    switch (c) {
        case Component::Cmrc:
            config.augment.multiplier = 0.0;
            config.augment.target_count.reset();
            break;
        case Component::Tsa: config.model.use_tsa = false; break;
        case Component::Amf: config.model.amf = model::AmfMode::Private; break;
        case Component::Mfe: config.model.use_mfe = false; break;
        case Component::Plsim: config.model.use_plsim = false; break;
    }
    return config;
}

AblationResult ablate(const ExperimentConfig& config, Component c, const Splits& splits) {
    const ExperimentConfig cfg = ablated_config(config, c);
    TrainResult r = train(cfg, splits);
    const auto model = build_model(cfg, splits.train);
    restore(*model, r.best);
    return {evaluate(*model, splits.val, cfg.eval), std::move(r.log)};
}

}  // namespace mug::trainer
