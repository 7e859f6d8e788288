#include <cmath>
#include <fstream>
#include <map>

#include "mug/error.hpp"
#include "mug/trainer.hpp"

namespace mug::trainer {

using json = nlohmann::ordered_json;

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("train.weight_decay must be >= 0");
}

void EvalConfig::validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open_unit(segment_threshold)) throw ConfigError("eval.segment_threshold must be in (0, 1)");
    if (!open_unit(video_threshold)) throw ConfigError("eval.video_threshold must be in (0, 1)");
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ConfigError("eval.iou_threshold must be in (0, 1]");
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
    model.seed = seed;
    train.seed = seed;
    synth.seed = seed;
    augment.seed = seed;
}

void ExperimentConfig::validate() const {
    model.validate();
    train.validate();
    synth.validate();
    augment.validate();
    eval.validate();
}

namespace {

// Applies one JSON object to a set of named fields, rejecting unknown keys.
class Section {
public:
    Section(const json& j, std::string source, std::string path) : j_(j), source_(std::move(source)), path_(std::move(path)) {
        if (!j.is_object()) fail(path_, "must be an object");
    }

    template <typename Fn>
    Section& field(const std::string& key, Fn&& apply) {
        handlers_.emplace(key, std::forward<Fn>(apply));
        return *this;
    }

    void run() const {
        for (const auto& [key, value] : j_.items()) {
            const auto it = handlers_.find(key);
            if (it == handlers_.end()) fail(qualified(key), "is not a known field");
            it->second(value, qualified(key));
        }
    }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw ConfigError(source_ + ": " + field + " " + what);
    }

    std::size_t size(const json& v, const std::string& field) const {
        if (!v.is_number_unsigned()) fail(field, "must be a non-negative integer");
        return v.get<std::size_t>();
    }
    std::uint64_t u64(const json& v, const std::string& field) const {
        if (!v.is_number_unsigned()) fail(field, "must be a non-negative integer");
        return v.get<std::uint64_t>();
    }
    double number(const json& v, const std::string& field) const {
        if (!v.is_number()) fail(field, "must be a number");
        return v.get<double>();
    }
    bool boolean(const json& v, const std::string& field) const {
        if (!v.is_boolean()) fail(field, "must be true or false");
        return v.get<bool>();
    }
    std::string string(const json& v, const std::string& field) const {
        if (!v.is_string()) fail(field, "must be a string");
        return v.get<std::string>();
    }

private:
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string source_;
    std::string path_;
    std::map<std::string, std::function<void(const json&, const std::string&)>> handlers_;
};

const char* kernel_name(ssm::ScanKernel k) { return k == ssm::ScanKernel::Parallel ? "parallel" : "sequential"; }

const char* amf_name(model::AmfMode m) {
    switch (m) {
        case model::AmfMode::Full: return "full";
        case model::AmfMode::Private: return "private";
        case model::AmfMode::Off: return "off";
    }
    return "?";
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::string& source) {
    ExperimentConfig c;
    Section root(j, source, "");
    root.field("data_dir", [&](const json& v, const std::string& f) { c.data_dir = root.string(v, f); });
    root.field("model", [&](const json& v, const std::string& f) {
        model::ModelConfig& m = c.model;
        Section s(v, source, f);
        s.field("d_model", [&](const json& x, const std::string& g) { m.d_model = s.size(x, g); })
            .field("state", [&](const json& x, const std::string& g) { m.state = s.size(x, g); })
            .field("expand", [&](const json& x, const std::string& g) { m.expand = s.size(x, g); })
            .field("conv_kernel", [&](const json& x, const std::string& g) { m.conv_kernel = s.size(x, g); })
            .field("dt_rank", [&](const json& x, const std::string& g) { m.dt_rank = s.size(x, g); })
            .field("text_dim", [&](const json& x, const std::string& g) { m.text_dim = s.size(x, g); })
            .field("lambda_a", [&](const json& x, const std::string& g) { m.lambda_a = s.number(x, g); })
            .field("lambda_v", [&](const json& x, const std::string& g) { m.lambda_v = s.number(x, g); })
            .field("classifier_init_std", [&](const json& x, const std::string& g) { m.classifier_init_std = s.number(x, g); })
            .field("seed", [&](const json& x, const std::string& g) { m.seed = s.u64(x, g); })
            .field("use_tsa", [&](const json& x, const std::string& g) { m.use_tsa = s.boolean(x, g); })
            .field("use_mfe", [&](const json& x, const std::string& g) { m.use_mfe = s.boolean(x, g); })
            .field("use_plsim", [&](const json& x, const std::string& g) { m.use_plsim = s.boolean(x, g); })
            .field("kernel", [&](const json& x, const std::string& g) {
                const std::string k = s.string(x, g);
                if (k == "sequential") m.kernel = ssm::ScanKernel::Sequential;
                else if (k == "parallel") m.kernel = ssm::ScanKernel::Parallel;
                else s.fail(g, "must be \"sequential\" or \"parallel\"");
            })
            .field("amf", [&](const json& x, const std::string& g) {
                const std::string k = s.string(x, g);
                if (k == "full") m.amf = model::AmfMode::Full;
                else if (k == "private") m.amf = model::AmfMode::Private;
                else if (k == "off") m.amf = model::AmfMode::Off;
                else s.fail(g, "must be \"full\", \"private\" or \"off\"");
            })
            .run();
    });
    root.field("train", [&](const json& v, const std::string& f) {
        TrainConfig& t = c.train;
        Section s(v, source, f);
        s.field("epochs", [&](const json& x, const std::string& g) { t.epochs = s.size(x, g); })
            .field("batch_size", [&](const json& x, const std::string& g) { t.batch_size = s.size(x, g); })
            .field("learning_rate", [&](const json& x, const std::string& g) { t.learning_rate = s.number(x, g); })
            .field("weight_decay", [&](const json& x, const std::string& g) { t.weight_decay = s.number(x, g); })
            .field("seed", [&](const json& x, const std::string& g) { t.seed = s.u64(x, g); })
            .field("eval_train", [&](const json& x, const std::string& g) { t.eval_train = s.boolean(x, g); })
            .run();
    });
    root.field("synth", [&](const json& v, const std::string& f) {
        data::SynthConfig& y = c.synth;
        Section s(v, source, f);
        s.field("seed", [&](const json& x, const std::string& g) { y.seed = s.u64(x, g); })
            .field("videos", [&](const json& x, const std::string& g) { y.videos = s.size(x, g); })
            .field("val_videos", [&](const json& x, const std::string& g) { y.val_videos = s.size(x, g); })
            .field("segments", [&](const json& x, const std::string& g) { y.segments = s.size(x, g); })
            .field("classes", [&](const json& x, const std::string& g) { y.classes = s.size(x, g); })
            .field("audio_dim", [&](const json& x, const std::string& g) { y.audio_dim = s.size(x, g); })
            .field("visual_dim", [&](const json& x, const std::string& g) { y.visual_dim = s.size(x, g); })
            .field("min_events", [&](const json& x, const std::string& g) { y.min_events = s.size(x, g); })
            .field("max_events", [&](const json& x, const std::string& g) { y.max_events = s.size(x, g); })
            .field("noise", [&](const json& x, const std::string& g) { y.noise = s.number(x, g); })
            .field("activation", [&](const json& x, const std::string& g) { y.activation = s.number(x, g); })
            .field("flip_rate", [&](const json& x, const std::string& g) { y.flip_rate = s.number(x, g); })
            .field("av_correlation", [&](const json& x, const std::string& g) { y.av_correlation = s.number(x, g); })
            .field("null_rate", [&](const json& x, const std::string& g) { y.null_rate = s.number(x, g); })
            .field("patch_rate", [&](const json& x, const std::string& g) { y.patch_rate = s.number(x, g); })
            .field("discard_rate", [&](const json& x, const std::string& g) { y.discard_rate = s.number(x, g); })
            .run();
    });
    root.field("augment", [&](const json& v, const std::string& f) {
        augment::AugmentConfig& a = c.augment;
        Section s(v, source, f);
        s.field("multiplier", [&](const json& x, const std::string& g) { a.multiplier = s.number(x, g); })
            .field("target_count", [&](const json& x, const std::string& g) { a.target_count = s.size(x, g); })
            .field("min_count", [&](const json& x, const std::string& g) { a.min_count = s.size(x, g); })
            .field("seed", [&](const json& x, const std::string& g) { a.seed = s.u64(x, g); })
            .field("candidates", [&](const json& x, const std::string& g) { a.candidates = s.size(x, g); })
            .run();
    });
    root.field("eval", [&](const json& v, const std::string& f) {
        EvalConfig& e = c.eval;
        Section s(v, source, f);
        s.field("segment_threshold", [&](const json& x, const std::string& g) { e.segment_threshold = s.number(x, g); })
            .field("video_threshold", [&](const json& x, const std::string& g) { e.video_threshold = s.number(x, g); })
            .field("iou_threshold", [&](const json& x, const std::string& g) { e.iou_threshold = s.number(x, g); })
            .run();
    });
    root.run();
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": malformed JSON: " + e.what());
    }
    return parse_config(j, path.string());
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    if (!c.data_dir.empty()) j["data_dir"] = c.data_dir.string();
    const model::ModelConfig& m = c.model;
    j["model"] = {{"d_model", m.d_model},
                  {"state", m.state},
                  {"expand", m.expand},
                  {"conv_kernel", m.conv_kernel},
                  {"dt_rank", m.dt_rank},
                  {"text_dim", m.text_dim},
                  {"lambda_a", m.lambda_a},
                  {"lambda_v", m.lambda_v},
                  {"classifier_init_std", m.classifier_init_std},
                  {"kernel", kernel_name(m.kernel)},
                  {"seed", m.seed},
                  {"use_tsa", m.use_tsa},
                  {"amf", amf_name(m.amf)},
                  {"use_mfe", m.use_mfe},
                  {"use_plsim", m.use_plsim}};
    const TrainConfig& t = c.train;
    j["train"] = {{"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"learning_rate", t.learning_rate},
                  {"weight_decay", t.weight_decay},
                  {"seed", t.seed},
                  {"eval_train", t.eval_train}};
    const data::SynthConfig& y = c.synth;
    j["synth"] = {{"seed", y.seed},
                  {"videos", y.videos},
                  {"val_videos", y.val_videos},
                  {"segments", y.segments},
                  {"classes", y.classes},
                  {"audio_dim", y.audio_dim},
                  {"visual_dim", y.visual_dim},
                  {"min_events", y.min_events},
                  {"max_events", y.max_events},
                  {"noise", y.noise},
                  {"activation", y.activation},
                  {"flip_rate", y.flip_rate},
                  {"av_correlation", y.av_correlation},
                  {"null_rate", y.null_rate},
                  {"patch_rate", y.patch_rate},
                  {"discard_rate", y.discard_rate}};
    const augment::AugmentConfig& a = c.augment;
    j["augment"] = {{"multiplier", a.multiplier}, {"seed", a.seed}, {"candidates", a.candidates}};
    if (a.target_count) j["augment"]["target_count"] = *a.target_count;
    if (a.min_count) j["augment"]["min_count"] = *a.min_count;
    j["eval"] = {{"segment_threshold", c.eval.segment_threshold},
                 {"video_threshold", c.eval.video_threshold},
                 {"iou_threshold", c.eval.iou_threshold}};
    return j;
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << config_to_json(config).dump(2) << '\n';
}

}  // namespace mug::trainer
