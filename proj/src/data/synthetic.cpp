#include "mug/synthetic.hpp"

#include <cmath>
#include <random>

#include "mug/error.hpp"
#include "mug/features.hpp"
#include "mug/nn.hpp"

namespace mug::data {

namespace {

struct Event {
    std::size_t cls;
    std::size_t start;
    std::size_t end;  // exclusive
};

// Independent streams per purpose so that, e.g., changing the flip rate does
// not move the feature noise.
std::mt19937_64 stream(std::uint64_t seed, const char* purpose) { return std::mt19937_64(seed ^ fnv1a(purpose)); }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Event random_event(std::mt19937_64& rng, std::size_t T, std::size_t C) {
    const std::size_t len = uniform_index(rng, 1, T);
    const std::size_t start = uniform_index(rng, 0, T - len);
    return {uniform_index(rng, 0, C - 1), start, start + len};
}

// Unit-norm random direction per class, stored [C, D].
std::vector<double> class_directions(std::mt19937_64& rng, std::size_t C, std::size_t D) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> dirs(C * D);
    for (std::size_t c = 0; c < C; ++c) {
        double norm = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
            dirs[c * D + k] = g(rng);
            norm += dirs[c * D + k] * dirs[c * D + k];
        }
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < D; ++k) dirs[c * D + k] /= norm;
    }
    return dirs;
}

Tensor render(const LabelMatrix& truth, const std::vector<double>& dirs, std::size_t D, double activation, double noise,
              std::mt19937_64& rng) {
    const std::size_t T = truth.segments();
    std::normal_distribution<double> g(0.0, noise);
    std::vector<double> v(T * D);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < D; ++k) {
            double x = g(rng);
            for (std::size_t c : truth.row_classes(t)) x += activation * dirs[c * D + k];
            // Stored as f32 on disk; round here so memory and disk agree.
            v[t * D + k] = static_cast<double>(static_cast<float>(x));
        }
    }
    return Tensor::from_vector({T, D}, std::move(v));
}

std::string video_id(const std::string& split, std::size_t i, std::size_t count) {
    const std::size_t width = std::max<std::size_t>(4, std::to_string(count).size());
    std::string digits = std::to_string(i);
    return split + "_" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

struct Generators {
    std::mt19937_64 events;
    std::mt19937_64 noise;
    std::mt19937_64 labels;
    std::vector<double> dirs_a;
    std::vector<double> dirs_v;
};

SynthSplit make_split(const SynthConfig& cfg, const std::string& split, std::size_t count, Generators& gen) {
    const std::size_t T = cfg.segments, C = cfg.classes;
    SynthSplit out;
    out.manifest.split = split;
    out.manifest.segments = T;
    out.manifest.vocabulary = Vocabulary::standard(C);
    out.manifest.pseudo_labels = "pseudo.csv";
    out.manifest.ground_truth = "gt.csv";
    out.manifest.patch = "patch.csv";
    std::bernoulli_distribution correlated(cfg.av_correlation), flip(cfg.flip_rate), null_row(cfg.null_rate),
        patched(cfg.patch_rate), discard(cfg.discard_rate);

    for (std::size_t i = 0; i < count; ++i) {
        const std::string id = video_id(split, i, count);
        std::vector<Event> audio_events, visual_events;
        const std::size_t n_a = uniform_index(gen.events, cfg.min_events, cfg.max_events);
        for (std::size_t k = 0; k < n_a; ++k) audio_events.push_back(random_event(gen.events, T, C));
        const std::size_t n_v = uniform_index(gen.events, cfg.min_events, cfg.max_events);
        for (std::size_t k = 0; k < n_v; ++k) {
            const bool copy = correlated(gen.events);
            const Event fresh = random_event(gen.events, T, C);
            visual_events.push_back(copy && k < n_a ? audio_events[k] : fresh);
        }

        VideoLabels truth(T, C);
        for (auto [events, m] : {std::pair{&audio_events, &truth.audio}, std::pair{&visual_events, &truth.visual}}) {
            for (const Event& e : *events)
                for (std::size_t t = e.start; t < e.end; ++t) m->set(t, e.cls, true);
        }

        ManifestEntry entry;
        entry.id = id;
        entry.audio = "features/" + id + "_a.avmf";
        entry.visual = "features/" + id + "_v.avmf";
        const auto any_a = truth.audio.column_any();
        const auto any_v = truth.visual.column_any();
        for (std::size_t c = 0; c < C; ++c)
            if (any_a[c] || any_v[c]) entry.labels.push_back(out.manifest.vocabulary.name(c));

        out.features.emplace_back(render(truth.audio, gen.dirs_a, cfg.audio_dim, cfg.activation, cfg.noise, gen.noise),
                                  render(truth.visual, gen.dirs_v, cfg.visual_dim, cfg.activation, cfg.noise, gen.noise));

        VideoLabels pseudo = truth;
        for (Modality m : {Modality::Audio, Modality::Visual}) {
            LabelMatrix& p = pseudo.get(m);
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t c = 0; c < C; ++c)
                    if (flip(gen.labels)) p.set(t, c, !p.get(t, c));
            }
            for (std::size_t t = 0; t < T; ++t) {
                if (!null_row(gen.labels)) continue;
                p.set_null(t, true);
                if (patched(gen.labels)) {
                    out.patch.push_back({id, m, t, truth.get(m).row_classes(t), false, 0});
                }
            }
        }
        if (discard(gen.labels)) out.patch.push_back({id, Modality::Audio, 0, {}, true, 0});

        out.manifest.videos.push_back(std::move(entry));
        out.truth.emplace(id, std::move(truth));
        out.pseudo.emplace(id, std::move(pseudo));
    }
    return out;
}

void check_rate(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("synthetic ") + name + " must be in [0, 1]");
}

}  // namespace

void SynthConfig::validate() const {
    if (videos == 0) throw ConfigError("synthetic videos must be positive");
    if (segments == 0) throw ConfigError("synthetic segments must be positive");
    if (classes == 0) throw ConfigError("synthetic classes must be positive");
    if (audio_dim == 0 || visual_dim == 0) throw ConfigError("synthetic feature dims must be positive");
    if (min_events == 0 || max_events < min_events) throw ConfigError("synthetic event counts need 1 <= min <= max");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synthetic noise must be finite and >= 0");
    if (!std::isfinite(activation)) throw ConfigError("synthetic activation must be finite");
    check_rate(flip_rate, "flip_rate");
    check_rate(av_correlation, "av_correlation");
    check_rate(null_rate, "null_rate");
    check_rate(patch_rate, "patch_rate");
    check_rate(discard_rate, "discard_rate");
}

Dataset SynthSplit::to_dataset() const { return assemble_dataset(manifest, features, &pseudo, &truth, &patch); }

SynthDataset generate_synthetic_dataset(const SynthConfig& config) {
    config.validate();
    Vocabulary::standard(config.classes);  // range check
    auto dir_rng = stream(config.seed, "directions");
    Generators gen{stream(config.seed, "events"), stream(config.seed, "noise"), stream(config.seed, "labels"),
                   class_directions(dir_rng, config.classes, config.audio_dim),
                   class_directions(dir_rng, config.classes, config.visual_dim)};
    SynthDataset out;
    out.train = make_split(config, "train", config.videos, gen);
    out.val = make_split(config, "val", config.resolved_val_videos(), gen);
    return out;
}

void write_synthetic_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
    for (const SynthSplit* split : {&data.train, &data.val}) {
        const std::filesystem::path root = dir / split->manifest.split;
        std::filesystem::create_directories(root / "features");
        for (std::size_t i = 0; i < split->manifest.videos.size(); ++i) {
            write_feature_file(root / split->manifest.videos[i].audio, split->features[i].first);
            write_feature_file(root / split->manifest.videos[i].visual, split->features[i].second);
        }
        write_label_csv(root / split->manifest.pseudo_labels, split->pseudo, split->manifest.vocabulary);
        write_label_csv(root / split->manifest.ground_truth, split->truth, split->manifest.vocabulary);
        write_patch_csv(root / split->manifest.patch, split->patch, split->manifest.vocabulary);
        write_manifest(root / "manifest.json", split->manifest);
    }
}

}  // namespace mug::data
