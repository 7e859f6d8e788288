#include "mug/dataset.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mug/error.hpp"
#include "mug/features.hpp"

namespace mug::data {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kManifestFormat = "mug-dataset";

const Json& field(const Json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(where + ": missing field '" + key + "'");
    return *it;
}

template <typename T>
T typed(const Json& value, const std::string& where, const char* key) {
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(where + ": field '" + key + "' has the wrong type");
    }
}

std::string optional_string(const Json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? std::string() : typed<std::string>(*it, where, key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open manifest '" + where + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(where + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw FormatError(where + ": top level must be an object");
    if (typed<std::string>(field(j, "format", where), where, "format") != kManifestFormat) {
        throw FormatError(where + ": field 'format' must be '" + std::string(kManifestFormat) + "'");
    }
    const auto version = typed<std::uint32_t>(field(j, "version", where), where, "version");
    if (version != kManifestVersion) throw FormatError(where + ": unsupported version " + std::to_string(version));

    Manifest m;
    m.split = typed<std::string>(field(j, "split", where), where, "split");
    m.segments = typed<std::size_t>(field(j, "segments", where), where, "segments");
    if (m.segments == 0) throw FormatError(where + ": field 'segments' must be positive");
    try {
        m.vocabulary = Vocabulary(typed<std::vector<std::string>>(field(j, "vocabulary", where), where, "vocabulary"));
    } catch (const VocabularyError& e) {
        throw FormatError(where + ": field 'vocabulary': " + e.what());
    }
    m.pseudo_labels = optional_string(j, "pseudo_labels", where);
    m.ground_truth = optional_string(j, "ground_truth", where);
    m.patch = optional_string(j, "patch", where);

    const Json& videos = field(j, "videos", where);
    if (!videos.is_array()) throw FormatError(where + ": field 'videos' must be an array");
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const std::string w = where + ": videos[" + std::to_string(i) + "]";
        const Json& v = videos[i];
        ManifestEntry e;
        e.id = typed<std::string>(field(v, "id", w), w, "id");
        e.audio = typed<std::string>(field(v, "audio", w), w, "audio");
        e.visual = typed<std::string>(field(v, "visual", w), w, "visual");
        e.labels = typed<std::vector<std::string>>(field(v, "labels", w), w, "labels");
        if (e.id.empty()) throw FormatError(w + ": field 'id' is empty");
        if (!ids.insert(e.id).second) throw FormatError(where + ": duplicate video id '" + e.id + "'");
        m.videos.push_back(std::move(e));
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    Json j;
    j["format"] = kManifestFormat;
    j["version"] = kManifestVersion;
    j["split"] = manifest.split;
    j["segments"] = manifest.segments;
    j["vocabulary"] = manifest.vocabulary.names();
    if (!manifest.pseudo_labels.empty()) j["pseudo_labels"] = manifest.pseudo_labels;
    if (!manifest.ground_truth.empty()) j["ground_truth"] = manifest.ground_truth;
    if (!manifest.patch.empty()) j["patch"] = manifest.patch;
    Json videos = Json::array();
    for (const ManifestEntry& e : manifest.videos) {
        videos.push_back(Json{{"id", e.id}, {"audio", e.audio}, {"visual", e.visual}, {"labels", e.labels}});
    }
    j["videos"] = std::move(videos);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw FormatError("short write to '" + path.string() + "'");
}

bool Dataset::has_ground_truth() const {
    if (videos.empty()) return false;
    for (const VideoRecord& v : videos)
        if (!v.truth) return false;
    return true;
}

const VideoRecord* Dataset::find(const std::string& id) const {
    for (const VideoRecord& v : videos)
        if (v.id == id) return &v;
    return nullptr;
}

Dataset assemble_dataset(const Manifest& manifest, std::vector<std::pair<Tensor, Tensor>> features,
                         const LabelTable* pseudo, const LabelTable* truth, const std::vector<PatchRow>* patch,
                         const std::filesystem::path& base_dir) {
    if (features.size() != manifest.videos.size()) throw ContractError("feature list does not match manifest");
    Dataset ds;
    ds.split = manifest.split;
    ds.segments = manifest.segments;
    ds.vocabulary = manifest.vocabulary;
    const std::size_t T = manifest.segments;
    const std::size_t C = manifest.vocabulary.size();

    std::unordered_set<std::string> known;
    for (const ManifestEntry& e : manifest.videos) known.insert(e.id);
    for (const LabelTable* table : {pseudo, truth}) {
        if (!table) continue;
        for (const auto& [id, labels] : *table) {
            if (!known.contains(id)) throw ParseError("labels reference video '" + id + "' missing from the manifest");
        }
    }

    std::size_t d_a = 0, d_v = 0;
    for (std::size_t i = 0; i < manifest.videos.size(); ++i) {
        const ManifestEntry& e = manifest.videos[i];
        VideoRecord r;
        r.id = e.id;
        r.audio = std::move(features[i].first);
        r.visual = std::move(features[i].second);
        r.audio_path = resolve(base_dir, e.audio);
        r.visual_path = resolve(base_dir, e.visual);
        for (auto [t, name] : {std::pair{&r.audio, "audio"}, std::pair{&r.visual, "visual"}}) {
            if (t->rank() != 2 || t->dim(0) != T) {
                throw FormatError("video '" + e.id + "': " + name + " features have shape " + shape_string(t->shape()) +
                                  ", expected " + std::to_string(T) + " segments");
            }
        }
        if (i == 0) {
            d_a = r.audio.dim(1);
            d_v = r.visual.dim(1);
        } else if (r.audio.dim(1) != d_a || r.visual.dim(1) != d_v) {
            throw FormatError("video '" + e.id + "': feature width differs from the first video");
        }
        r.video_label.assign(C, 0);
        for (const std::string& name : e.labels) {
            if (!manifest.vocabulary.contains(name)) {
                throw FormatError("video '" + e.id + "': unknown category '" + name + "' in labels");
            }
            r.video_label[manifest.vocabulary.index(name)] = 1;
        }
        r.pseudo_a = LabelMatrix(T, C);
        r.pseudo_v = LabelMatrix(T, C);
        if (pseudo) {
            if (auto it = pseudo->find(e.id); it != pseudo->end()) {
                r.pseudo_a = it->second.audio;
                r.pseudo_v = it->second.visual;
            }
        }
        if (truth) {
            auto it = truth->find(e.id);
            r.truth = it != truth->end() ? it->second : VideoLabels(T, C);
        }
        ds.videos.push_back(std::move(r));
    }
    if (patch) apply_annotation_patch(ds.videos, *patch);
    return ds;
}

Dataset load_dataset(const std::filesystem::path& location) {
    const std::filesystem::path manifest_path =
        std::filesystem::is_directory(location) ? location / "manifest.json" : location;
    const Manifest m = read_manifest(manifest_path);
    const std::filesystem::path base = manifest_path.parent_path();

    std::vector<std::pair<Tensor, Tensor>> features;
    features.reserve(m.videos.size());
    for (const ManifestEntry& e : m.videos) {
        features.emplace_back(read_feature_file(resolve(base, e.audio)), read_feature_file(resolve(base, e.visual)));
    }
    std::optional<LabelTable> pseudo, truth;
    std::optional<std::vector<PatchRow>> patch;
    if (!m.pseudo_labels.empty()) pseudo = read_label_csv(resolve(base, m.pseudo_labels), m.vocabulary, m.segments);
    if (!m.ground_truth.empty()) truth = read_label_csv(resolve(base, m.ground_truth), m.vocabulary, m.segments);
    if (!m.patch.empty()) patch = read_patch_csv(resolve(base, m.patch), m.vocabulary, m.segments);
    return assemble_dataset(m, std::move(features), pseudo ? &*pseudo : nullptr, truth ? &*truth : nullptr,
                            patch ? &*patch : nullptr, base);
}

std::size_t apply_annotation_patch(std::vector<VideoRecord>& records, const std::vector<PatchRow>& patch) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].id, i);
    std::size_t patched = 0;
    for (const PatchRow& row : patch) {
        const std::string where = row.line ? "patch line " + std::to_string(row.line) + ": " : "patch: ";
        auto it = index.find(row.video_id);
        if (it == index.end()) throw PatchError(where + "unknown video '" + row.video_id + "'");
        VideoRecord& r = records[it->second];
        if (row.discard) {
            r.discard = true;
            continue;
        }
        LabelMatrix& m = r.pseudo(row.modality);
        if (row.segment >= m.segments()) throw PatchError(where + "segment out of range");
        if (!m.is_null(row.segment)) {
            throw PatchError(where + "(" + row.video_id + ", " + std::string(modality_code(row.modality)) + ", " +
                             std::to_string(row.segment) + ") is already labelled; patches only fill null rows");
        }
        m.set_null(row.segment, false);
        for (std::size_t c : row.classes) {
            if (c >= m.classes()) throw PatchError(where + "class index out of range");
            m.set(row.segment, c, true);
        }
        ++patched;
    }
    return patched;
}

LabelTable pseudo_table(const std::vector<VideoRecord>& records) {
    LabelTable t;
    for (const VideoRecord& r : records) {
        VideoLabels l;
        l.audio = r.pseudo_a;
        l.visual = r.pseudo_v;
        t.emplace(r.id, std::move(l));
    }
    return t;
}

}  // namespace mug::data
