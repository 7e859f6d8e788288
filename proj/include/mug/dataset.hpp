#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mug/labels.hpp"
#include "mug/modality.hpp"
#include "mug/tensor.hpp"

namespace mug::data {

struct VideoRecord {
    std::string id;
    Tensor audio;   // [T, d_a]
    Tensor visual;  // [T, d_v]
    std::filesystem::path audio_path;
    std::filesystem::path visual_path;
    std::vector<std::uint8_t> video_label;  // C entries of 0/1
    LabelMatrix pseudo_a;
    LabelMatrix pseudo_v;
    std::optional<VideoLabels> truth;
    bool discard = false;

    std::size_t segments() const { return audio.dim(0); }
    const LabelMatrix& pseudo(Modality m) const { return m == Modality::Audio ? pseudo_a : pseudo_v; }
    LabelMatrix& pseudo(Modality m) { return m == Modality::Audio ? pseudo_a : pseudo_v; }
    const Tensor& features(Modality m) const { return m == Modality::Audio ? audio : visual; }
    bool has_null_pseudo() const { return pseudo_a.has_null() || pseudo_v.has_null(); }
};

struct ManifestEntry {
    std::string id;
    std::string audio;   // relative to the manifest directory unless absolute
    std::string visual;
    std::vector<std::string> labels;
};

// JSON manifest. Optional file references (empty when absent) are resolved
// against the manifest's directory.
struct Manifest {
    std::string split;
    std::size_t segments = 0;
    Vocabulary vocabulary;
    std::vector<ManifestEntry> videos;
    std::string pseudo_labels;
    std::string ground_truth;
    std::string patch;
};

inline constexpr std::uint32_t kManifestVersion = 1;

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct Dataset {
    std::string split;
    std::size_t segments = 0;
    Vocabulary vocabulary;
    std::vector<VideoRecord> videos;

    bool has_ground_truth() const;
    const VideoRecord* find(const std::string& id) const;
    std::size_t audio_dim() const { return videos.empty() ? 0 : videos.front().audio.dim(1); }
    std::size_t visual_dim() const { return videos.empty() ? 0 : videos.front().visual.dim(1); }
};

// Accepts a manifest path or a directory containing manifest.json. Reads
// features, pseudo-labels and ground truth, then applies the patch file.
Dataset load_dataset(const std::filesystem::path& location);

// Builds records from already-parsed pieces; `features` is indexed like
// manifest.videos. Used by load_dataset and the in-memory synthetic path.
Dataset assemble_dataset(const Manifest& manifest, std::vector<std::pair<Tensor, Tensor>> features,
                         const LabelTable* pseudo, const LabelTable* truth, const std::vector<PatchRow>* patch,
                         const std::filesystem::path& base_dir = {});

// Replaces null pseudo rows with patched labels and sets discard flags.
// Returns the number of label rows patched.
std::size_t apply_annotation_patch(std::vector<VideoRecord>& records, const std::vector<PatchRow>& patch);

LabelTable pseudo_table(const std::vector<VideoRecord>& records);

}  // namespace mug::data
