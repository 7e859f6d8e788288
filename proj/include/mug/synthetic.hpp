#pragma once

// Desk-scale stand-in for a weakly labelled audio-visual dataset. Each class
// owns a fixed random unit direction per modality; a segment's features are the
// sum of its active classes' directions times `activation`, plus Gaussian noise.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mug/dataset.hpp"
#include "mug/labels.hpp"

namespace mug::data {

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t videos = 200;      // training split
    std::size_t val_videos = 0;    // 0: max(1, videos / 4)
    std::size_t segments = 10;
    std::size_t classes = 25;
    std::size_t audio_dim = 32;
    std::size_t visual_dim = 48;
    std::size_t min_events = 1;    // per modality
    std::size_t max_events = 3;
    double noise = 0.1;
    double activation = 1.0;
    double flip_rate = 0.0;        // per pseudo-label cell
    double av_correlation = 0.5;   // chance a visual event copies an audio event
    double null_rate = 0.0;        // per pseudo-label row
    double patch_rate = 0.5;       // share of null rows fixed by the patch file
    double discard_rate = 0.0;     // per video, via DISCARD patch rows

    void validate() const;
    std::size_t resolved_val_videos() const { return val_videos != 0 ? val_videos : std::max<std::size_t>(1, videos / 4); }
};

struct SynthSplit {
    Manifest manifest;
    std::vector<std::pair<Tensor, Tensor>> features;  // (audio, visual) per manifest entry
    LabelTable pseudo;
    LabelTable truth;
    std::vector<PatchRow> patch;

    Dataset to_dataset() const;
};

struct SynthDataset {
    SynthSplit train;
    SynthSplit val;
};

SynthDataset generate_synthetic_dataset(const SynthConfig& config);

// Writes DIR/train and DIR/val, each with manifest.json, pseudo.csv, gt.csv,
// patch.csv and features/<id>_{a,v}.avmf.
void write_synthetic_dataset(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace mug::data
