#pragma once

// Cross-modal random combination: new training videos made from the visual
// track of one video and the audio track of another, labelled with the union
// of the two donated pseudo-label matrices.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mug/dataset.hpp"

namespace mug::augment {

struct AugmentConfig {
    double multiplier = 1.0;                   // target = round(multiplier * base)
    std::optional<std::size_t> target_count;   // overrides the multiplier
    std::optional<std::size_t> min_count;      // unset: scaled_min_count(pool size)
    std::uint64_t seed = 0;
    std::size_t candidates = 8;                // pairs scored per draw

    void validate() const;
    std::size_t resolve_target(std::size_t base) const;
    std::size_t resolve_min_count(std::size_t pool_size) const;
};

// 50 occurrences on a ~10k-video training split, scaled to the pool at hand.
std::size_t scaled_min_count(std::size_t pool_size);

struct LabelDistribution {
    std::vector<std::size_t> counts;     // per class, over video-level labels
    std::vector<std::uint8_t> retained;  // counts[c] > threshold
    std::size_t threshold = 0;

    bool empty() const;
    // Retained counts normalized to sum 1; zero outside the support.
    std::vector<double> normalized() const;
};

LabelDistribution count_label_distribution(const std::vector<data::VideoRecord>& records, std::size_t threshold);

// Donors must not be discarded and must carry no null pseudo rows.
data::VideoRecord cmrc_combine(const data::VideoRecord& visual_donor, const data::VideoRecord& audio_donor);

bool eligible_donor(const data::VideoRecord& record);

struct Provenance {
    std::string id;
    std::string visual_donor;
    std::string audio_donor;
};

struct CmrcBatch {
    std::vector<data::VideoRecord> records;
    std::vector<Provenance> provenance;
};

// Exactly `target` combined records from distinct (visual, audio) donor pairs
// with different donors. Each draw picks the retained class furthest below its
// share of the source distribution, scores a few unused pairs containing it,
// and keeps the one that brings the generated profile closest to the source.
CmrcBatch generate_cmrc_batch(const std::vector<data::VideoRecord>& records, const LabelDistribution& dist,
                              std::size_t target, std::uint64_t seed, std::size_t candidates = 8);

// Histogram of generated video labels over the retained classes, normalized.
std::vector<double> generated_profile(const std::vector<data::VideoRecord>& generated, const LabelDistribution& dist);
double l1_distance(const std::vector<double>& a, const std::vector<double>& b);

// Writes manifest.json (feature paths point at the donors' files), pseudo.csv
// and provenance.csv under `dir`.
void write_cmrc_batch(const std::filesystem::path& dir, const CmrcBatch& batch, const data::Vocabulary& vocabulary,
                      std::size_t segments);

}  // namespace mug::augment
