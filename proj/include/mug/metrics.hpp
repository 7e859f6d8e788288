#pragma once

// Segment- and event-level F-scores for audio, visual and audio-visual event
// parsing, plus the Type@AV and Event@AV aggregates.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mug/labels.hpp"
#include "mug/tensor.hpp"

namespace mug::metrics {

enum class Track { Audio, Visual, AudioVisual };

const char* track_code(Track t);  // "a", "v", "av"

struct SegmentPrediction {
    std::string video_id;
    data::LabelMatrix audio;
    data::LabelMatrix visual;

    // Cell-wise AND of the two modalities.
    data::LabelMatrix audio_visual() const;
};

data::LabelMatrix and_matrix(const data::LabelMatrix& a, const data::LabelMatrix& b);

// pred[t,c] = seg_prob[t,c] > seg_threshold && video_prob[c] > video_threshold.
data::LabelMatrix binarize(const Tensor& seg_prob, const Tensor& video_prob, double seg_threshold = 0.5,
                           double video_threshold = 0.5);
SegmentPrediction binarize(const std::string& video_id, const Tensor& seg_prob_a, const Tensor& seg_prob_v,
                           const Tensor& video_prob, double seg_threshold = 0.5, double video_threshold = 0.5);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    Confusion& operator+=(const Confusion& o);
    // 2TP / (2TP + FP + FN); 1.0 when nothing is predicted or present.
    double f1() const;
};

Confusion segment_confusion(const data::LabelMatrix& pred, const data::LabelMatrix& gt);
double segment_f1(const data::LabelMatrix& pred, const data::LabelMatrix& gt);

struct EventInterval {
    std::size_t cls = 0;
    Track track = Track::Audio;
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive

    bool operator==(const EventInterval&) const = default;
};

// Maximal runs of ones as half-open [start, end) pairs.
std::vector<std::pair<std::size_t, std::size_t>> extract_runs(const std::vector<std::uint8_t>& seq);
std::vector<EventInterval> extract_events(const data::LabelMatrix& m, Track track);

double iou(const EventInterval& a, const EventInterval& b);

// Greedy one-to-one matching among events of equal class and track: pairs
// with IoU >= threshold by IoU descending, then earlier gt start, then earlier
// pred start.
std::size_t count_matches(const std::vector<EventInterval>& pred, const std::vector<EventInterval>& gt,
                          double iou_threshold = 0.5);
// 2 * matches / (|pred| + |gt|); 1.0 when both are empty.
double event_f1(const std::vector<EventInterval>& pred, const std::vector<EventInterval>& gt,
                double iou_threshold = 0.5);

struct MetricReport {
    static constexpr std::size_t kScores = 5;
    // Order: A, V, AV, Type@AV, Event@AV.
    std::array<double, kScores> segment{};
    std::array<double, kScores> event{};
    std::size_t videos = 0;

    static const std::array<const char*, kScores>& score_names();
    static std::string csv_header();
    std::string csv_row() const;
    std::string table() const;
    bool operator==(const MetricReport&) const = default;
};

// Ten scores for one video.
MetricReport score_video(const SegmentPrediction& pred, const data::VideoLabels& gt, double iou_threshold = 0.5);

// Per-video scores averaged in order. Every prediction needs ground truth.
MetricReport aggregate_report(const std::vector<SegmentPrediction>& preds, const data::LabelTable& gt,
                              double iou_threshold = 0.5);

// Scores a prediction dump against ground truth, both in the label CSV
// schema. Videos are the union of ids in both tables; a ground-truth video
// absent from the dump counts as all-negative, a predicted id without ground
// truth is an error.
MetricReport evaluate_tables(const data::LabelTable& pred, const data::LabelTable& gt, double iou_threshold = 0.5);
MetricReport evaluate_files(const std::filesystem::path& pred, const std::filesystem::path& gt,
                            const data::Vocabulary& vocabulary, std::size_t segments, double iou_threshold = 0.5);

void write_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace mug::metrics
