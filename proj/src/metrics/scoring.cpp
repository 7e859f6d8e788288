#include <algorithm>
#include <tuple>

#include "mug/error.hpp"
#include "mug/metrics.hpp"

namespace mug::metrics {

using data::LabelMatrix;

const char* track_code(Track t) {
    switch (t) {
        case Track::Audio: return "a";
        case Track::Visual: return "v";
        case Track::AudioVisual: return "av";
    }
    return "?";
}

LabelMatrix and_matrix(const LabelMatrix& a, const LabelMatrix& b) {
    if (a.segments() != b.segments() || a.classes() != b.classes()) throw ShapeError("label matrices differ in shape");
    LabelMatrix out(a.segments(), a.classes());
    for (std::size_t t = 0; t < a.segments(); ++t)
        for (std::size_t c = 0; c < a.classes(); ++c)
            if (a.get(t, c) && b.get(t, c)) out.set(t, c, true);
    return out;
}

LabelMatrix SegmentPrediction::audio_visual() const { return and_matrix(audio, visual); }

LabelMatrix binarize(const Tensor& seg_prob, const Tensor& video_prob, double seg_threshold, double video_threshold) {
    if (seg_prob.rank() != 2) throw ShapeError("segment probabilities must be [T, C]");
    const std::size_t T = seg_prob.dim(0), C = seg_prob.dim(1);
    if (video_prob.numel() != C) throw ShapeError("video probabilities must have C entries");
    LabelMatrix out(T, C);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c)
            if (seg_prob.data()[t * C + c] > seg_threshold && video_prob.data()[c] > video_threshold) out.set(t, c, true);
    return out;
}

SegmentPrediction binarize(const std::string& video_id, const Tensor& seg_prob_a, const Tensor& seg_prob_v,
                           const Tensor& video_prob, double seg_threshold, double video_threshold) {
    return {video_id, binarize(seg_prob_a, video_prob, seg_threshold, video_threshold),
            binarize(seg_prob_v, video_prob, seg_threshold, video_threshold)};
}

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

double Confusion::f1() const {
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Confusion segment_confusion(const LabelMatrix& pred, const LabelMatrix& gt) {
    if (pred.segments() != gt.segments() || pred.classes() != gt.classes()) {
        throw ShapeError("prediction is " + std::to_string(pred.segments()) + "x" + std::to_string(pred.classes()) +
                         " but ground truth is " + std::to_string(gt.segments()) + "x" + std::to_string(gt.classes()));
    }
    Confusion k;
    for (std::size_t t = 0; t < pred.segments(); ++t)
        for (std::size_t c = 0; c < pred.classes(); ++c) {
            const bool p = pred.get(t, c), g = gt.get(t, c);
            k.tp += p && g;
            k.fp += p && !g;
            k.fn += !p && g;
        }
    return k;
}

double segment_f1(const LabelMatrix& pred, const LabelMatrix& gt) { return segment_confusion(pred, gt).f1(); }

std::vector<std::pair<std::size_t, std::size_t>> extract_runs(const std::vector<std::uint8_t>& seq) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t t = 0;
    while (t < seq.size()) {
        if (!seq[t]) {
            ++t;
            continue;
        }
        const std::size_t start = t;
        while (t < seq.size() && seq[t]) ++t;
        runs.emplace_back(start, t);
    }
    return runs;
}

std::vector<EventInterval> extract_events(const LabelMatrix& m, Track track) {
    std::vector<EventInterval> out;
    std::vector<std::uint8_t> column(m.segments());
    for (std::size_t c = 0; c < m.classes(); ++c) {
        for (std::size_t t = 0; t < m.segments(); ++t) column[t] = m.get(t, c) ? 1 : 0;
        for (auto [s, e] : extract_runs(column)) out.push_back({c, track, s, e});
    }
    return out;
}

double iou(const EventInterval& a, const EventInterval& b) {
    const std::size_t lo = std::max(a.start, b.start), hi = std::min(a.end, b.end);
    const std::size_t inter = hi > lo ? hi - lo : 0;
    const std::size_t uni = (a.end - a.start) + (b.end - b.start) - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t count_matches(const std::vector<EventInterval>& pred, const std::vector<EventInterval>& gt,
                          double iou_threshold) {
    struct Candidate {
        double iou;
        std::size_t gt_start, pred_start, p, g;
    };
    std::vector<Candidate> cands;
    for (std::size_t p = 0; p < pred.size(); ++p)
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (pred[p].cls != gt[g].cls || pred[p].track != gt[g].track) continue;
            const double v = iou(pred[p], gt[g]);
            if (v >= iou_threshold) cands.push_back({v, gt[g].start, pred[p].start, p, g});
        }
    // Index tie-breaks keep the result independent of the sort implementation;
    // equal (iou, starts) within one class and track implies identical events.
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.iou, a.gt_start, a.pred_start, a.p, a.g) < std::tie(a.iou, b.gt_start, b.pred_start, b.p, b.g);
    });
    std::vector<std::uint8_t> used_p(pred.size(), 0), used_g(gt.size(), 0);
    std::size_t matches = 0;
    for (const Candidate& k : cands) {
        if (used_p[k.p] || used_g[k.g]) continue;
        used_p[k.p] = used_g[k.g] = 1;
        ++matches;
    }
    return matches;
}

double event_f1(const std::vector<EventInterval>& pred, const std::vector<EventInterval>& gt, double iou_threshold) {
    if (pred.empty() && gt.empty()) return 1.0;
    const std::size_t m = count_matches(pred, gt, iou_threshold);
    return 2.0 * static_cast<double>(m) / static_cast<double>(pred.size() + gt.size());
}

}  // namespace mug::metrics
