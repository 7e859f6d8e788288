#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "mug/error.hpp"
#include "mug/metrics.hpp"

namespace mug::metrics {

const std::array<const char*, MetricReport::kScores>& MetricReport::score_names() {
    static const std::array<const char*, kScores> names{"A", "V", "AV", "Type@AV", "Event@AV"};
    return names;
}

std::string MetricReport::csv_header() {
    std::string h;
    for (const char* level : {"segment", "event"})
        for (const char* n : score_names()) h += std::string(h.empty() ? "" : ",") + level + "_" + n;
    return h;
}

std::string MetricReport::csv_row() const {
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t i = 0; i < kScores; ++i) out << (i ? "," : "") << segment[i];
    for (double v : event) out << ',' << v;
    return out.str();
}

std::string MetricReport::table() const {
    std::ostringstream out;
    out << std::left << std::setw(10) << "level";
    for (const char* n : score_names()) out << std::right << std::setw(10) << n;
    out << '\n' << std::fixed << std::setprecision(2);
    for (auto [name, row] : {std::pair{"segment", &segment}, std::pair{"event", &event}}) {
        out << std::left << std::setw(10) << name;
        for (double v : *row) out << std::right << std::setw(10) << 100.0 * v;
        out << '\n';
    }
    out << "(" << videos << " videos, scores in %)\n";
    return out.str();
}

MetricReport score_video(const SegmentPrediction& pred, const data::VideoLabels& gt, double iou_threshold) {
    if (gt.audio.segments() == 0 || gt.visual.segments() == 0) {
        throw EvaluationError("video '" + pred.video_id + "' lacks ground truth for a modality");
    }
    const data::LabelMatrix pred_av = pred.audio_visual();
    const data::LabelMatrix gt_av = and_matrix(gt.audio, gt.visual);

    MetricReport r;
    r.videos = 1;
    const Confusion ka = segment_confusion(pred.audio, gt.audio);
    const Confusion kv = segment_confusion(pred.visual, gt.visual);
    const Confusion kav = segment_confusion(pred_av, gt_av);
    Confusion pooled = ka;
    pooled += kv;
    r.segment = {ka.f1(), kv.f1(), kav.f1(), 0.0, pooled.f1()};

    const auto pa = extract_events(pred.audio, Track::Audio), ga = extract_events(gt.audio, Track::Audio);
    const auto pv = extract_events(pred.visual, Track::Visual), gv = extract_events(gt.visual, Track::Visual);
    auto p_all = pa, g_all = ga;
    p_all.insert(p_all.end(), pv.begin(), pv.end());
    g_all.insert(g_all.end(), gv.begin(), gv.end());
    r.event = {event_f1(pa, ga, iou_threshold), event_f1(pv, gv, iou_threshold),
               event_f1(extract_events(pred_av, Track::AudioVisual), extract_events(gt_av, Track::AudioVisual),
                        iou_threshold),
               0.0, event_f1(p_all, g_all, iou_threshold)};
    for (auto* row : {&r.segment, &r.event}) (*row)[3] = ((*row)[0] + (*row)[1] + (*row)[2]) / 3.0;
    return r;
}

MetricReport aggregate_report(const std::vector<SegmentPrediction>& preds, const data::LabelTable& gt,
                              double iou_threshold) {
    MetricReport total;
    for (const SegmentPrediction& p : preds) {
        const auto it = gt.find(p.video_id);
        if (it == gt.end()) throw EvaluationError("no ground truth for video '" + p.video_id + "'");
        const MetricReport r = score_video(p, it->second, iou_threshold);
        for (std::size_t i = 0; i < MetricReport::kScores; ++i) {
            total.segment[i] += r.segment[i];
            total.event[i] += r.event[i];
        }
    }
    total.videos = preds.size();
    if (total.videos == 0) throw EvaluationError("no videos to evaluate");
    const double n = static_cast<double>(total.videos);
    for (std::size_t i = 0; i < MetricReport::kScores; ++i) {
        total.segment[i] /= n;
        total.event[i] /= n;
    }
    return total;
}

MetricReport evaluate_tables(const data::LabelTable& pred, const data::LabelTable& gt, double iou_threshold) {
    for (const auto& [id, _] : pred) {
        if (!gt.contains(id)) throw EvaluationError("prediction for '" + id + "' has no ground truth");
    }
    std::vector<SegmentPrediction> preds;
    for (const auto& [id, labels] : gt) {
        const auto it = pred.find(id);
        if (it != pred.end()) {
            preds.push_back({id, it->second.audio, it->second.visual});
        } else {
            preds.push_back({id, data::LabelMatrix(labels.audio.segments(), labels.audio.classes()),
                             data::LabelMatrix(labels.visual.segments(), labels.visual.classes())});
        }
    }
    return aggregate_report(preds, gt, iou_threshold);
}

MetricReport evaluate_files(const std::filesystem::path& pred, const std::filesystem::path& gt,
                            const data::Vocabulary& vocabulary, std::size_t segments, double iou_threshold) {
    return evaluate_tables(data::read_label_csv(pred, vocabulary, segments),
                           data::read_label_csv(gt, vocabulary, segments), iou_threshold);
}

void write_report_csv(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << MetricReport::csv_header() << '\n' << report.csv_row() << '\n';
}

}  // namespace mug::metrics
