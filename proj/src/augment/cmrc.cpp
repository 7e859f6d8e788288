#include "mug/cmrc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_set>

#include "mug/error.hpp"

namespace mug::augment {

namespace fs = std::filesystem;
using data::VideoRecord;

void AugmentConfig::validate() const {
    if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
        throw ConfigError("augment.multiplier must be finite and >= 0");
    }
    if (candidates == 0) throw ConfigError("augment.candidates must be positive");
}

std::size_t AugmentConfig::resolve_target(std::size_t base) const {
    validate();
    if (target_count) return *target_count;
    return static_cast<std::size_t>(std::llround(multiplier * static_cast<double>(base)));
}

std::size_t AugmentConfig::resolve_min_count(std::size_t pool_size) const {
    return min_count ? *min_count : scaled_min_count(pool_size);
}

std::size_t scaled_min_count(std::size_t pool_size) {
    return static_cast<std::size_t>(std::llround(50.0 * static_cast<double>(pool_size) / 10000.0));
}

bool LabelDistribution::empty() const {
    return std::none_of(retained.begin(), retained.end(), [](std::uint8_t r) { return r != 0; });
}

std::vector<double> LabelDistribution::normalized() const {
    std::vector<double> p(counts.size(), 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (retained[c]) total += static_cast<double>(counts[c]);
    if (total == 0.0) return p;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (retained[c]) p[c] = static_cast<double>(counts[c]) / total;
    return p;
}

LabelDistribution count_label_distribution(const std::vector<VideoRecord>& records, std::size_t threshold) {
    LabelDistribution d;
    d.threshold = threshold;
    if (records.empty()) return d;
    const std::size_t C = records.front().video_label.size();
    d.counts.assign(C, 0);
    for (const VideoRecord& r : records) {
        if (r.video_label.size() != C) throw ShapeError("video '" + r.id + "' has a different class count");
        for (std::size_t c = 0; c < C; ++c) d.counts[c] += r.video_label[c] ? 1 : 0;
    }
    d.retained.resize(C);
    for (std::size_t c = 0; c < C; ++c) d.retained[c] = d.counts[c] > threshold ? 1 : 0;
    return d;
}

bool eligible_donor(const VideoRecord& record) { return !record.discard && !record.has_null_pseudo(); }

namespace {

void check_donor(const VideoRecord& r, const char* role) {
    if (r.discard) throw CombinationError(std::string(role) + " donor '" + r.id + "' is marked DISCARD");
    if (r.has_null_pseudo()) throw CombinationError(std::string(role) + " donor '" + r.id + "' has null pseudo-label rows");
}

std::vector<std::uint8_t> union_label(const data::LabelMatrix& visual, const data::LabelMatrix& audio) {
    auto label = visual.column_any();
    const auto a = audio.column_any();
    for (std::size_t c = 0; c < label.size(); ++c) label[c] = label[c] | a[c];
    return label;
}

}  // namespace

VideoRecord cmrc_combine(const VideoRecord& visual_donor, const VideoRecord& audio_donor) {
    check_donor(visual_donor, "visual");
    check_donor(audio_donor, "audio");
    if (visual_donor.segments() != audio_donor.segments()) {
        throw CombinationError("donors '" + visual_donor.id + "' and '" + audio_donor.id + "' differ in segment count");
    }
    if (visual_donor.pseudo_v.classes() != audio_donor.pseudo_a.classes()) {
        throw CombinationError("donors '" + visual_donor.id + "' and '" + audio_donor.id + "' differ in class count");
    }
    VideoRecord r;
    r.id = "cmrc_" + visual_donor.id + "_" + audio_donor.id;
    r.visual = visual_donor.visual;
    r.visual_path = visual_donor.visual_path;
    r.pseudo_v = visual_donor.pseudo_v;
    r.audio = audio_donor.audio;
    r.audio_path = audio_donor.audio_path;
    r.pseudo_a = audio_donor.pseudo_a;
    r.video_label = union_label(r.pseudo_v, r.pseudo_a);
    if (visual_donor.truth && audio_donor.truth) {
        data::VideoLabels t;
        t.visual = visual_donor.truth->visual;
        t.audio = audio_donor.truth->audio;
        r.truth = std::move(t);
    }
    return r;
}

std::vector<double> generated_profile(const std::vector<VideoRecord>& generated, const LabelDistribution& dist) {
    const std::size_t C = dist.counts.size();
    std::vector<double> p(C, 0.0);
    double total = 0.0;
    for (const VideoRecord& r : generated) {
        for (std::size_t c = 0; c < C && c < r.video_label.size(); ++c) {
            if (dist.retained[c] && r.video_label[c]) {
                p[c] += 1.0;
                total += 1.0;
            }
        }
    }
    if (total > 0.0)
        for (double& v : p) v /= total;
    return p;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("l1_distance: sizes differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

namespace {

struct Pair {
    std::size_t v;
    std::size_t a;
};

// Greedy sampler state over the eligible pool (indices into `pool`).
class Sampler {
public:
    Sampler(const std::vector<const VideoRecord*>& pool, const LabelDistribution& dist, std::uint64_t seed,
            std::size_t candidates)
        : pool_(pool), target_(dist.normalized()), retained_(dist.retained), rng_(seed), candidates_(candidates) {
        const std::size_t C = target_.size();
        any_v_.reserve(pool.size());
        any_a_.reserve(pool.size());
        for (const VideoRecord* r : pool) {
            any_v_.push_back(r->pseudo_v.column_any());
            any_a_.push_back(r->pseudo_a.column_any());
            if (any_v_.back().size() != C || any_a_.back().size() != C) {
                throw ShapeError("donor '" + r->id + "' class count does not match the distribution");
            }
        }
        counts_.assign(C, 0.0);
        has_v_.resize(C);
        has_a_.resize(C);
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t c = 0; c < C; ++c) {
                if (any_v_[i][c]) has_v_[c].push_back(i);
                if (any_a_[i][c]) has_a_[c].push_back(i);
            }
        exhausted_.assign(C, 0);
    }

    Pair next() {
        std::vector<std::size_t> order = classes_by_deficit();
        for (std::size_t c : order) {
            if (exhausted_[c]) continue;
            std::vector<Pair> cands = candidates_with(c);
            if (cands.empty()) {
                exhausted_[c] = 1;
                continue;
            }
            return commit(best_of(cands));
        }
        return commit(uniform_pair());
    }

private:
    std::size_t n() const { return pool_.size(); }
    std::uint64_t key(Pair p) const { return static_cast<std::uint64_t>(p.v) * n() + p.a; }
    bool usable(Pair p) const { return p.v != p.a && !used_.contains(key(p)); }

    std::vector<std::uint8_t> label(Pair p) const {
        auto l = any_v_[p.v];
        for (std::size_t c = 0; c < l.size(); ++c) l[c] |= any_a_[p.a][c];
        return l;
    }

    // Retained classes ordered by (target share - generated share), largest first.
    std::vector<std::size_t> classes_by_deficit() const {
        double total = 0.0;
        for (double v : counts_) total += v;
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t c = 0; c < target_.size(); ++c) {
            if (!retained_[c]) continue;
            const double share = total > 0.0 ? counts_[c] / total : 0.0;
            d.emplace_back(target_[c] - share, c);
        }
        std::stable_sort(d.begin(), d.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        std::vector<std::size_t> out;
        for (const auto& [_, c] : d) out.push_back(c);
        return out;
    }

    std::size_t pick(std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng_); }

    // Up to `candidates_` distinct unused pairs whose union label contains c.
    std::vector<Pair> candidates_with(std::size_t c) {
        const auto& sv = has_v_[c];
        const auto& sa = has_a_[c];
        if (sv.empty() && sa.empty()) return {};
        std::vector<Pair> out;
        const std::size_t attempts = 4 * candidates_;
        for (std::size_t i = 0; i < attempts && out.size() < candidates_; ++i) {
            Pair p;
            if (pick(sv.size() + sa.size()) < sv.size()) {
                p = {sv[pick(sv.size())], pick(n())};
            } else {
                p = {pick(n()), sa[pick(sa.size())]};
            }
            if (usable(p) && !contains(out, p)) out.push_back(p);
        }
        if (!out.empty()) return out;
        // Random probing missed; fall back to a full scan.
        std::vector<Pair> all;
        for (std::size_t v = 0; v < n(); ++v)
            for (std::size_t a = 0; a < n(); ++a) {
                const Pair p{v, a};
                if ((any_v_[v][c] || any_a_[a][c]) && usable(p)) all.push_back(p);
            }
        std::shuffle(all.begin(), all.end(), rng_);
        if (all.size() > candidates_) all.resize(candidates_);
        return all;
    }

    static bool contains(const std::vector<Pair>& ps, Pair p) {
        return std::any_of(ps.begin(), ps.end(), [&](Pair q) { return q.v == p.v && q.a == p.a; });
    }

    double score(Pair p) const {
        const auto l = label(p);
        std::vector<double> next = counts_;
        double total = 0.0;
        for (std::size_t c = 0; c < next.size(); ++c) {
            if (retained_[c] && l[c]) next[c] += 1.0;
            total += next[c];
        }
        double d = 0.0;
        for (std::size_t c = 0; c < next.size(); ++c) d += std::abs(target_[c] - (total > 0.0 ? next[c] / total : 0.0));
        return d;
    }

    Pair best_of(const std::vector<Pair>& cands) const {
        Pair best = cands.front();
        double best_score = std::numeric_limits<double>::infinity();
        for (Pair p : cands) {
            const double s = score(p);
            if (s < best_score) best_score = s, best = p;
        }
        return best;
    }

    Pair uniform_pair() {
        for (std::size_t i = 0; i < 64; ++i) {
            const Pair p{pick(n()), pick(n())};
            if (usable(p)) return p;
        }
        std::vector<Pair> all;
        for (std::size_t v = 0; v < n(); ++v)
            for (std::size_t a = 0; a < n(); ++a)
                if (usable({v, a})) all.push_back({v, a});
        if (all.empty()) throw CapacityError("no unused donor pairs remain");
        return all[pick(all.size())];
    }

    Pair commit(Pair p) {
        used_.insert(key(p));
        const auto l = label(p);
        for (std::size_t c = 0; c < l.size(); ++c)
            if (retained_[c] && l[c]) counts_[c] += 1.0;
        return p;
    }

    const std::vector<const VideoRecord*>& pool_;
    std::vector<double> target_;
    std::vector<std::uint8_t> retained_;
    std::mt19937_64 rng_;
    std::size_t candidates_;
    std::vector<std::vector<std::uint8_t>> any_v_, any_a_;
    std::vector<std::vector<std::size_t>> has_v_, has_a_;
    std::vector<double> counts_;
    std::vector<std::uint8_t> exhausted_;
    std::unordered_set<std::uint64_t> used_;
};

}  // namespace

CmrcBatch generate_cmrc_batch(const std::vector<VideoRecord>& records, const LabelDistribution& dist,
                              std::size_t target, std::uint64_t seed, std::size_t candidates) {
    if (candidates == 0) throw ConfigError("augment.candidates must be positive");
    std::vector<const VideoRecord*> pool;
    for (const VideoRecord& r : records)
        if (eligible_donor(r)) pool.push_back(&r);
    const std::size_t n = pool.size();
    const std::size_t capacity = n < 2 ? 0 : n * (n - 1);
    if (target > capacity) {
        throw CapacityError("CMRC target " + std::to_string(target) + " exceeds the " + std::to_string(capacity) +
                            " distinct donor pairs available from " + std::to_string(n) + " eligible videos");
    }
    CmrcBatch batch;
    if (target == 0) return batch;
    if (dist.counts.size() != pool.front()->pseudo_v.classes()) {
        throw ShapeError("label distribution has " + std::to_string(dist.counts.size()) + " classes, donors have " +
                         std::to_string(pool.front()->pseudo_v.classes()));
    }
    Sampler sampler(pool, dist, seed, candidates);
    batch.records.reserve(target);
    for (std::size_t i = 0; i < target; ++i) {
        const Pair p = sampler.next();
        batch.records.push_back(cmrc_combine(*pool[p.v], *pool[p.a]));
        batch.provenance.push_back({batch.records.back().id, pool[p.v]->id, pool[p.a]->id});
    }
    return batch;
}

void write_cmrc_batch(const fs::path& dir, const CmrcBatch& batch, const data::Vocabulary& vocabulary,
                      std::size_t segments) {
    fs::create_directories(dir);
    data::Manifest m;
    m.split = "cmrc";
    m.segments = segments;
    m.vocabulary = vocabulary;
    m.pseudo_labels = "pseudo.csv";
    data::LabelTable pseudo, truth;
    bool all_truth = !batch.records.empty();
    for (const VideoRecord& r : batch.records) {
        if (r.audio_path.empty() || r.visual_path.empty()) {
            throw ContractError("combined record '" + r.id + "' has no donor feature paths to reference");
        }
        data::ManifestEntry e;
        e.id = r.id;
        e.audio = fs::absolute(r.audio_path).lexically_normal().string();
        e.visual = fs::absolute(r.visual_path).lexically_normal().string();
        for (std::size_t c = 0; c < r.video_label.size(); ++c)
            if (r.video_label[c]) e.labels.push_back(vocabulary.name(c));
        m.videos.push_back(std::move(e));
        data::VideoLabels p;
        p.audio = r.pseudo_a;
        p.visual = r.pseudo_v;
        pseudo.emplace(r.id, std::move(p));
        if (r.truth) truth.emplace(r.id, *r.truth);
        else all_truth = false;
    }
    if (all_truth) m.ground_truth = "gt.csv";
    data::write_label_csv(dir / m.pseudo_labels, pseudo, vocabulary);
    if (all_truth) data::write_label_csv(dir / m.ground_truth, truth, vocabulary);
    data::write_manifest(dir / "manifest.json", m);

    std::ofstream out(dir / "provenance.csv", std::ios::binary);
    if (!out) throw FormatError("cannot write " + (dir / "provenance.csv").string());
    out << "new_id,visual_donor,audio_donor\n";
    for (const Provenance& p : batch.provenance) out << p.id << ',' << p.visual_donor << ',' << p.audio_donor << '\n';
}

}  // namespace mug::augment
