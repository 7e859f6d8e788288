// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "metrics_fixture.hpp"
#include "mug/checks.hpp"
#include "mug/cli.hpp"
#include "mug/cmrc.hpp"
#include "mug/error.hpp"
#include "mug/metrics.hpp"
#include "mug/model.hpp"
#include "mug/synthetic.hpp"
#include "mug/trainer.hpp"

using namespace mug;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string sci(double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(2) << v;
    return s.str();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "mug_acceptance" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    return files;
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) throw std::runtime_error("mug " + args.front() + " failed: " + err.str());
    return code;
}

std::string failures(const std::vector<checks::CheckOutcome>& outcomes) {
    std::string s;
    for (const auto& o : outcomes)
        if (!o.pass()) s += "; failed: " + o.name + " = " + sci(o.value) + " " + o.detail;
    return s;
}

// 1
Verdict scan_oracle() {
    const auto r = checks::scan_oracle_suite(100, 2024);
    const bool ok = r.cases == 100 && r.max_abs_deviation < 1e-9 && r.seconds < 30.0;
    return {ok, std::to_string(r.cases) + " cases, max |dev| " + sci(r.max_abs_deviation) + " (< 1e-9, worst " +
                    r.worst_case + "), " + fixed(r.seconds, 2) + " s (< 30 s)"};
}

// 2
Verdict scan_definitions() {
    const auto r = checks::scan_definition_checks(7);
    return {checks::all_pass(r), "backward |dev| " + sci(r[0].value) + " (exact), one-hot |dev| " + sci(r[1].value) +
                                     " (exact), mixture |dev| " + sci(r[2].value) + " (< 1e-12)" + failures(r)};
}

// 3
Verdict gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = checks::gradient_suite(1);
    const double secs = seconds_since(t0);
    std::size_t passed = 0;
    for (const auto& o : r) passed += o.pass();
    return {passed == r.size() && secs < 120.0, std::to_string(passed) + "/" + std::to_string(r.size()) +
                                                    " checks, worst rel err " + sci(checks::worst_value(r)) +
                                                    " (< 1e-3), full model " + sci(r.back().value) + ", " +
                                                    fixed(secs, 1) + " s (< 120 s)" + failures(r)};
}

// 4
Verdict shared_matrix() {
    const auto r = checks::shared_matrix_checks(3);
    return {checks::all_pass(r), "sum rule |dev| " + sci(r[0].value) + " (< 1e-10), hard-off output change " +
                                     sci(r[1].value) + " (exact)" + failures(r)};
}

// 5
Verdict block_fidelity() {
    const auto r = checks::block_fidelity_checks(5, 50);
    auto count = [](double v) { return std::to_string(static_cast<long long>(v)); };
    return {checks::all_pass(r), "zero-fusion |dev| " + sci(r[0].value) + " (exact); " + count(r[1].value) +
                                     " enhancement factors outside (1,2), " + r[1].detail + "; " + count(r[2].value) +
                                     " attention weights outside (0,1), " + r[2].detail + failures(r)};
}

// 6
Verdict metrics_oracle() {
    const auto vocab = data::Vocabulary::standard(fixture::kClasses);
    const auto report = metrics::evaluate_files(fixture::kMetricsDir / "pred.csv", fixture::kMetricsDir / "gt.csv",
                                                vocab, fixture::kSegments);
    double dev = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        dev = std::max({dev, std::abs(report.segment[i] - fixture::kSegment[i]),
                        std::abs(report.event[i] - fixture::kEvent[i])});

    using metrics::EventInterval;
    using metrics::Track;
    data::LabelMatrix gt(10, 2), pred(10, 2);
    for (std::size_t t = 0; t < 5; ++t) gt.set(t, 0, true);
    for (std::size_t t = 3; t < 8; ++t) pred.set(t, 0, true);
    const double seg = metrics::segment_f1(pred, gt);
    const EventInterval truth{0, Track::Audio, 0, 5};
    const EventInterval hit{0, Track::Audio, 0, 3}, miss{0, Track::Audio, 0, 2};
    const double iou_hit = metrics::iou(hit, truth), iou_miss = metrics::iou(miss, truth);
    const double f_hit = metrics::event_f1({hit}, {truth}), f_miss = metrics::event_f1({miss}, {truth});

    const bool ok = dev <= 1e-15 && std::abs(seg - 0.4) < 1e-15 && std::abs(iou_hit - 0.6) < 1e-15 && f_hit == 1.0 &&
                    std::abs(iou_miss - 0.4) < 1e-15 && f_miss == 0.0;
    return {ok, "fixture max |dev| " + sci(dev) + " over 10 scores; F(seg example) " + fixed(seg) + "; IoU " +
                    fixed(iou_hit, 2) + " -> F " + fixed(f_hit, 1) + ", IoU " + fixed(iou_miss, 2) + " -> F " +
                    fixed(f_miss, 1)};
}

// 7
Verdict cmrc_contract() {
    data::SynthConfig sc;
    sc.seed = 11;
    sc.videos = 400;
    sc.val_videos = 1;
    sc.flip_rate = 0.1;
    sc.null_rate = 0.05;
    sc.patch_rate = 0.5;
    sc.discard_rate = 0.05;
    const data::Dataset pool = data::generate_synthetic_dataset(sc).train.to_dataset();
    std::map<std::string, const data::VideoRecord*> by_id;
    std::size_t ineligible = 0;
    for (const auto& v : pool.videos) {
        by_id[v.id] = &v;
        ineligible += !augment::eligible_donor(v);
    }

    const auto dist = augment::count_label_distribution(pool.videos, augment::scaled_min_count(pool.videos.size()));
    std::size_t records = 0, union_errors = 0, bad_donors = 0;
    double worst_l1 = 0.0;
    bool deterministic = true;
    for (std::size_t target : {500u, 1000u}) {
        const auto batch = augment::generate_cmrc_batch(pool.videos, dist, target, 5);
        const auto again = augment::generate_cmrc_batch(pool.videos, dist, target, 5);
        for (std::size_t i = 0; i < batch.records.size(); ++i) {
            deterministic = deterministic && again.records[i].id == batch.records[i].id &&
                            again.records[i].video_label == batch.records[i].video_label;
        }
        for (std::size_t i = 0; i < batch.records.size(); ++i) {
            const auto& r = batch.records[i];
            const auto& prov = batch.provenance[i];
            const data::VideoRecord& vd = *by_id.at(prov.visual_donor);
            const data::VideoRecord& ad = *by_id.at(prov.audio_donor);
            if (!augment::eligible_donor(vd) || !augment::eligible_donor(ad) || vd.discard || ad.discard ||
                vd.pseudo_v.has_null() || ad.pseudo_a.has_null() || vd.pseudo_a.has_null() || ad.pseudo_v.has_null())
                ++bad_donors;
            bool ok = r.pseudo_v == vd.pseudo_v && r.pseudo_a == ad.pseudo_a;
            for (std::size_t c = 0; c < pool.vocabulary.size(); ++c) {
                bool any = false;
                for (std::size_t t = 0; t < pool.segments; ++t) any = any || vd.pseudo_v.get(t, c) || ad.pseudo_a.get(t, c);
                ok = ok && (r.video_label[c] != 0) == any;
            }
            union_errors += !ok;
            ++records;
        }
        worst_l1 = std::max(worst_l1, augment::l1_distance(augment::generated_profile(batch.records, dist),
                                                           dist.normalized()));
    }

    // Threshold boundary: 50 occurrences excluded, 51 retained.
    std::vector<data::VideoRecord> tally;
    for (std::size_t i = 0; i < 51; ++i) {
        data::VideoRecord r;
        r.id = "b" + std::to_string(i);
        r.video_label = {static_cast<std::uint8_t>(i < 50), 1};
        tally.push_back(r);
    }
    const auto boundary = augment::count_label_distribution(tally, 50);
    const bool boundary_ok = boundary.counts[0] == 50 && boundary.counts[1] == 51 && !boundary.retained[0] &&
                             boundary.retained[1];

    const bool ok = ineligible > 0 && union_errors == 0 && bad_donors == 0 && boundary_ok && deterministic &&
                    worst_l1 < 0.15;
    return {ok, std::to_string(records) + " records, " + std::to_string(union_errors) + " union errors, " +
                    std::to_string(bad_donors) + " ineligible donors used (" + std::to_string(ineligible) +
                    " in pool); boundary 50/51 " + (boundary_ok ? "ok" : "WRONG") + "; deterministic " +
                    (deterministic ? "yes" : "NO") + "; worst L1 " + fixed(worst_l1) + " (< 0.15) at targets 500, 1000"};
}

// 8
Verdict overfit() {
    trainer::ExperimentConfig c;
    c.set_seed(0);
    c.synth.videos = 32;
    c.synth.flip_rate = 0.0;
    c.model.d_model = 64;
    c.augment.multiplier = 0.0;
    c.train.epochs = 200;
    c.train.learning_rate = 3e-3;
    c.train.batch_size = 4;
    c.train.eval_train = true;
    trainer::Splits s = trainer::load_splits(c);
    s.val.videos.clear();

    const auto t0 = std::chrono::steady_clock::now();
    double best = 0.0;
    std::size_t reached = 0;
    const auto r = trainer::train(c, s, [&](const trainer::EpochLog& e, const model::AvMamba&) {
        best = std::max(best, e.train->segment[3]);
        if (best >= 0.95 && reached == 0) reached = e.epoch + 1;
        return reached == 0;
    });
    const double secs = seconds_since(t0);
    return {reached > 0 && secs < 300.0,
            "train segment Type@AV " + fixed(best) + " (>= 0.95) after " + std::to_string(r.log.epochs.size()) +
                " epochs (<= 200), " + fixed(secs, 1) + " s (< 300 s)"};
}

trainer::ExperimentConfig ablation_config(std::uint64_t seed) {
    trainer::ExperimentConfig c;
    c.set_seed(seed);
    c.synth.videos = 64;
    c.synth.val_videos = 64;
    c.synth.classes = 10;
    c.synth.flip_rate = 0.1;
    c.synth.av_correlation = 0.8;
    c.model.d_model = 32;
    c.model.text_dim = 32;
    c.model.state = 8;
    c.train.epochs = 15;
    c.train.batch_size = 8;
    c.train.learning_rate = 3e-3;
    c.augment.multiplier = 1.0;
    return c;
}

// 9
Verdict directional_ablations() {
    std::size_t amf_wins = 0, cmrc_wins = 0;
    std::string rows;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto c = ablation_config(seed);
        const trainer::Splits s = trainer::load_splits(c);
        const double full = trainer::train(c, s).log.best_score;
        const double wo_amf = trainer::ablate(c, trainer::Component::Amf, s).report.segment[3];
        const double wo_cmrc = trainer::ablate(c, trainer::Component::Cmrc, s).report.segment[3];
        amf_wins += full >= wo_amf;
        cmrc_wins += full >= wo_cmrc;
        rows += " | seed " + std::to_string(seed) + ": full " + fixed(full, 3) + ", wo/AMF " + fixed(wo_amf, 3) +
                ", wo/CMRC " + fixed(wo_cmrc, 3);
    }
    return {amf_wins >= 3 && cmrc_wins >= 3, "full >= wo/AMF in " + std::to_string(amf_wins) +
                                                 "/5 seeds, full >= wo/CMRC in " + std::to_string(cmrc_wins) +
                                                 "/5 seeds (need 3 each)" + rows};
}

// 10
Verdict parameter_band() {
    const model::AvMamba m(model::ModelConfig::full_scale(), data::Vocabulary::standard(25));
    const std::size_t n = m.parameter_count();
    return {n >= 3'800'000 && n <= 15'200'000, std::to_string(n) + " parameters (band [3.8M, 15.2M])"};
}

// 11
Verdict determinism() {
    const fs::path dir = scratch("determinism");
    auto p = [&](const char* name) { return (dir / name).string(); };
    cli({"synth", "--seed", "7", "--videos", "60", "--out", p("s1")});
    cli({"synth", "--seed", "7", "--videos", "60", "--out", p("s2")});
    const bool synth_same = tree(dir / "s1") == tree(dir / "s2");

    cli({"augment", "--data", p("s1"), "--multiplier", "2", "--seed", "3", "--out", p("a1")});
    cli({"augment", "--data", p("s1"), "--multiplier", "2", "--seed", "3", "--out", p("a2")});
    const bool augment_same = tree(dir / "a1") == tree(dir / "a2");

    std::ofstream(dir / "small.json") << R"({"model": {"d_model": 16, "state": 4, "text_dim": 16},
        "train": {"epochs": 3, "batch_size": 8, "learning_rate": 0.003}})";
    for (const char* run : {"r1", "r2"})
        cli({"train", "--config", p("small.json"), "--data", p("s1"), "--seed", "4", "--multiplier", "0.5", "--out",
             p(run)});
    bool train_same = true;
    for (const char* f : {"checkpoint.mugc", "final.mugc"})
        train_same = train_same && slurp(dir / "r1" / f) == slurp(dir / "r2" / f);

    const auto config = trainer::load_config(dir / "r1" / "config.json");
    const trainer::Splits splits = trainer::load_splits(config);
    const auto model = trainer::build_model(config, splits.train);
    trainer::restore(*model, load_checkpoint(dir / "r1" / "checkpoint.mugc"));
    const auto in_memory = trainer::evaluate(*model, splits.val, config.eval);
    const auto from_disk = trainer::evaluate_checkpoint(config, dir / "r1" / "checkpoint.mugc", splits.val);
    const bool round_trip = in_memory == from_disk &&
                            trainer::evaluate_checkpoint(config, dir / "r2" / "checkpoint.mugc", splits.val) == from_disk;

    auto yn = [](bool b) { return b ? "identical" : "DIFFERENT"; };
    return {synth_same && augment_same && train_same && round_trip,
            std::string("synth ") + yn(synth_same) + ", augment " + yn(augment_same) + ", train checkpoints " +
                yn(train_same) + ", checkpoint round-trip reports " + yn(round_trip)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"scan oracle equivalence", scan_oracle},
        {"backward/dynamic scan definitions", scan_definitions},
        {"gradient suite", gradient_suite},
        {"shared-B contract", shared_matrix},
        {"block fidelity (fusion identity, MFE factors, TSA weights)", block_fidelity},
        {"metrics oracle", metrics_oracle},
        {"CMRC contract", cmrc_contract},
        {"pipeline sanity (overfit)", overfit},
        {"directional ablations", directional_ablations},
        {"parameter-count band", parameter_band},
        {"determinism", determinism},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const std::size_t id = i + 1;
        if (!selected.empty() && !selected.contains(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << std::setw(2) << id << "] " << criteria[i].first << ": "
                  << v.detail << " (" << fixed(seconds_since(t0), 1) << " s)" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
