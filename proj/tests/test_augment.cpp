#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "mug/cmrc.hpp"
#include "mug/synthetic.hpp"

using namespace mug;
using namespace mug::augment;
using data::VideoRecord;
namespace fs = std::filesystem;

namespace {

// Audio classes sit on the first segment, visual classes on the last.
VideoRecord video(const std::string& id, std::vector<std::size_t> audio, std::vector<std::size_t> visual,
                  std::size_t T = 4, std::size_t C = 5) {
    VideoRecord r;
    r.id = id;
    r.audio = Tensor::full({T, 2}, 1.0);
    r.visual = Tensor::full({T, 3}, 2.0);
    r.pseudo_a = data::LabelMatrix(T, C);
    r.pseudo_v = data::LabelMatrix(T, C);
    for (std::size_t c : audio) r.pseudo_a.set(0, c, true);
    for (std::size_t c : visual) r.pseudo_v.set(T - 1, c, true);
    r.video_label.assign(C, 0);
    for (std::size_t c : audio) r.video_label[c] = 1;
    for (std::size_t c : visual) r.video_label[c] = 1;
    return r;
}

std::vector<VideoRecord> synthetic_pool(std::size_t videos, std::uint64_t seed) {
    data::SynthConfig cfg;
    cfg.seed = seed;
    cfg.videos = videos;
    cfg.val_videos = 1;
    cfg.audio_dim = 2;
    cfg.visual_dim = 2;
    return data::generate_synthetic_dataset(cfg).train.to_dataset().videos;
}

}  // namespace

TEST(Distribution, FiveVideoHandTally) {
    // Classes: 0 in v1,v2,v4; 1 in v1,v3; 2 in v5; 3 nowhere; 4 in v2,v3,v4,v5.
    const std::vector<VideoRecord> recs{video("v1", {0}, {1}), video("v2", {4}, {0}), video("v3", {1, 4}, {}),
                                        video("v4", {0}, {4}), video("v5", {}, {2, 4})};
    const LabelDistribution d = count_label_distribution(recs, 2);
    EXPECT_EQ(d.counts, (std::vector<std::size_t>{3, 2, 1, 0, 4}));
    EXPECT_EQ(d.retained, (std::vector<std::uint8_t>{1, 0, 0, 0, 1}));
    const auto p = d.normalized();
    EXPECT_DOUBLE_EQ(p[0], 3.0 / 7.0);
    EXPECT_DOUBLE_EQ(p[4], 4.0 / 7.0);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_TRUE(count_label_distribution({}, 50).empty());
}

TEST(Distribution, ThresholdIsStrict) {
    std::vector<VideoRecord> recs;
    for (int i = 0; i < 51; ++i) recs.push_back(video("a" + std::to_string(i), {0}, {}));
    for (int i = 0; i < 50; ++i) recs.push_back(video("b" + std::to_string(i), {1}, {}));
    const LabelDistribution d = count_label_distribution(recs, 50);
    EXPECT_EQ(d.counts[0], 51u);
    EXPECT_EQ(d.counts[1], 50u);
    EXPECT_EQ(d.retained[0], 1);
    EXPECT_EQ(d.retained[1], 0);
}

TEST(Combine, UnionLabelAndTracks) {
    const VideoRecord violin = video("vv", {}, {3});
    const VideoRecord speech = video("ss", {0}, {});
    const VideoRecord r = cmrc_combine(violin, speech);
    EXPECT_EQ(r.id, "cmrc_vv_ss");
    EXPECT_EQ(r.video_label, (std::vector<std::uint8_t>{1, 0, 0, 1, 0}));
    EXPECT_EQ(r.pseudo_v, violin.pseudo_v);
    EXPECT_EQ(r.pseudo_a, speech.pseudo_a);
    EXPECT_EQ(r.visual.to_vector(), violin.visual.to_vector());
    EXPECT_EQ(r.audio.to_vector(), speech.audio.to_vector());
}

TEST(Combine, SelfCombinationReproducesTracks) {
    const VideoRecord v = video("x", {1, 2}, {2, 4});
    const VideoRecord r = cmrc_combine(v, v);
    EXPECT_EQ(r.pseudo_a, v.pseudo_a);
    EXPECT_EQ(r.pseudo_v, v.pseudo_v);
    EXPECT_EQ(r.video_label, v.video_label);
}

TEST(Combine, RejectsDiscardedAndNullDonors) {
    VideoRecord ok = video("ok", {0}, {1});
    VideoRecord discarded = video("d", {0}, {1});
    discarded.discard = true;
    VideoRecord nulls = video("n", {0}, {1});
    nulls.pseudo_v.set_null(2, true);
    EXPECT_THROW(cmrc_combine(discarded, ok), CombinationError);
    EXPECT_THROW(cmrc_combine(ok, discarded), CombinationError);
    EXPECT_THROW(cmrc_combine(ok, nulls), CombinationError);
    EXPECT_FALSE(eligible_donor(nulls));
    EXPECT_TRUE(eligible_donor(ok));
    EXPECT_THROW(cmrc_combine(ok, video("short", {0}, {1}, 3)), CombinationError);
}

TEST(Batch, ExactCountUniqueIdsUnionLabels) {
    auto pool = synthetic_pool(40, 3);
    pool[0].discard = true;
    pool[1].pseudo_a.set_null(0, true);
    const LabelDistribution d = count_label_distribution(pool, 1);
    const CmrcBatch b = generate_cmrc_batch(pool, d, 100, 9);
    ASSERT_EQ(b.records.size(), 100u);
    ASSERT_EQ(b.provenance.size(), 100u);
    std::set<std::string> ids;
    std::set<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < b.records.size(); ++i) {
        const VideoRecord& r = b.records[i];
        const Provenance& p = b.provenance[i];
        ids.insert(r.id);
        pairs.emplace(p.visual_donor, p.audio_donor);
        EXPECT_EQ(r.id, "cmrc_" + p.visual_donor + "_" + p.audio_donor);
        EXPECT_NE(p.visual_donor, p.audio_donor);
        for (const std::string& donor : {p.visual_donor, p.audio_donor}) {
            EXPECT_NE(donor, pool[0].id);
            EXPECT_NE(donor, pool[1].id);
        }
        const auto av = r.pseudo_a.column_any(), vv = r.pseudo_v.column_any();
        for (std::size_t c = 0; c < r.video_label.size(); ++c) EXPECT_EQ(r.video_label[c], av[c] | vv[c]);
    }
    EXPECT_EQ(ids.size(), 100u);
    EXPECT_EQ(pairs.size(), 100u);
}

TEST(Batch, TracksRetainedDistribution) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto pool = synthetic_pool(200, seed);
        const LabelDistribution d = count_label_distribution(pool, scaled_min_count(pool.size()));
        std::size_t retained = 0;
        for (auto r : d.retained) retained += r;
        ASSERT_GT(retained, 10u);
        for (std::size_t target : {500u, 1000u}) {
            const CmrcBatch b = generate_cmrc_batch(pool, d, target, seed);
            const double l1 = l1_distance(generated_profile(b.records, d), d.normalized());
            EXPECT_LT(l1, 0.15) << "seed " << seed << " target " << target;
        }
    }
}

TEST(Batch, OnlyRetainedClassesDriveSampling) {
    // Class 1 is below threshold; every pair still gets drawn from the pool.
    std::vector<VideoRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back(video("r" + std::to_string(i), {0}, {i % 2 == 0 ? 2u : 0u}));
    recs.push_back(video("rare", {1}, {}));
    const LabelDistribution d = count_label_distribution(recs, 2);
    EXPECT_EQ(d.retained[1], 0);
    const CmrcBatch b = generate_cmrc_batch(recs, d, 110, 0);
    EXPECT_EQ(b.records.size(), 110u);
    EXPECT_THROW(generate_cmrc_batch(recs, d, 111, 0), CapacityError);
}

TEST(Batch, CapacityErrors) {
    auto pool = synthetic_pool(5, 4);
    for (auto& r : pool) r.discard = true;
    const LabelDistribution d = count_label_distribution(pool, 0);
    EXPECT_THROW(generate_cmrc_batch(pool, d, 1, 0), CapacityError);
    EXPECT_TRUE(generate_cmrc_batch(pool, d, 0, 0).records.empty());
    pool[0].discard = false;
    EXPECT_THROW(generate_cmrc_batch(pool, d, 1, 0), CapacityError);  // one donor, no distinct pair
    pool[1].discard = false;
    EXPECT_EQ(generate_cmrc_batch(pool, d, 2, 0).records.size(), 2u);
}

TEST(Batch, EmptySupportFallsBackToUniformPairs) {
    const auto pool = synthetic_pool(10, 5);
    const LabelDistribution d = count_label_distribution(pool, 1000);
    ASSERT_TRUE(d.empty());
    EXPECT_EQ(generate_cmrc_batch(pool, d, 90, 1).records.size(), 90u);
}

TEST(Batch, DeterministicUnderSeed) {
    const auto pool = synthetic_pool(30, 6);
    const LabelDistribution d = count_label_distribution(pool, 1);
    const auto a = generate_cmrc_batch(pool, d, 200, 11);
    const auto b = generate_cmrc_batch(pool, d, 200, 11);
    const auto c = generate_cmrc_batch(pool, d, 200, 12);
    bool differs = false;
    for (std::size_t i = 0; i < 200; ++i) {
        EXPECT_EQ(a.provenance[i].id, b.provenance[i].id);
        differs |= a.provenance[i].id != c.provenance[i].id;
    }
    EXPECT_TRUE(differs);
}

TEST(Config, TargetAndThresholdResolution) {
    AugmentConfig cfg;
    for (double m : {0.25, 0.5, 0.75, 1.0, 2.0}) {
        cfg.multiplier = m;
        EXPECT_EQ(cfg.resolve_target(40), static_cast<std::size_t>(std::llround(m * 40)));
    }
    cfg.target_count = 7;
    EXPECT_EQ(cfg.resolve_target(40), 7u);
    cfg.multiplier = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_EQ(scaled_min_count(10000), 50u);
    EXPECT_EQ(scaled_min_count(200), 1u);
    EXPECT_EQ(AugmentConfig{}.resolve_min_count(10000), 50u);
    AugmentConfig fixed;
    fixed.min_count = 3;
    EXPECT_EQ(fixed.resolve_min_count(10000), 3u);
}

TEST(Output, WritesLoadableManifestAndProvenance) {
    const fs::path dir = fs::temp_directory_path() / "mug_test_augment";
    fs::remove_all(dir);
    data::SynthConfig cfg;
    cfg.videos = 12;
    cfg.val_videos = 1;
    cfg.classes = 5;
    data::write_synthetic_dataset(data::generate_synthetic_dataset(cfg), dir / "src");
    const data::Dataset ds = data::load_dataset(dir / "src" / "train");
    const LabelDistribution d = count_label_distribution(ds.videos, 0);
    const CmrcBatch b = generate_cmrc_batch(ds.videos, d, 12, 2);
    write_cmrc_batch(dir / "out", b, ds.vocabulary, ds.segments);

    const data::Dataset back = data::load_dataset(dir / "out");
    ASSERT_EQ(back.videos.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(back.videos[i].id, b.records[i].id);
        EXPECT_EQ(back.videos[i].video_label, b.records[i].video_label);
        EXPECT_EQ(back.videos[i].pseudo_a, b.records[i].pseudo_a);
        EXPECT_EQ(back.videos[i].visual.to_vector(), b.records[i].visual.to_vector());
    }
    std::ifstream prov(dir / "out" / "provenance.csv");
    std::string line;
    std::getline(prov, line);
    EXPECT_EQ(line, "new_id,visual_donor,audio_donor");
    std::size_t rows = 0;
    while (std::getline(prov, line)) ++rows;
    EXPECT_EQ(rows, 12u);
}
