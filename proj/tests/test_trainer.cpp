#include "depthhead/trainer.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <map>

#include "depthhead/model_io.hpp"
#include "depthhead/synth.hpp"

using namespace depthhead;
namespace fs = std::filesystem;

namespace {

// Focal length and ranges sized so that background surfaces still pass the
// min_patch filter: negatives can then be sampled anywhere in the frame.
const CameraIntrinsics kIntr{200.0, 200.0, 48.0, 36.0};

ExtractionConfig small_extraction() {
    ExtractionConfig e;
    e.k = 5;
    return e;
}

// tiny rendered corpus shared by the dataset tests
struct CorpusFixture {
    fs::path dir;
    AnnotationSet annotations;

    explicit CorpusFixture(int frames, std::uint32_t seed, int min_heads = 1, int max_heads = 1) {
        CorpusSpec cfg;
        cfg.width = 96;
        cfg.height = 72;
        cfg.intrinsics = kIntr;
        cfg.min_heads = min_heads;
        cfg.max_heads = max_heads;
        cfg.head_depth_min_mm = 700.0;
        cfg.head_depth_max_mm = 1100.0;
        cfg.background_min_mm = 2000.0;
        cfg.background_max_mm = 2500.0;
        cfg.dropout_prob = 0.01;
        dir = fs::temp_directory_path() /
              ("depthhead_trainer_" + std::to_string(seed) + "_" + std::to_string(frames) + "_" +
               std::to_string(min_heads));
        fs::remove_all(dir);
        fs::create_directories(dir);
        annotations = generate_corpus(cfg, frames, seed, dir.string());
    }
};

std::vector<LabeledPatch> flat_patches(int n_per_class, float lo, float hi) {
    std::vector<LabeledPatch> out;
    for (int i = 0; i < n_per_class; ++i) {
        LabeledPatch neg;
        neg.patch.assign(64 * 64, lo);
        neg.label = kClassNonHead;
        out.push_back(std::move(neg));
        LabeledPatch pos;
        pos.patch.assign(64 * 64, hi);
        pos.label = kClassHead;
        out.push_back(std::move(pos));
    }
    return out;
}

}  // namespace

TEST(BuildDataset, EmitsPositivesAndDisjointNegatives) {
    const CorpusFixture fx(4, 11);
    TrainConfig cfg;
    cfg.negatives_per_frame = 5;
    cfg.seed = 2;
    const auto result =
        build_dataset(fx.annotations, fx.dir.string(), kIntr, small_extraction(), cfg);

    std::size_t heads = 0;
    for (const auto& fa : fx.annotations.frames) heads += fa.heads.size();
    std::size_t positives = 0, negatives = 0;
    for (const LabeledPatch& p : result.patches) {
        (p.label == kClassHead ? positives : negatives)++;
        for (const float v : p.patch) {
            EXPECT_GE(v, -1.0f);
            EXPECT_LE(v, 1.0f);
        }
    }
    EXPECT_EQ(positives, heads);
    EXPECT_EQ(negatives, 5u * fx.annotations.frames.size());

    // the exclusion rule holds per emitted negative
    std::map<std::string, const FrameAnnotation*> ann;
    for (const auto& fa : fx.annotations.frames) ann[fa.file] = &fa;
    for (const LabeledPatch& p : result.patches) {
        if (p.label != kClassNonHead) continue;
        for (const BoundingBox& head : ann.at(p.source_frame)->heads) {
            const PaperIoU overlap = iou_paper(p.box, head);
            EXPECT_FALSE(overlap.exact);
            EXPECT_LE(overlap.ratio, 0.0);
        }
    }
}

TEST(BuildDataset, FrameWithoutAnnotationsYieldsOnlyNegatives) {
    const CorpusFixture fx(3, 17, 0, 0);
    TrainConfig cfg;
    cfg.negatives_per_frame = 4;
    const auto result =
        build_dataset(fx.annotations, fx.dir.string(), kIntr, small_extraction(), cfg);
    EXPECT_EQ(result.patches.size(), 12u);
    for (const LabeledPatch& p : result.patches) EXPECT_EQ(p.label, kClassNonHead);
}

TEST(BuildDataset, HeadAtFrameEdgeStillEmitsClippedPositive) {
    DepthFrame frame(96, 72, kIntr, 4000);
    // flat foreground blob hugging the left edge
    for (int y = 20; y < 50; ++y)
        for (int x = 0; x < 20; ++x) frame.at(x, y) = 900;
    const fs::path dir = fs::temp_directory_path() / "depthhead_edge_head";
    fs::create_directories(dir);
    write_pgm16_file((dir / "edge.pgm").string(), frame);

    AnnotationSet ann;
    ann.frames.push_back({"edge.pgm", {{3.0, 35.0, 20.0, 20.0}}});
    TrainConfig cfg;
    cfg.negatives_per_frame = 0;
    const auto result = build_dataset(ann, dir.string(), kIntr, small_extraction(), cfg);
    ASSERT_EQ(result.patches.size(), 1u);
    EXPECT_EQ(result.patches[0].label, kClassHead);
    // out-of-frame side of the crop is background
    EXPECT_FLOAT_EQ(result.patches[0].patch[0], -1.0f);
}

TEST(BuildDataset, HeadWithoutDepthMeasurementIsSkippedWithWarning) {
    // head annotated in a region with no measurements at all
    DepthFrame frame(96, 72, kIntr, 0);
    for (int y = 0; y < 72; ++y)
        for (int x = 48; x < 96; ++x) frame.at(x, y) = 900;  // right half only
    const fs::path dir = fs::temp_directory_path() / "depthhead_absent_depth";
    fs::create_directories(dir);
    write_pgm16_file((dir / "half.pgm").string(), frame);

    AnnotationSet ann;
    ann.frames.push_back({"half.pgm", {{10.0, 10.0, 20.0, 20.0}, {70.0, 36.0, 20.0, 20.0}}});
    TrainConfig cfg;
    cfg.negatives_per_frame = 0;
    const auto result = build_dataset(ann, dir.string(), kIntr, small_extraction(), cfg);
    ASSERT_EQ(result.patches.size(), 1u);  // only the measurable head
    EXPECT_EQ(result.patches[0].label, kClassHead);
    ASSERT_FALSE(result.warnings.empty());
    EXPECT_NE(result.warnings[0].find("no depth"), std::string::npos);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostics) {
    auto dataset = flat_patches(2, -0.5f, 0.5f);
    dataset[0].patch[10] = std::numeric_limits<float>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    try {
        train(dataset, cfg);
        FAIL() << "expected abort on non-finite loss";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
    }
}

TEST(BuildDataset, MissingFrameFileIsHardError) {
    AnnotationSet ann;
    ann.frames.push_back({"not_there.pgm", {}});
    EXPECT_THROW(build_dataset(ann, "/nonexistent_dir", kIntr, small_extraction(), TrainConfig{}),
                 std::runtime_error);
}

TEST(BuildDataset, DeterministicForSeed) {
    const CorpusFixture fx(3, 29);
    TrainConfig cfg;
    cfg.negatives_per_frame = 3;
    cfg.seed = 7;
    const auto a = build_dataset(fx.annotations, fx.dir.string(), kIntr, small_extraction(), cfg);
    const auto b = build_dataset(fx.annotations, fx.dir.string(), kIntr, small_extraction(), cfg);
    ASSERT_EQ(a.patches.size(), b.patches.size());
    for (std::size_t i = 0; i < a.patches.size(); ++i) {
        EXPECT_EQ(a.patches[i].patch, b.patches[i].patch);
        EXPECT_EQ(a.patches[i].label, b.patches[i].label);
    }
}

TEST(AugmentFlip, DoublesAndPreservesLabels) {
    const auto base = flat_patches(3, -0.4f, 0.8f);
    const auto doubled = augment_flip(base);
    ASSERT_EQ(doubled.size(), base.size() * 2);
    for (std::size_t i = 0; i < base.size(); ++i) {
        EXPECT_EQ(doubled[i].label, base[i].label);
        EXPECT_EQ(doubled[base.size() + i].label, base[i].label);
    }
}

TEST(AugmentFlip, DoubleFlipIsBitwiseIdentity) {
    std::mt19937 rng(5);
    std::vector<LabeledPatch> base(2);
    for (auto& p : base) {
        p.patch.resize(64 * 64);
        for (auto& v : p.patch) v = static_cast<float>(uniform_real(rng, -1.0, 1.0));
    }
    const auto once = augment_flip(base);
    // mirror of the mirror: flip the appended half again and compare
    std::vector<LabeledPatch> mirrored(once.begin() + base.size(), once.end());
    const auto twice = augment_flip(mirrored);
    for (std::size_t i = 0; i < base.size(); ++i)
        EXPECT_EQ(twice[base.size() + i].patch, base[i].patch);
}

TEST(Train, SeparableFlatPatchesReachFullAccuracyWithinFiveEpochs) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 2;
    cfg.seed = 3;
    const auto result = train(flat_patches(24, -0.5f, 0.5f), cfg);
    ASSERT_EQ(result.history.size(), 5u);
    EXPECT_EQ(result.history.back().accuracy, 1.0);
    for (const EpochStats& e : result.history) EXPECT_TRUE(std::isfinite(e.loss));
}

TEST(Train, DeterministicModelBytesForSeed) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 9;
    const auto dataset = flat_patches(6, -0.3f, 0.6f);
    const auto a = train(dataset, cfg);
    const auto b = train(dataset, cfg);
    EXPECT_EQ(save_model(a.model), save_model(b.model));
}

TEST(Train, OverfitsTwoSamples) {
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 1;
    cfg.seed = 1;
    const auto result = train(flat_patches(1, -0.5f, 0.5f), cfg);
    EXPECT_LT(result.history.back().loss, 1e-2);
}

TEST(Train, SingleClassDatasetIsConfigError) {
    std::vector<LabeledPatch> only_neg(4);
    for (auto& p : only_neg) {
        p.patch.assign(64 * 64, 0.1f);
        p.label = kClassNonHead;
    }
    TrainConfig cfg;
    EXPECT_THROW(train(only_neg, cfg), std::invalid_argument);
    EXPECT_THROW(train({}, cfg), std::invalid_argument);
}
