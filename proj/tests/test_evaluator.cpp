#include "depthhead/evaluator.hpp"

#include <gtest/gtest.h>

#include <random>

#include "depthhead/rng.hpp"
#include "depthhead/synth.hpp"

using namespace depthhead;

namespace {

BoundingBox box(double cx, double cy, double w, double h) { return {cx, cy, w, h}; }

BoundingBox random_box(std::mt19937& rng) {
    return {uniform_real(rng, 0, 40), uniform_real(rng, 0, 40), uniform_real(rng, 1, 25),
            uniform_real(rng, 1, 25)};
}

}  // namespace

TEST(IouPaper, HandCases) {
    EXPECT_EQ(iou_paper(box(0, 0, 4, 4), box(100, 100, 4, 4)).ratio, 0.0);
    EXPECT_FALSE(iou_paper(box(0, 0, 4, 4), box(100, 100, 4, 4)).exact);

    const PaperIoU same = iou_paper(box(1, 1, 2, 2), box(1, 1, 2, 2));
    EXPECT_TRUE(same.exact);
    EXPECT_TRUE(same.exceeds(0.99));
    EXPECT_TRUE(same.exceeds(0.0));

    // intersection 2, union 6 -> 2 / (6 - 2)
    const PaperIoU half = iou_paper(box(1, 1, 2, 2), box(2, 1, 2, 2));
    EXPECT_FALSE(half.exact);
    EXPECT_DOUBLE_EQ(half.ratio, 0.5);
    EXPECT_FALSE(half.exceeds(0.5));  // the threshold is strict
}

TEST(IouStandard, HandCases) {
    EXPECT_DOUBLE_EQ(iou_standard(box(1, 1, 2, 2), box(1, 1, 2, 2)), 1.0);
    EXPECT_DOUBLE_EQ(iou_standard(box(0, 0, 4, 4), box(100, 100, 4, 4)), 0.0);
    EXPECT_NEAR(iou_standard(box(1, 1, 2, 2), box(2, 1, 2, 2)), 1.0 / 3.0, 1e-12);
}

TEST(Iou, SymmetricOnRandomPairs) {
    std::mt19937 rng(11);
    for (int i = 0; i < 300; ++i) {
        const BoundingBox a = random_box(rng), b = random_box(rng);
        const PaperIoU pab = iou_paper(a, b), pba = iou_paper(b, a);
        EXPECT_EQ(pab.ratio, pba.ratio);
        EXPECT_EQ(pab.exact, pba.exact);
        EXPECT_EQ(iou_standard(a, b), iou_standard(b, a));
    }
}

TEST(Iou, PaperRatioIsOddsOfStandardRatio) {
    // for 0 < s < 1: paper = s / (1 - s), hence paper > 1/2 iff s > 1/3
    std::mt19937 rng(13);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const BoundingBox a = random_box(rng), b = random_box(rng);
        const double s = iou_standard(a, b);
        const PaperIoU p = iou_paper(a, b);
        if (s > 0.0 && s < 1.0) {
            ASSERT_FALSE(p.exact);
            EXPECT_NEAR(p.ratio, s / (1.0 - s), 1e-9);
            EXPECT_EQ(p.ratio > 0.5, s > 1.0 / 3.0);
            ++checked;
        }
    }
    EXPECT_GT(checked, 100);
}

TEST(MatchAndScore, CleanMatchCountsTruePositive) {
    AnnotationSet ann;
    ann.frames.push_back({"f0", {box(10, 10, 10, 10)}});
    // overlap: standard 0.6+ -> paper well above 0.5
    const std::vector<FrameDetections> dets{{"f0", {{box(11, 10, 10, 10), 0.9}}, 0.0}};
    const EvalReport r = match_and_score(dets, ann, 0.5);
    EXPECT_EQ(r.tp, 1);
    EXPECT_EQ(r.fp, 0);
    EXPECT_EQ(r.fn, 0);
    EXPECT_DOUBLE_EQ(r.tp_rate, 1.0);
}

TEST(MatchAndScore, MissedHeadIsFalseNegative) {
    AnnotationSet ann;
    ann.frames.push_back({"f0", {box(10, 10, 10, 10)}});
    const EvalReport r = match_and_score({{"f0", {}, 0.0}}, ann, 0.5);
    EXPECT_EQ(r.tp, 0);
    EXPECT_EQ(r.fp, 0);
    EXPECT_EQ(r.fn, 1);
}

TEST(MatchAndScore, WeakMatchCountsBothFalsePositiveAndFalseNegative) {
    AnnotationSet ann;
    ann.frames.push_back({"f0", {box(10, 10, 10, 10)}});
    // offset 6 on side 10: standard 0.25, paper 1/3 <= tau
    const std::vector<FrameDetections> dets{{"f0", {{box(16, 10, 10, 10), 0.9}}, 0.0}};
    const EvalReport r = match_and_score(dets, ann, 0.5);
    EXPECT_EQ(r.tp, 0);
    EXPECT_EQ(r.fp, 1);
    EXPECT_EQ(r.fn, 1);
}

TEST(MatchAndScore, ExactDetectionsScorePerfectly) {
    AnnotationSet ann;
    ann.frames.push_back({"f0", {box(10, 10, 10, 10), box(30, 30, 8, 8)}});
    ann.frames.push_back({"f1", {box(20, 20, 12, 12)}});
    std::vector<FrameDetections> dets;
    for (const auto& fa : ann.frames) {
        FrameDetections fd{fa.file, {}, 0.0};
        for (const auto& b : fa.heads) fd.detections.push_back({b, 1.0});
        dets.push_back(std::move(fd));
    }
    const EvalReport r = match_and_score(dets, ann, 0.5);
    EXPECT_EQ(r.tp, 3);
    EXPECT_EQ(r.fp, 0);
    EXPECT_EQ(r.fn, 0);
    EXPECT_EQ(r.exact_matches, 3);
}

TEST(MatchAndScore, TpPlusFnEqualsHeadCountOnRandomSets) {
    std::mt19937 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        AnnotationSet ann;
        std::vector<FrameDetections> dets;
        std::size_t heads = 0;
        for (int f = 0; f < 4; ++f) {
            FrameAnnotation fa;
            fa.file = "f" + std::to_string(f);
            const int nh = static_cast<int>(uniform_int(rng, 0, 3));
            for (int i = 0; i < nh; ++i) fa.heads.push_back(random_box(rng));
            heads += fa.heads.size();
            FrameDetections fd{fa.file, {}, 0.0};
            const int nd = static_cast<int>(uniform_int(rng, 0, 4));
            for (int i = 0; i < nd; ++i) fd.detections.push_back({random_box(rng), 0.5});
            ann.frames.push_back(std::move(fa));
            dets.push_back(std::move(fd));
        }
        const EvalReport r = match_and_score(dets, ann, 0.5);
        EXPECT_EQ(static_cast<std::size_t>(r.tp + r.fn), heads);
        EXPECT_GE(r.fp, 0);
    }
}

TEST(MatchAndScore, ShrinkingTauNeverDecreasesTruePositives) {
    std::mt19937 rng(31);
    AnnotationSet ann;
    std::vector<FrameDetections> dets;
    for (int f = 0; f < 6; ++f) {
        FrameAnnotation fa;
        fa.file = "f" + std::to_string(f);
        for (int i = 0; i < 2; ++i) fa.heads.push_back(random_box(rng));
        FrameDetections fd{fa.file, {}, 0.0};
        for (int i = 0; i < 3; ++i) {
            BoundingBox b = fa.heads[i % 2];
            b.cx += uniform_real(rng, -6, 6);  // partial overlaps of varied quality
            fd.detections.push_back({b, 0.5});
        }
        ann.frames.push_back(std::move(fa));
        dets.push_back(std::move(fd));
    }
    long prev_tp = -1;
    for (const double tau : {0.9, 0.7, 0.5, 0.3, 0.1, 0.0}) {
        const long tp = match_and_score(dets, ann, tau).tp;
        if (prev_tp >= 0) EXPECT_GE(tp, prev_tp) << "tau " << tau;
        prev_tp = tp;
    }
}

TEST(MatchAndScore, StandardIouSwitchChangesThresholding) {
    AnnotationSet ann;
    ann.frames.push_back({"f0", {box(10, 10, 10, 10)}});
    // offset 4: standard = 0.375, paper = 0.6
    const std::vector<FrameDetections> dets{{"f0", {{box(14, 10, 10, 10), 0.9}}, 0.0}};
    EXPECT_EQ(match_and_score(dets, ann, 0.5, false).tp, 1);
    EXPECT_EQ(match_and_score(dets, ann, 0.5, true).tp, 0);
}

TEST(MatchAndScore, DetectionsForUnknownFrameAreRejected) {
    AnnotationSet ann;
    ann.frames.push_back({"f0", {}});
    const std::vector<FrameDetections> dets{{"mystery.pgm", {}, 0.0}};
    EXPECT_THROW(match_and_score(dets, ann, 0.5), std::invalid_argument);
}

TEST(BenchTable, SingleAndEmptyKLists) {
    Network<float> model = make_head_network();  // zero weights: scores 0.5 everywhere
    const CameraIntrinsics intr{90.0, 90.0, 48.0, 36.0};
    SceneSpec scene;
    scene.width = 96;
    scene.height = 72;
    scene.intrinsics = intr;
    scene.heads.push_back({0.0, 0.0, 900.0, 100.0, 100.0, 100.0});
    const RenderResult rr = render_depth(scene);

    AnnotationSet ann;
    ann.frames.push_back({"frame.pgm", rr.head_boxes});
    std::vector<std::pair<std::string, DepthFrame>> frames{{"frame.pgm", rr.frame}};

    DetectorConfig cfg;
    cfg.extraction.k = 5;
    const auto rows = bench_table(frames, ann, model, cfg, {5}, 0.5);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].k, 5);
    EXPECT_GT(rows[0].fps, 0.0);

    EXPECT_TRUE(bench_table(frames, ann, model, cfg, {}, 0.5).empty());
}
