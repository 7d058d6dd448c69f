#include "depthhead/candidates.hpp"

#include <gtest/gtest.h>

#include <random>

#include "depthhead/rng.hpp"

using namespace depthhead;

namespace {

const CameraIntrinsics kIntr{500.0, 500.0, 256.0, 212.0};

DepthFrame uniform_frame(int w, int h, std::uint16_t depth) {
    return DepthFrame(w, h, kIntr, depth);
}

}  // namespace

TEST(HeadBoxAt, DirectEvaluation) {
    const auto [w, h] = head_box_at(kIntr, 1000.0, 200.0);
    EXPECT_DOUBLE_EQ(w, 100.0);
    EXPECT_DOUBLE_EQ(h, 100.0);
}

TEST(HeadBoxAt, HalvesWithDoubledDistance) {
    const auto [w, h] = head_box_at(kIntr, 2000.0, 200.0);
    EXPECT_DOUBLE_EQ(w, 50.0);
    EXPECT_DOUBLE_EQ(h, 50.0);
}

TEST(HeadBoxAt, FarDistanceFallsBelowMinPatch) {
    const CameraIntrinsics intr{365.0, 365.0, 256.0, 212.0};
    const auto [w, h] = head_box_at(intr, 5000.0, 200.0);
    EXPECT_NEAR(w, 14.6, 1e-9);
    EXPECT_NEAR(h, 14.6, 1e-9);
    EXPECT_LT(w, 15.0);
}

TEST(HeadBoxAt, RejectsNonPositiveDistance) {
    EXPECT_THROW(head_box_at(kIntr, 0.0, 200.0), std::invalid_argument);
    EXPECT_THROW(head_box_at(kIntr, -5.0, 200.0), std::invalid_argument);
}

TEST(HeadBoxAt, StrictlyDecreasingInDistance) {
    std::mt19937 rng(23);
    for (int i = 0; i < 200; ++i) {
        const double d1 = uniform_real(rng, 500.0, 7999.0);
        const double d2 = d1 + uniform_real(rng, 1.0, 500.0);
        const auto [w1, h1] = head_box_at(kIntr, d1, 200.0);
        const auto [w2, h2] = head_box_at(kIntr, d2, 200.0);
        EXPECT_GT(w1, w2);
        EXPECT_GT(h1, h2);
    }
}

TEST(ExtractCandidates, FullGridOnUniformFrame) {
    ExtractionConfig cfg;
    cfg.k = 9;
    const DepthFrame f = uniform_frame(512, 424, 1000);
    const auto cands = extract_candidates(f, cfg);
    // one center per 9x9 tile: ceil(512/9) * ceil(424/9)
    EXPECT_EQ(cands.size(), 57u * 48u);
    for (const Candidate& c : cands) {
        EXPECT_DOUBLE_EQ(c.box.w, 100.0);
        EXPECT_DOUBLE_EQ(c.box.h, 100.0);
        EXPECT_DOUBLE_EQ(c.distance_mm, 1000.0);
    }
}

TEST(ExtractCandidates, AllZeroFrameYieldsNothing) {
    ExtractionConfig cfg;
    const DepthFrame f = uniform_frame(64, 48, 0);
    EXPECT_TRUE(extract_candidates(f, cfg).empty());
}

TEST(ExtractCandidates, FarUniformFrameRejectedByMinPatch) {
    ExtractionConfig cfg;
    cfg.k = 9;
    const DepthFrame f = uniform_frame(128, 96, 7000);  // box = 500*200/7000 = 14.3 < 15
    EXPECT_TRUE(extract_candidates(f, cfg).empty());
}

TEST(ExtractCandidates, CountBoundedByGridSize) {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = static_cast<int>(uniform_int(rng, 20, 90));
        const int h = static_cast<int>(uniform_int(rng, 20, 90));
        DepthFrame f(w, h, kIntr, 0);
        for (auto& v : f.pixels())
            v = uniform_unit(rng) < 0.5 ? 0 : static_cast<std::uint16_t>(uniform_int(rng, 600, 3000));
        ExtractionConfig cfg;
        cfg.k = static_cast<int>(uniform_int(rng, 2, 12));
        const auto cands = extract_candidates(f, cfg);
        const std::size_t bound =
            static_cast<std::size_t>((w + cfg.k - 1) / cfg.k) * ((h + cfg.k - 1) / cfg.k);
        EXPECT_LE(cands.size(), bound);
    }
}

TEST(ExtractCandidates, PatchOfFlatForegroundIsZero) {
    ExtractionConfig cfg;
    cfg.k = 9;
    const DepthFrame f = uniform_frame(256, 192, 1200);
    const auto cands = extract_candidates(f, cfg);
    std::size_t checked = 0;
    for (const Candidate& c : cands) {
        // boxes clipped by the frame edge pick up -1 padding; skip those
        if (c.box.x_min() < 0 || c.box.y_min() < 0 || c.box.x_max() > f.width() ||
            c.box.y_max() > f.height())
            continue;
        ++checked;
        for (const float v : c.patch) EXPECT_FLOAT_EQ(v, 0.0f);
    }
    EXPECT_GT(checked, 0u);
}

TEST(ExtractCandidates, PatchValuesAlwaysInRange) {
    std::mt19937 rng(41);
    DepthFrame f(100, 80, kIntr, 0);
    for (auto& v : f.pixels())
        v = uniform_unit(rng) < 0.1 ? 0 : static_cast<std::uint16_t>(uniform_int(rng, 500, 8000));
    ExtractionConfig cfg;
    cfg.k = 5;
    for (const Candidate& c : extract_candidates(f, cfg)) {
        for (const float v : c.patch) {
            EXPECT_GE(v, -1.0f);
            EXPECT_LE(v, 1.0f);
        }
    }
}

TEST(ExtractCandidates, SmallerStrideKeepsAlignedCenters) {
    // K = 9 centers (4 + 9i) all appear in the K = 3 grid (1 + 3i); on a
    // uniform frame both strides measure the same depth, so every K = 9
    // survivor must reappear at the same coordinates for K = 3.
    ExtractionConfig coarse;
    coarse.k = 9;
    ExtractionConfig fine;
    fine.k = 3;
    const DepthFrame f = uniform_frame(90, 63, 1500);
    const auto cands9 = extract_candidates(f, coarse);
    const auto cands3 = extract_candidates(f, fine);
    ASSERT_FALSE(cands9.empty());
    for (const Candidate& c : cands9) {
        bool found = false;
        for (const Candidate& d : cands3)
            if (d.center.x == c.center.x && d.center.y == c.center.y) found = true;
        EXPECT_TRUE(found) << "center (" << c.center.x << "," << c.center.y << ")";
    }
}

TEST(CropNormalize, FlatCropAtCandidateDistanceIsZero) {
    ExtractionConfig cfg;
    const DepthFrame f = uniform_frame(64, 64, 1000);
    const auto patch = crop_normalize(f, {32, 32, 20, 20}, 1000.0, cfg);
    for (const float v : patch) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(CropNormalize, DeeperThanBackgroundCutoffMapsToMinusOne) {
    ExtractionConfig cfg;  // l = 300
    DepthFrame f = uniform_frame(32, 32, 1000);
    for (int y = 0; y < 32; ++y)
        for (int x = 16; x < 32; ++x) f.at(x, y) = 1400;  // beyond 1000 + 300
    const auto patch = crop_normalize(f, {16, 16, 32, 32}, 1000.0, cfg);
    EXPECT_FLOAT_EQ(patch[0], 0.0f);                  // left half at D
    EXPECT_FLOAT_EQ(patch[cfg.patch_side - 1], -1.0f);  // right half suppressed
}

TEST(CropNormalize, ConstantCropResizesToConstant) {
    ExtractionConfig cfg;
    const DepthFrame f = uniform_frame(64, 64, 1150);
    const auto patch = crop_normalize(f, {32, 32, 30, 30}, 1000.0, cfg);
    for (const float v : patch) EXPECT_FLOAT_EQ(v, 0.5f);  // (1150-1000)/300
}

TEST(CropNormalize, OutOfFrameAreaIsBackground) {
    ExtractionConfig cfg;
    cfg.patch_side = 16;
    const DepthFrame f = uniform_frame(32, 32, 1000);
    // box centered on the top-left corner: three quarters out of frame
    const auto patch = crop_normalize(f, {0, 0, 16, 16}, 1000.0, cfg);
    EXPECT_FLOAT_EQ(patch[0], -1.0f);                      // outside
    EXPECT_FLOAT_EQ(patch[15 * cfg.patch_side + 15], 0.0f);  // inside
}

TEST(PatchDump, MapsNormalizedRangeOntoFull16Bits) {
    std::vector<float> patch(16 * 16, 0.0f);
    patch[0] = -1.0f;
    patch[1] = 1.0f;
    const std::string path = testing::TempDir() + "/depthhead_patch_dump.pgm";
    write_patch_pgm16(path, patch);
    const DepthFrame img = read_pgm16_file(path);
    EXPECT_EQ(img.width(), 16);
    EXPECT_EQ(img.at(0, 0), 0);
    EXPECT_EQ(img.at(1, 0), 65535);
    EXPECT_EQ(img.at(2, 0), 32768);  // midpoint
    std::vector<float> not_square(10, 0.0f);
    EXPECT_THROW(write_patch_pgm16(path, not_square), std::invalid_argument);
}

TEST(CropNormalize, BoxEntirelyOutsideThrows) {
    ExtractionConfig cfg;
    const DepthFrame f = uniform_frame(32, 32, 1000);
    EXPECT_THROW(crop_normalize(f, {100, 100, 10, 10}, 1000.0, cfg), std::invalid_argument);
    EXPECT_THROW(crop_normalize(f, {-50, 5, 10, 10}, 1000.0, cfg), std::invalid_argument);
}
