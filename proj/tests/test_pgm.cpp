#include "depthhead/pgm.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "depthhead/rng.hpp"

using namespace depthhead;

TEST(Pgm16, RoundTrip) {
    std::mt19937 rng(5);
    DepthFrame f(17, 9, CameraIntrinsics{365, 365, 8, 4});
    for (auto& v : f.pixels()) v = static_cast<std::uint16_t>(rng());
    std::ostringstream out;
    write_pgm16(out, f);
    std::istringstream in(out.str());
    const DepthFrame g = read_pgm16(in, f.intrinsics());
    EXPECT_EQ(g.width(), f.width());
    EXPECT_EQ(g.height(), f.height());
    EXPECT_EQ(g.pixels(), f.pixels());
}

TEST(Pgm16, BigEndianSampleOrderIsPinned) {
    DepthFrame f(1, 1, CameraIntrinsics{});
    f.at(0, 0) = 0x1234;
    std::ostringstream out;
    write_pgm16(out, f);
    const std::string bytes = out.str();
    ASSERT_EQ(bytes.substr(0, 3), "P5\n");
    // header "P5\n1 1\n65535\n" then MSB, LSB
    ASSERT_EQ(bytes.size(), 13u + 2u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 0x12);
    EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 0x34);
}

TEST(Pgm16, HeaderCommentsAreSkipped) {
    const std::string payload = std::string("P5\n# device dump\n2 1\n# again\n65535\n") +
                                std::string{"\x01\x02\x03\x04", 4};
    std::istringstream in(payload);
    const DepthFrame f = read_pgm16(in);
    EXPECT_EQ(f.at(0, 0), 0x0102);
    EXPECT_EQ(f.at(1, 0), 0x0304);
}

TEST(Pgm16, BadMagicReportsOffset) {
    std::istringstream in("P6\n2 2\n65535\n");
    try {
        read_pgm16(in);
        FAIL() << "expected PgmError";
    } catch (const PgmError& e) {
        EXPECT_EQ(e.offset(), 0u);
        EXPECT_NE(std::string(e.what()).find("byte 0"), std::string::npos);
    }
}

TEST(Pgm16, CorruptHeaderNamesByteOffset) {
    std::istringstream in("P5\n2 x\n65535\n");
    try {
        read_pgm16(in);
        FAIL() << "expected PgmError";
    } catch (const PgmError& e) {
        EXPECT_EQ(e.offset(), 5u);  // the 'x'
        EXPECT_NE(std::string(e.what()).find("byte 5"), std::string::npos);
    }
}

TEST(Pgm16, WrongMaxvalRejected) {
    std::istringstream in("P5\n2 2\n255\n    ");
    EXPECT_THROW(read_pgm16(in), PgmError);
}

TEST(Pgm16, TruncatedRasterRejected) {
    const std::string payload = std::string("P5\n2 2\n65535\n") + std::string{"\x01\x02\x03", 3};
    std::istringstream in(payload);
    EXPECT_THROW(read_pgm16(in), PgmError);
}

TEST(Pgm16, FileRoundTripAndMissingFile) {
    DepthFrame f(4, 3, CameraIntrinsics{});
    std::uint16_t i = 100;
    for (auto& v : f.pixels()) v = i += 7;
    const std::string path = testing::TempDir() + "/depthhead_pgm_test.pgm";
    write_pgm16_file(path, f);
    const DepthFrame g = read_pgm16_file(path);
    EXPECT_EQ(g.pixels(), f.pixels());
    EXPECT_THROW(read_pgm16_file(path + ".missing"), std::runtime_error);
}
