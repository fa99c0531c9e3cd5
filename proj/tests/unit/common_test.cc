// Copyright 2026 The vidplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"
#include "vidplan/common/frame.h"
#include "vidplan/common/rng.h"

namespace vidplan {
namespace {

TEST(RngTest, SeededStreamsRepeat) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(a.NextU64(), b.NextU64());
  }
  Rng c(42), d(42);
  for (int i = 0; i < 101; ++i) ASSERT_EQ(c.Normal(), d.Normal());
}

TEST(RngTest, UniformIntCoversInclusiveRange) {
  Rng rng(3);
  int seen[5] = {0};
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.UniformInt(2, 6);
    ASSERT_GE(v, 2);
    ASSERT_LE(v, 6);
    ++seen[v - 2];
  }
  for (int k : seen) EXPECT_GT(k, 800);
}

TEST(RngTest, NormalMoments) {
  Rng rng(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.Normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(RngTest, DerivedSeedsDiffer) {
  EXPECT_NE(DeriveSeed(1, 0), DeriveSeed(1, 1));
  EXPECT_NE(DeriveSeed(1, 0), DeriveSeed(2, 0));
  EXPECT_EQ(DeriveSeed(7, 3), DeriveSeed(7, 3));
}

TEST(BinaryIoTest, RoundTripAndBounds) {
  BinaryWriter w;
  w.Put<uint32_t>(0xdeadbeef);
  w.PutString("hello");
  const std::vector<double> xs{1.5, -2.25, 1e300};
  w.PutDoubles(xs);
  BinaryReader r(w.bytes());
  EXPECT_EQ(r.Get<uint32_t>(), 0xdeadbeefu);
  EXPECT_EQ(r.GetString(), "hello");
  EXPECT_EQ(r.GetDoubles(), xs);
  EXPECT_TRUE(r.AtEnd());
  EXPECT_THROW(r.Get<uint8_t>(), FormatError);

  BinaryReader truncated(std::string_view(w.bytes()).substr(0, 10));
  truncated.Get<uint32_t>();
  EXPECT_THROW(truncated.GetString(), FormatError);
}

TEST(BinaryIoTest, ChecksumsMatchKnownVectors) {
  EXPECT_EQ(Crc32("123456789"), 0xCBF43926u);
  EXPECT_EQ(Fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(Fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(HexDigest(0xabcull), "0000000000000abc");
}

TEST(FrameTest, GrayIsChannelMean) {
  Frame f(2, 2);
  f.at(1, 0, 0) = 0.3;
  f.at(1, 0, 1) = 0.6;
  f.at(1, 0, 2) = 0.9;
  const auto g = ToGray(f);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(g[2], 0.6, 1e-15);
  EXPECT_THROW(RequireSameShape(f, Frame(3, 2)), ShapeError);
}

TEST(FrameTest, PpmRoundTripAtByteResolution) {
  Frame f(3, 4);
  for (size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = (i * 17 % 256) / 255.0;
  const auto path =
      (std::filesystem::temp_directory_path() / "vidplan_frame_test.ppm").string();
  WritePpm(f, path);
  const Frame g = ReadPnm(path);
  std::remove(path.c_str());
  ASSERT_TRUE(g.SameShape(f));
  for (size_t i = 0; i < f.pixels.size(); ++i) EXPECT_NEAR(g.pixels[i], f.pixels[i], 1e-12);
}

TEST(FrameTest, ReadPnmRejectsGarbage) {
  const auto path =
      (std::filesystem::temp_directory_path() / "vidplan_garbage.pnm").string();
  WriteFileBytes(path, "not an image");
  EXPECT_THROW(ReadPnm(path), Error);
  std::remove(path.c_str());
  EXPECT_THROW(ReadPnm(path), IoError);
}

}  // namespace
}  // namespace vidplan
