/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The evframe Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "evframe/corruption.hpp"
#include "evframe/formats_io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace evframe;
namespace fs = std::filesystem;

namespace {

std::vector<CorruptionType> all_types() {
  std::vector<CorruptionType> t;
  for (int i = 0; i < kNumCorruptionTypes; ++i) t.push_back(static_cast<CorruptionType>(i));
  return t;
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("evframe_corruption_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<fs::path> write_corpus(const fs::path& dir, int n, int w, int h) {
  Rng rng(77);
  std::vector<fs::path> paths;
  for (int i = 0; i < n; ++i) {
    paths.push_back(dir / ("scene" + std::to_string(i) + (i % 2 ? ".pgm" : ".ppm")));
    write_file(paths.back(), encode_pnm(fixture::synthetic_scene(w, h, i % 2 ? 1 : 3, rng)));
  }
  return paths;
}

}  // namespace

TEST(SeverityTable, GaussianRow) {
  const double expected[] = {0.04, 0.08, 0.12, 0.18, 0.26};
  for (int s = 1; s <= 5; ++s) EXPECT_EQ(severity_params(CorruptionType::kGaussianNoise, s)[0], expected[s - 1]);
}

TEST(SeverityTable, PixelateStartsAboveOne) {
  EXPECT_GT(severity_params(CorruptionType::kPixelate, 1)[0], 1.0);
}

TEST(SeverityTable, OutOfRangeSeverity) {
  EXPECT_THROW(severity_params(CorruptionType::kFog, 0), DomainError);
  EXPECT_THROW(severity_params(CorruptionType::kFog, 6), DomainError);
  Image img(4, 4, 1);
  EXPECT_THROW(apply_corruption(img, {CorruptionType::kFog, 7, 0}), DomainError);
}

TEST(SeverityTable, StrictlyMonotoneInDegradationDirection) {
  for (auto t : all_types()) {
    const auto& schema = param_schema(t);
    bool any_moving = false;
    for (std::size_t k = 0; k < schema.count; ++k) {
      const int dir = schema.direction[k];
      any_moving |= dir != 0;
      for (int s = 1; s < 5; ++s) {
        const double a = severity_params(t, s)[k], b = severity_params(t, s + 1)[k];
        if (dir == 0)
          EXPECT_EQ(a, b) << corruption_name(t) << " " << schema.names[k];
        else if (dir > 0)
          EXPECT_GE(b, a) << corruption_name(t) << " " << schema.names[k];
        else
          EXPECT_LE(b, a) << corruption_name(t) << " " << schema.names[k];
      }
    }
    EXPECT_TRUE(any_moving) << corruption_name(t);
    // the leading parameter moves at every step
    const int lead = schema.direction[0];
    ASSERT_NE(lead, 0) << corruption_name(t);
    for (int s = 1; s < 5; ++s)
      EXPECT_GT(lead * (severity_params(t, s + 1)[0] - severity_params(t, s)[0]), 0.0) << corruption_name(t);
    EXPECT_EQ(severity_params(t, 1).count, schema.count);
  }
}

TEST(ApplyCorruption, IdentityParameters) {
  Rng rng(1);
  const auto img = fixture::synthetic_scene(40, 30, 3, rng);
  const auto same = [&](CorruptionType t, std::initializer_list<double> v) {
    CorruptionParams p;
    for (double x : v) p.values[p.count++] = x;
    return apply_corruption_params(img, t, p, 5) == img;
  };
  EXPECT_TRUE(same(CorruptionType::kBrightness, {0.0}));
  EXPECT_TRUE(same(CorruptionType::kPixelate, {1.0}));
  EXPECT_TRUE(same(CorruptionType::kGaussianNoise, {0.0}));
  EXPECT_TRUE(same(CorruptionType::kImpulseNoise, {0.0}));
  EXPECT_TRUE(same(CorruptionType::kShotNoise, {1e12}));
  EXPECT_TRUE(same(CorruptionType::kContrast, {1.0}));
  EXPECT_TRUE(same(CorruptionType::kMotionBlur, {1.0}));
  EXPECT_TRUE(same(CorruptionType::kDefocusBlur, {0.0, 0.5}));
}

TEST(ApplyCorruption, GaussianNoiseStd) {
  const Image img(64, 64, 1, 128);
  const auto out = apply_corruption(img, {CorruptionType::kGaussianNoise, 3, 11});
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double d = (out.pixels[i] - img.pixels[i]) / 255.0;
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(img.pixels.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, 0.12, 0.012);
}

TEST(ApplyCorruption, DeterministicAndShapePreserving) {
  Rng rng(2);
  for (int channels : {1, 3}) {
    const auto img = fixture::synthetic_scene(37, 23, channels, rng);
    for (auto t : all_types())
      for (int s = 1; s <= 5; ++s) {
        const CorruptionSpec spec{t, s, 1234};
        const auto a = apply_corruption(img, spec);
        EXPECT_EQ(a.width, img.width);
        EXPECT_EQ(a.height, img.height);
        EXPECT_EQ(a.channels, img.channels);
        EXPECT_EQ(a.pixels.size(), img.pixels.size());
        EXPECT_EQ(a, apply_corruption(img, spec)) << corruption_name(t) << " s" << s;
      }
  }
}

TEST(ApplyCorruption, SeedChangesRandomTypes) {
  Rng rng(3);
  const auto img = fixture::synthetic_scene(32, 32, 3, rng);
  for (auto t : {CorruptionType::kGaussianNoise, CorruptionType::kShotNoise, CorruptionType::kImpulseNoise,
                 CorruptionType::kGlassBlur, CorruptionType::kFog, CorruptionType::kSnow, CorruptionType::kFrost,
                 CorruptionType::kElastic})
    EXPECT_NE(apply_corruption(img, {t, 3, 1}), apply_corruption(img, {t, 3, 2})) << corruption_name(t);
}

TEST(ApplyCorruption, TinyImages) {
  for (auto t : all_types())
    for (int s : {1, 5}) {
      const auto out = apply_corruption(Image(1, 1, 3, 200), {t, s, 9});
      EXPECT_EQ(out.pixels.size(), 3u) << corruption_name(t);
      const auto row = apply_corruption(Image(5, 1, 1, 10), {t, s, 9});
      EXPECT_EQ(row.pixels.size(), 5u) << corruption_name(t);
    }
}

TEST(ApplyCorruption, MeanPsnrFallsWithSeverity) {
  Rng rng(4);
  std::vector<Image> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back(fixture::synthetic_scene(96, 72, 3, rng));
  for (auto t : all_types()) {
    double prev = INFINITY;
    for (int s = 1; s <= 5; ++s) {
      double mean = 0;
      for (std::size_t i = 0; i < corpus.size(); ++i)
        mean += oracle::psnr(corpus[i], apply_corruption(corpus[i], {t, s, corruption_seed(3, i, t, s)}));
      mean /= static_cast<double>(corpus.size());
      EXPECT_LE(mean, prev + 0.5) << corruption_name(t) << " s" << s;
      prev = std::min(prev, mean);
    }
  }
}

TEST(Jpeg, QuantTablesScaleWithQuality) {
  const auto q50 = detail::scaled_quant(detail::kLumaQuant, 50);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(q50[i], detail::kLumaQuant[i]);
  const auto q10 = detail::scaled_quant(detail::kLumaQuant, 10);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_GE(q10[i], q50[i]);
}

TEST(Plasma, NormalisedAndSeeded) {
  Rng a(5), b(5);
  const auto p = detail::plasma_fractal(64, 2.0, a);
  EXPECT_EQ(p, detail::plasma_fractal(64, 2.0, b));
  EXPECT_EQ(*std::min_element(p.begin(), p.end()), 0.0);
  EXPECT_EQ(*std::max_element(p.begin(), p.end()), 1.0);
}

TEST(Manifest, Roundtrip) {
  std::vector<CorruptionManifestRow> rows{{"a.ppm", "out/0_a__fog__s2.ppm", CorruptionType::kFog, 2, 99},
                                          {"b.pgm", "out/1_b__jpeg_compression__s5.pgm",
                                           CorruptionType::kJpegCompression, 5, 18446744073709551615ull}};
  const auto back = decode_corruption_manifest(encode_corruption_manifest(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].seed, rows[1].seed);
  EXPECT_EQ(back[0].type, CorruptionType::kFog);
  EXPECT_EQ(back[1].dst, rows[1].dst);
  EXPECT_THROW(decode_corruption_manifest("{\"src\":1}\n"), ParseError);
}

TEST(CorruptDataset, TwoImagesGiveFullGrid) {
  const auto dir = scratch_dir("grid");
  const auto inputs = write_corpus(dir, 2, 32, 24);
  const auto rows = corrupt_dataset(inputs, dir / "out", 42);
  ASSERT_EQ(rows.size(), 150u);
  const auto manifest = decode_corruption_manifest(read_file(dir / "out" / "manifest.jsonl"));
  ASSERT_EQ(manifest.size(), 150u);
  std::set<std::tuple<std::string, int, int>> cells;
  std::set<std::uint64_t> seeds;
  for (const auto& r : manifest) {
    EXPECT_TRUE(fs::exists(r.dst)) << r.dst;
    cells.emplace(r.src, static_cast<int>(r.type), r.severity);
    seeds.insert(r.seed);
  }
  EXPECT_EQ(cells.size(), 150u);
  EXPECT_EQ(seeds.size(), 150u);
  const auto pgm = decode_pnm(read_file(manifest[80].dst));
  EXPECT_EQ(pgm.channels, 1);
  fs::remove_all(dir);
}

TEST(CorruptDataset, RerunIsByteIdenticalAcrossThreadCounts) {
  const auto dir = scratch_dir("rerun");
  const auto inputs = write_corpus(dir, 2, 24, 16);
  const auto a = corrupt_dataset(inputs, dir / "a", 7, 1);
  const auto b = corrupt_dataset(inputs, dir / "b", 7, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(read_file(a[i].dst), read_file(b[i].dst));
    EXPECT_EQ(a[i].seed, b[i].seed);
  }
  const auto c = corrupt_dataset(inputs, dir / "c", 8, 1);
  EXPECT_NE(read_file(a[0].dst), read_file(c[0].dst));
  fs::remove_all(dir);
}

TEST(CorruptDataset, Errors) {
  EXPECT_THROW(corrupt_dataset({}, scratch_dir("empty"), 1), DomainError);
  EXPECT_THROW(corrupt_dataset({"/nonexistent/x.ppm"}, scratch_dir("missing"), 1), IoError);
}
