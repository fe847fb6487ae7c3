#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "udh/dataset.hpp"
#include "udh/datagen.hpp"
#include "udh/error.hpp"
#include "udh/losses.hpp"
#include "udh/pipeline.hpp"
#include "udh/warp.hpp"

namespace udh {
namespace {

namespace fs = std::filesystem;

// Even-odd point-in-polygon test.
bool inside(const CornerSet& q, double x, double y) {
  bool in = false;
  for (int i = 0, j = 3; i < 4; j = i++) {
    const Vec2 a = q.pts[i], b = q.pts[j];
    if ((a.y() > y) != (b.y() > y) && x < (b.x() - a.x()) * (y - a.y()) / (b.y() - a.y()) + a.x()) in = !in;
  }
  return in;
}

// Fraction of a regular grid of points over the square that falls in the quad.
double raster_overlap(const CornerSet& square, const CornerSet& quad, int n) {
  const double x0 = square.pts[0].x(), y0 = square.pts[0].y();
  const double side = square.pts[1].x() - x0;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) hits += inside(quad, x0 + (j + 0.5) * side / n, y0 + (i + 0.5) * side / n);
  }
  return static_cast<double>(hits) / (static_cast<double>(n) * n);
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("udh_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Image source_for(const GenConfig& cfg, std::uint64_t seed) { return procedural_image(procedural_for(cfg), seed); }

TEST(GenerateSample, ZeroRhoIsIdentity) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 0;
  SplitMix64 rng(1);
  const Sample s = generate_sample(source_for(cfg, 1), cfg, rng);
  EXPECT_EQ(s.patch_a, s.patch_b);
  ASSERT_TRUE(s.truth.has_value());
  EXPECT_TRUE(s.truth->d.isZero(0.0));
}

TEST(GenerateSample, RespectsBoundAndPlacement) {
  GenConfig cfg;
  cfg.patch_size = 128;
  cfg.rho = 32;
  const Image img = source_for(cfg, 2);
  SplitMix64 rng(2);
  for (int i = 0; i < 30; ++i) {
    const Sample s = generate_sample(img, cfg, rng);
    EXPECT_LE(s.truth->d.cwiseAbs().maxCoeff(), 32.0);
    EXPECT_GE(s.x0(), 32);
    EXPECT_GE(s.y0(), 32);
    EXPECT_LE(s.x0() + 128 + 32, img.width());
    EXPECT_LE(s.y0() + 128 + 32, img.height());
    EXPECT_EQ(s.patch_a.height(), 128);
    EXPECT_EQ(s.patch_b.width(), 128);
    EXPECT_EQ(s.patch_a, s.image_a.crop(s.x0(), s.y0(), 128, 128));
  }
}

TEST(GenerateSample, Deterministic) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 6;
  const Image img = source_for(cfg, 3);
  SplitMix64 r1(9), r2(9);
  const Sample a = generate_sample(img, cfg, r1);
  const Sample b = generate_sample(img, cfg, r2);
  EXPECT_EQ(a.patch_a, b.patch_a);
  EXPECT_EQ(a.patch_b, b.patch_b);
  EXPECT_EQ(a.truth->d, b.truth->d);
}

TEST(GenerateSample, PatchBIsCropOfInverseWarp) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 6;
  const Image img = source_for(cfg, 4);
  SplitMix64 rng(4);
  const Sample s = generate_sample(img, cfg, rng);
  // Independent route: sample image_a at H(x) for every patch pixel with the brute-force kernel.
  const Homography h = dlt_solve(s.corners_a, corners_plus_delta(s.corners_a, *s.truth));
  for (int y = 0; y < 32; y += 3) {
    for (int x = 0; x < 32; x += 3) {
      const Vec2 src = project(h, Vec2(s.x0() + x, s.y0() + y));
      EXPECT_NEAR(s.patch_b.at(y, x), oracle::brute_bilinear(s.image_a, src.x(), src.y()), 1e-6);
    }
  }
}

TEST(GenerateSample, GroundTruthReproducesPatchB) {
  GenConfig cfg;
  cfg.patch_size = 64;
  cfg.rho = 12;
  SplitMix64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Sample s = generate_sample(source_for(cfg, 50 + i), cfg, rng);
    const PhotometricResult r = photometric_objective(s.image_a, s.corners_a, s.patch_b, *s.truth, false);
    EXPECT_LT(r.loss, 1e-6);
  }
}

TEST(GenerateSample, Errors) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 4;
  SplitMix64 rng(6);
  try {
    generate_sample(Image(36, 60, 1), cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
  cfg.rho = 16;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Illumination, Examples) {
  const Image flat(4, 4, 1, 0.5);
  const Image shifted = apply_illumination(flat, 0.1, 1.0);
  for (double x : shifted.values()) EXPECT_NEAR(x, 0.6, 1e-15);
  const Image img = oracle::random_image(5, 5, 1, 7);
  EXPECT_EQ(apply_illumination(img, 0.0, 1.0), img);
  const Image clamped = apply_illumination(Image(2, 2, 1, 0.95), 0.2, 1.0);
  for (double x : clamped.values()) EXPECT_EQ(x, 1.0);
  const Image gamma = apply_illumination(Image(2, 2, 1, 0.25), 0.0, 0.5);
  for (double x : gamma.values()) EXPECT_NEAR(x, 0.5, 1e-15);
}

TEST(Illumination, AugmentPreservesGeometryAndIsSeeded) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 4;
  SplitMix64 rng(8);
  const Sample s = generate_sample(source_for(cfg, 8), cfg, rng);
  AugmentConfig aug;
  aug.enabled = true;
  SplitMix64 r1(3), r2(3);
  const Sample a = augment_illumination(s, aug, r1);
  const Sample b = augment_illumination(s, aug, r2);
  EXPECT_EQ(a.truth->d, s.truth->d);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a.corners_a.pts[k], s.corners_a.pts[k]);
  EXPECT_EQ(a.patch_a, b.patch_a);
  EXPECT_EQ(a.patch_b, b.patch_b);
  EXPECT_NE(a.patch_a, s.patch_a);
  for (double x : a.patch_b.values()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  // image_a follows patch_a, so the crop relation still holds.
  EXPECT_EQ(a.patch_a, a.image_a.crop(a.x0(), a.y0(), 32, 32));

  AugmentConfig none;
  none.brightness_max = 0.0;
  none.gamma_lo = none.gamma_hi = 1.0;
  SplitMix64 r3(4);
  const Sample same = augment_illumination(s, none, r3);
  EXPECT_EQ(same.patch_a, s.patch_a);
  EXPECT_EQ(same.patch_b, s.patch_b);
}

TEST(DatasetStats, Examples) {
  Sample s;
  s.patch_a = Image(2, 2, 1, 0.5);
  s.patch_b = Image(2, 2, 1, 0.5);
  std::vector<Sample> one{s};
  DatasetStats st = dataset_stats(one);
  EXPECT_DOUBLE_EQ(st.mean, 0.5);
  EXPECT_EQ(st.std, 0.0);

  Sample t;
  t.patch_a = Image(1, 1, 1, 0.0);
  t.patch_b = Image(1, 1, 1, 1.0);
  std::vector<Sample> two{t};
  st = dataset_stats(two);
  EXPECT_DOUBLE_EQ(st.mean, 0.5);
  EXPECT_DOUBLE_EQ(st.std, 0.5);

  std::vector<Sample> many;
  std::vector<double> all;
  for (int i = 0; i < 5; ++i) {
    Sample r;
    r.patch_a = oracle::random_image(6, 6, 1, 100 + i);
    r.patch_b = oracle::random_image(6, 6, 1, 200 + i);
    for (double x : r.patch_a.values()) all.push_back(x);
    for (double x : r.patch_b.values()) all.push_back(x);
    many.push_back(r);
  }
  const auto expect = oracle::two_pass_stats(all);
  st = dataset_stats(many);
  EXPECT_NEAR(st.mean, expect[0], 1e-9);
  EXPECT_NEAR(st.std, expect[1], 1e-9);

  try {
    dataset_stats(std::vector<Sample>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(Overlap, FractionMatchesRaster) {
  SplitMix64 rng(10);
  const CornerSet sq = CornerSet::square(0, 0, 100);
  EXPECT_DOUBLE_EQ(quad_overlap_fraction(sq, sq), 1.0);
  EXPECT_NEAR(quad_overlap_fraction(sq, corners_plus_delta(sq, FourPointDelta::uniform(50, 0))), 0.5, 1e-12);
  for (int t = 0; t < 20; ++t) {
    FourPointDelta d;
    for (int i = 0; i < 8; ++i) d.d(i / 2, i % 2) = rng.uniform(-40, 40);
    const CornerSet q = corners_plus_delta(sq, d);
    EXPECT_NEAR(quad_overlap_fraction(sq, q), raster_overlap(sq, q, 400), 2e-3);
  }
}

TEST(Overlap, ZeroRhoIsFull) { EXPECT_DOUBLE_EQ(mean_overlap(0.0, 128, 100, 1), 1.0); }

TEST(Overlap, PresetsHitTargets) {
  for (const std::string name : {"small", "moderate", "large"}) {
    const double rho = overlap_preset(name);
    EXPECT_GT(rho, 0.0);
    EXPECT_LT(rho, 64.0);
    // Independent estimate: raster overlap averaged over fresh random deltas.
    SplitMix64 rng(11);
    const CornerSet sq = patch_corners(0, 0, 128);
    double sum = 0.0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
      FourPointDelta d;
      for (int i = 0; i < 8; ++i) d.d(i / 2, i % 2) = rng.uniform(-rho, rho);
      sum += raster_overlap(sq, corners_plus_delta(sq, d), 100);
    }
    EXPECT_NEAR(sum / trials, overlap_preset_target(name), 0.02) << name;
  }
  EXPECT_LT(overlap_preset("small"), overlap_preset("moderate"));
  EXPECT_LT(overlap_preset("moderate"), overlap_preset("large"));
  try {
    overlap_preset("huge");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPreset);
  }
}

TEST(Dataset, SplitsStatsAndDeterminism) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 4;
  cfg.seed = 12;
  cfg.count = 12;
  const Dataset a = generate_dataset(cfg, {}, 4);
  const Dataset b = generate_dataset(cfg, {}, 4);
  EXPECT_EQ(a.split("train").size(), 8u);
  EXPECT_EQ(a.split("test").size(), 4u);
  EXPECT_EQ(a.manifest.test, (std::vector<int>{8, 9, 10, 11}));
  std::vector<Sample> train;
  for (const Sample* s : a.split("train")) train.push_back(*s);
  const DatasetStats st = dataset_stats(train);
  EXPECT_EQ(a.manifest.stats.mean, st.mean);
  EXPECT_EQ(a.manifest.stats.std, st.std);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].patch_b, b.samples[i].patch_b);
    EXPECT_EQ(a.samples[i].image_a, b.samples[i].image_a);
  }
  EXPECT_THROW(a.split("validation"), Error);
}

TEST(Dataset, UserSourcesAreCycled) {
  GenConfig cfg;
  cfg.patch_size = 16;
  cfg.rho = 2;
  cfg.count = 4;
  std::vector<Image> sources{oracle::smooth_image(30, 40, 0.0), oracle::smooth_image(30, 40, 1.0)};
  const Dataset d = generate_dataset(cfg, sources, 1);
  EXPECT_EQ(d.samples[0].image_a.width(), 40);
  EXPECT_EQ(d.manifest.source, "images");
}

TEST(Dataset, RecordAndManifestRoundTrip) {
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 4;
  cfg.seed = 13;
  cfg.count = 5;
  cfg.augment.enabled = true;
  const Dataset ds = generate_dataset(cfg, {}, 2);
  const fs::path dir = temp_dir("dataset_roundtrip");
  write_dataset(dir, ds);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / record_name(4)));
  const Dataset back = read_dataset(dir);
  EXPECT_EQ(back.manifest.train, ds.manifest.train);
  EXPECT_EQ(back.manifest.test, ds.manifest.test);
  EXPECT_EQ(back.manifest.stats.mean, ds.manifest.stats.mean);
  EXPECT_EQ(back.manifest.config.rho, 4.0);
  EXPECT_TRUE(back.manifest.config.augment.enabled);
  ASSERT_EQ(back.samples.size(), ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].patch_a, ds.samples[i].patch_a);
    EXPECT_EQ(back.samples[i].patch_b, ds.samples[i].patch_b);
    EXPECT_EQ(back.samples[i].image_a, ds.samples[i].image_a);
    EXPECT_EQ(back.samples[i].truth->d, ds.samples[i].truth->d);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(back.samples[i].corners_a.pts[k], ds.samples[i].corners_a.pts[k]);
  }
  fs::remove_all(dir);
}

TEST(Dataset, RecordWithoutTruth) {
  Sample s;
  s.patch_a = Image(4, 4, 1, 0.25);
  s.patch_b = Image(4, 4, 1, 0.75);
  s.image_a = Image(6, 6, 1, 0.5);
  s.corners_a = patch_corners(1, 1, 4);
  const fs::path dir = temp_dir("record_no_truth");
  write_record(dir / "r.bin", s);
  const Sample back = read_record(dir / "r.bin");
  EXPECT_FALSE(back.truth.has_value());
  EXPECT_EQ(back.patch_b, s.patch_b);
  fs::remove_all(dir);
}

TEST(Dataset, CorruptRecordRejected) {
  const fs::path dir = temp_dir("record_corrupt");
  {
    std::ofstream f(dir / "bad.bin", std::ios::binary);
    f << "NOTARECORD";
  }
  try {
    read_record(dir / "bad.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Format);
  }
  try {
    read_dataset(dir / "missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
  fs::remove_all(dir);
}

TEST(Procedural, RangeAndSeed) {
  ProceduralConfig pc;
  pc.width = 50;
  pc.height = 40;
  const Image a = procedural_image(pc, 1);
  EXPECT_EQ(a, procedural_image(pc, 1));
  EXPECT_NE(a, procedural_image(pc, 2));
  const auto [lo, hi] = std::minmax_element(a.values().begin(), a.values().end());
  EXPECT_NEAR(*lo, 0.05, 1e-12);
  EXPECT_NEAR(*hi, 0.95, 1e-12);
}

}  // namespace
}  // namespace udh
