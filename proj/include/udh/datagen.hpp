#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udh/geom.hpp"
#include "udh/image.hpp"
#include "udh/rng.hpp"

namespace udh {

struct AugmentConfig {
  bool enabled = false;
  double brightness_max = 0.2;  // offset drawn from [-brightness_max, brightness_max]
  double gamma_lo = 0.8;
  double gamma_hi = 1.25;
};

struct GenConfig {
  int patch_size = 128;
  double rho = 32.0;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  int count = 0;

  void validate() const;
};

/// Multi-scale value noise (Catmull-Rom interpolated lattices) scaled to [0.05, 0.95].
struct ProceduralConfig {
  int width = 320;
  int height = 240;
  int feature_size = 32;  // lattice spacing of the coarsest octave, px
  int octaves = 3;        // each octave halves the spacing (never below 4 px) and amplitude
};

Image procedural_image(const ProceduralConfig& cfg, std::uint64_t seed);

/// Procedural settings sized for a given patch configuration.
ProceduralConfig procedural_for(const GenConfig& cfg);

struct Sample {
  Image patch_a;
  Image patch_b;
  Image image_a;
  CornerSet corners_a;
  std::optional<FourPointDelta> truth;

  /// Top-left pixel of the patch within image_a.
  int x0() const { return static_cast<int>(corners_a.pts[0].x()); }
  int y0() const { return static_cast<int>(corners_a.pts[0].y()); }
};

/// Corners of a patch whose top-left pixel is (x0, y0): the centers of its four corner pixels.
CornerSet patch_corners(int x0, int y0, int patch_size);

/// Crops a random patch, perturbs its corners by U[-rho, rho], warps the full
/// image by the inverse homography and crops the same window. All rasters and
/// the offsets are rounded to float precision, the storage precision on disk.
Sample generate_sample(const Image& img, const GenConfig& cfg, SplitMix64& rng);

/// clamp(x^gamma + delta, 0, 1) per pixel.
Image apply_illumination(const Image& img, double delta, double gamma);

/// Independent brightness/gamma draws for each side of the pair. image_a
/// receives the same transform as patch_a so the two stay consistent.
Sample augment_illumination(const Sample& s, const AugmentConfig& cfg, SplitMix64& rng);

struct DatasetStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Population mean / std over every patch_a and patch_b pixel.
DatasetStats dataset_stats(std::span<const Sample> samples);

/// Fraction of the square's area covered by the quadrilateral.
double quad_overlap_fraction(const CornerSet& square, const CornerSet& quad);

/// Monte-Carlo mean overlap between a patch and its rho-perturbed quadrilateral.
double mean_overlap(double rho, int patch_size, int trials, std::uint64_t seed);

/// rho for the "small" (85%), "moderate" (75%) and "large" (65%) overlap regimes.
double overlap_preset(const std::string& name, int patch_size = 128);

/// Target overlap fraction for a preset name.
double overlap_preset_target(const std::string& name);

}  // namespace udh
