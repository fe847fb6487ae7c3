#include "udh/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "udh/error.hpp"
#include "udh/warp.hpp"

namespace udh {

namespace {

constexpr int kMaxDeltaRetries = 10;
constexpr int kPresetTrials = 10000;
constexpr std::uint64_t kPresetSeed = 0x0ea7;

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

void round_to_float(Image& img) {
  for (double& x : img.values()) x = static_cast<double>(static_cast<float>(x));
}

using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

// Sutherland-Hodgman: clips `subject` against the convex, counter-clockwise `clip`.
Polygon clip_polygon(Polygon subject, const Polygon& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % clip.size()];
    auto side = [&](const Vec2& p) { return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x()); };
    Polygon out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Vec2 cur = subject[i];
      const Vec2 prev = subject[(i + subject.size() - 1) % subject.size()];
      const double sc = side(cur);
      const double sp = side(prev);
      if (sc >= 0.0) {
        if (sp < 0.0) out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
        out.push_back(cur);
      } else if (sp >= 0.0) {
        out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

Polygon to_ccw(const CornerSet& c) {
  Polygon p(c.pts.begin(), c.pts.end());
  if (polygon_area(p) < 0.0) std::reverse(p.begin(), p.end());
  return p;
}

}  // namespace

void GenConfig::validate() const {
  if (patch_size < 2) throw Error(ErrorCode::InvalidConfig, "patch_size must be at least 2");
  if (!(rho >= 0.0) || !(rho < patch_size / 2.0)) {
    throw Error(ErrorCode::InvalidConfig, "rho must lie in [0, patch_size / 2)");
  }
  if (augment.brightness_max < 0.0 || !(augment.gamma_lo > 0.0) || augment.gamma_hi < augment.gamma_lo) {
    throw Error(ErrorCode::InvalidConfig, "invalid augmentation ranges");
  }
}

Image procedural_image(const ProceduralConfig& cfg, std::uint64_t seed) {
  Image img(cfg.height, cfg.width, 1);
  double amplitude = 1.0;
  int cell = std::max(cfg.feature_size, 4);
  for (int octave = 0; octave < cfg.octaves; ++octave) {
    const int gw = cfg.width / cell + 4;
    const int gh = cfg.height / cell + 4;
    SplitMix64 rng(mix_seed(seed, octave));
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& x : lattice) x = rng.uniform(-1.0, 1.0);
    auto L = [&](int gy, int gx) { return lattice[static_cast<std::size_t>(gy) * gw + gx]; };
    for (int y = 0; y < cfg.height; ++y) {
      const double fy = static_cast<double>(y) / cell + 1.0;
      const int iy = static_cast<int>(fy);
      const double ty = fy - iy;
      for (int x = 0; x < cfg.width; ++x) {
        const double fx = static_cast<double>(x) / cell + 1.0;
        const int ix = static_cast<int>(fx);
        const double tx = fx - ix;
        double rows[4];
        for (int k = 0; k < 4; ++k) {
          rows[k] = catmull_rom(L(iy - 1 + k, ix - 1), L(iy - 1 + k, ix), L(iy - 1 + k, ix + 1),
                                L(iy - 1 + k, ix + 2), tx);
        }
        img.at(y, x) += amplitude * catmull_rom(rows[0], rows[1], rows[2], rows[3], ty);
      }
    }
    amplitude *= 0.5;
    cell = std::max(cell / 2, 4);
  }
  const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  const double min = *lo, range = std::max(*hi - *lo, 1e-12);
  for (double& x : img.values()) x = 0.05 + 0.9 * (x - min) / range;
  return img;
}

ProceduralConfig procedural_for(const GenConfig& cfg) {
  ProceduralConfig p;
  const int margin = static_cast<int>(std::ceil(cfg.rho));
  p.width = cfg.patch_size * 3 / 2 + 2 * margin;
  p.height = cfg.patch_size + cfg.patch_size / 4 + 2 * margin;
  p.feature_size = std::max(8, cfg.patch_size / 8);
  p.octaves = 3;
  return p;
}

CornerSet patch_corners(int x0, int y0, int patch_size) {
  return CornerSet::square(x0, y0, patch_size - 1);
}

Sample generate_sample(const Image& img, const GenConfig& cfg, SplitMix64& rng) {
  cfg.validate();
  const int p = cfg.patch_size;
  const int margin = static_cast<int>(std::ceil(cfg.rho));
  if (img.width() < p + 2 * margin || img.height() < p + 2 * margin) {
    throw Error(ErrorCode::ImageTooSmall, "image " + std::to_string(img.width()) + "x" +
                                              std::to_string(img.height()) + " cannot host a " +
                                              std::to_string(p) + " px patch with rho " +
                                              std::to_string(cfg.rho));
  }
  Image gray = img;
  if (img.channels() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "generate_sample expects a single-channel image");
  }
  round_to_float(gray);

  const int x0 = rng.uniform_int(margin, img.width() - p - margin);
  const int y0 = rng.uniform_int(margin, img.height() - p - margin);
  const CornerSet corners = patch_corners(x0, y0, p);

  FourPointDelta delta;
  Homography h_ab;
  for (int attempt = 0;; ++attempt) {
    for (int k = 0; k < 4; ++k) {
      for (int a = 0; a < 2; ++a) {
        delta(k, a) = static_cast<double>(static_cast<float>(rng.uniform(-cfg.rho, cfg.rho)));
      }
    }
    try {
      h_ab = delta.d.isZero(0.0) ? Homography::identity() : h4pt_to_h(corners, delta);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CollinearCorners || attempt + 1 >= kMaxDeltaRetries) throw;
    }
  }

  Sample s;
  s.image_a = gray;
  s.corners_a = corners;
  s.patch_a = gray.crop(x0, y0, p, p);
  if (delta.d.isZero(0.0)) {
    s.patch_b = s.patch_a;
  } else {
    const Image warped = warp_image(gray, invert(h_ab), gray.width(), gray.height());
    s.patch_b = warped.crop(x0, y0, p, p);
    round_to_float(s.patch_b);
  }
  s.truth = delta;
  return s;
}

Image apply_illumination(const Image& img, double delta, double gamma) {
  Image out = img;
  for (double& x : out.values()) {
    const double g = gamma == 1.0 ? x : std::pow(std::max(x, 0.0), gamma);
    x = std::clamp(g + delta, 0.0, 1.0);
  }
  return out;
}

Sample augment_illumination(const Sample& s, const AugmentConfig& cfg, SplitMix64& rng) {
  const double da = rng.uniform(-cfg.brightness_max, cfg.brightness_max);
  const double ga = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
  const double db = rng.uniform(-cfg.brightness_max, cfg.brightness_max);
  const double gb = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
  Sample out = s;
  out.patch_a = apply_illumination(s.patch_a, da, ga);
  out.image_a = apply_illumination(s.image_a, da, ga);
  out.patch_b = apply_illumination(s.patch_b, db, gb);
  round_to_float(out.patch_a);
  round_to_float(out.image_a);
  round_to_float(out.patch_b);
  return out;
}

DatasetStats dataset_stats(std::span<const Sample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to compute statistics over");
  // Welford accumulation.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  auto add = [&](const Image& img) {
    for (double x : img.values()) {
      ++n;
      const double d = x - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (x - mean);
    }
  };
  for (const auto& s : samples) {
    add(s.patch_a);
    add(s.patch_b);
  }
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "samples hold no pixels");
  return {mean, std::sqrt(std::max(m2 / static_cast<double>(n), 0.0))};
}

double quad_overlap_fraction(const CornerSet& square, const CornerSet& quad) {
  const Polygon clip = to_ccw(square);
  const double base = std::abs(polygon_area(clip));
  if (!(base > 0.0)) throw Error(ErrorCode::InvalidConfig, "reference square has zero area");
  const Polygon inter = clip_polygon(to_ccw(quad), clip);
  if (inter.size() < 3) return 0.0;
  return std::abs(polygon_area(inter)) / base;
}

double mean_overlap(double rho, int patch_size, int trials, std::uint64_t seed) {
  const CornerSet square = CornerSet::square(0.0, 0.0, patch_size);
  SplitMix64 rng(seed);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    FourPointDelta d;
    for (int k = 0; k < 4; ++k) {
      d(k, 0) = rng.uniform(-rho, rho);
      d(k, 1) = rng.uniform(-rho, rho);
    }
    total += quad_overlap_fraction(square, corners_plus_delta(square, d));
  }
  return total / trials;
}

double overlap_preset_target(const std::string& name) {
  if (name == "small") return 0.85;
  if (name == "moderate") return 0.75;
  if (name == "large") return 0.65;
  throw Error(ErrorCode::UnknownPreset, "unknown overlap preset '" + name + "' (small|moderate|large)");
}

double overlap_preset(const std::string& name, int patch_size) {
  const double target = overlap_preset_target(name);
  static std::mutex mu;
  static std::map<std::pair<std::string, int>, double> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find({name, patch_size}); it != cache.end()) return it->second;

  // Mean overlap decreases monotonically in rho; bisect over [0, patch/2).
  double lo = 0.0, hi = 0.5 * patch_size;
  for (int i = 0; i < 24; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mean_overlap(mid, patch_size, kPresetTrials, kPresetSeed) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rho = 0.5 * (lo + hi);
  cache[{name, patch_size}] = rho;
  return rho;
}

}  // namespace udh
