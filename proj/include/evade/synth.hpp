#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "evade/dataset.hpp"
#include "evade/errors.hpp"
#include "evade/rng.hpp"

namespace evade {

// --- 2-D two-cluster toy set (Figure-2 style) --------------------------------

struct ToyConfig {
  std::size_t n_first = 150;   // cluster carrying the attacked targets
  std::size_t n_second = 150;
  double cx1 = -0.6, cy1 = -0.2;
  double cx2 = -0.1, cy2 = -0.7;
  double sigma1 = 0.21;
  double sigma2 = 0.21;
  int first_label = 1;
  int second_label = 2;
  std::uint64_t seed = 7;
};

// Two Gaussian clusters in [-1,1]^2 (draws clamped to the square).
inline Dataset toy_two_cluster(const ToyConfig& cfg = {}) {
  if (cfg.n_first == 0 || cfg.n_second == 0)
    throw FormatError("toy_two_cluster: cluster sizes must be positive");
  Rng rng(cfg.seed);
  Dataset ds;
  ds.feature_count = 2;
  ds.feature_range = Interval{-1.0, 1.0};
  auto emit = [&](std::size_t n, double cx, double cy, double sigma, int label) {
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      s.label = label;
      s.features = {std::clamp(cx + sigma * rng.normal(), -1.0, 1.0),
                    std::clamp(cy + sigma * rng.normal(), -1.0, 1.0)};
      ds.samples.push_back(std::move(s));
    }
  };
  emit(cfg.n_first, cfg.cx1, cfg.cy1, cfg.sigma1, cfg.first_label);
  emit(cfg.n_second, cfg.cx2, cfg.cy2, cfg.sigma2, cfg.second_label);
  ds.classes = {std::min(cfg.first_label, cfg.second_label),
                std::max(cfg.first_label, cfg.second_label)};
  return ds;
}

// --- stroke-rendered digit corpus (MNIST geometry: 28x28 bytes) ---------------

struct DigitSynthConfig {
  std::vector<int> classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t per_class = 100;
  std::uint64_t seed = 1;
  double jitter_px = 1.6;   // uniform translation amplitude
  double rotation = 0.14;   // uniform rotation amplitude, radians
  double scale_lo = 0.88, scale_hi = 1.12;
  double thickness_lo = 1.7, thickness_hi = 2.7;  // stroke diameter, pixels
  double antialias = 0.7;                         // edge falloff half-width
  double waviness = 0.0;    // per-control-point gaussian wobble, pixels
  double intensity = 1.0;   // peak stroke brightness as a fraction of 255
  // Optional per-class multiplier on all variation amplitudes; classes not
  // listed use 1.0. Lets one class be rendered "sloppier" than another.
  std::map<int, double> class_variation;
  // Optional per-class sample count; classes not listed use per_class.
  std::map<int, std::size_t> class_count;
  // Optional confusable-handwriting drift: a share of a class's samples is
  // rendered as a pixel blend between its own skeleton and another digit's
  // (same affine jitter, label unchanged), creating in-between images. A class
  // may carry several drift populations; their fractions partition the class
  // front to back.
  struct MorphSpec {
    int toward = 0;                         // skeleton the drifted samples lean to
    double fraction = 0.0;                  // share of the class rendered drifted
    double blend_lo = 0.3, blend_hi = 0.7;  // interpolation factor range
  };
  std::map<int, std::vector<MorphSpec>> class_morph;
};

namespace detail {

using Point = std::array<double, 2>;        // (x, y), y grows downward
using Polyline = std::vector<Point>;

inline Polyline ellipse_polyline(double cx, double cy, double rx, double ry) {
  constexpr int kSegments = 28;
  Polyline p;
  p.reserve(kSegments + 1);
  for (int i = 0; i <= kSegments; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * double(i) / double(kSegments);
    p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return p;
}

// Skeletons in the unit square; rendering maps them into the 20x20 box
// centered on the 28x28 canvas, matching MNIST framing.
inline const std::vector<Polyline>& digit_skeleton(int digit) {
  static const std::array<std::vector<Polyline>, 10> table = {{
      /*0*/ {ellipse_polyline(0.50, 0.50, 0.30, 0.42)},
      /*1*/ {{{0.33, 0.28}, {0.55, 0.12}, {0.55, 0.90}}},
      /*2*/ {{{0.28, 0.30},
              {0.34, 0.17},
              {0.50, 0.12},
              {0.66, 0.17},
              {0.72, 0.32},
              {0.64, 0.50},
              {0.46, 0.65},
              {0.30, 0.80},
              {0.28, 0.88},
              {0.74, 0.88}}},
      /*3*/ {{{0.30, 0.17},
              {0.50, 0.12},
              {0.68, 0.20},
              {0.68, 0.34},
              {0.50, 0.45},
              {0.68, 0.52},
              {0.74, 0.70},
              {0.58, 0.86},
              {0.34, 0.86},
              {0.28, 0.76}}},
      /*4*/ {{{0.58, 0.10}, {0.26, 0.60}, {0.78, 0.60}}, {{0.62, 0.16}, {0.62, 0.92}}},
      /*5*/ {{{0.70, 0.12},
              {0.32, 0.12},
              {0.30, 0.45},
              {0.52, 0.40},
              {0.70, 0.50},
              {0.72, 0.68},
              {0.56, 0.86},
              {0.34, 0.84},
              {0.28, 0.72}}},
      /*6*/ {{{0.64, 0.10},
              {0.44, 0.22},
              {0.32, 0.45},
              {0.30, 0.68},
              {0.40, 0.86},
              {0.58, 0.86},
              {0.68, 0.72},
              {0.62, 0.56},
              {0.46, 0.52},
              {0.34, 0.62}}},
      /*7*/ {{{0.26, 0.14}, {0.74, 0.14}, {0.44, 0.90}}},
      /*8*/ {ellipse_polyline(0.50, 0.30, 0.19, 0.17), ellipse_polyline(0.50, 0.67, 0.23, 0.20)},
      /*9*/ {ellipse_polyline(0.52, 0.32, 0.20, 0.19), {{0.72, 0.34}, {0.68, 0.60}, {0.55, 0.90}}},
  }};
  if (digit < 0 || digit > 9)
    throw FormatError("synth_digits: digit class " + std::to_string(digit) + " out of 0..9");
  return table[static_cast<std::size_t>(digit)];
}

inline double segment_distance(double px, double py, const Point& a, const Point& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = px - a[0], wy = py - a[1];
  const double vv = vx * vx + vy * vy;
  const double t = vv > 0.0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
  const double dx = px - (a[0] + t * vx), dy = py - (a[1] + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace detail

// Deterministic 28x28 grayscale digits: fixed per-digit stroke skeletons with
// a seeded random affine jitter (shift, rotation, scale) and stroke thickness
// per sample, rasterized with a soft anti-aliased edge. Raw byte features in
// [0,255]; samples are emitted class by class in the given order.
inline Dataset synth_digits(const DigitSynthConfig& cfg = {}) {
  if (cfg.classes.empty()) throw FormatError("synth_digits: no classes requested");
  if (cfg.per_class == 0) throw FormatError("synth_digits: per_class must be positive");
  if (!(cfg.intensity > 0.0) || cfg.intensity > 1.0)
    throw FormatError("synth_digits: intensity must lie in (0,1]");
  for (const auto& [digit, specs] : cfg.class_morph) {
    double total = 0.0;
    for (const auto& spec : specs) {
      detail::digit_skeleton(spec.toward);  // validates the target digit
      if (spec.fraction < 0.0 || spec.fraction > 1.0)
        throw FormatError("synth_digits: morph fraction must lie in [0,1]");
      if (spec.blend_lo < 0.0 || spec.blend_hi > 1.0 || spec.blend_lo > spec.blend_hi)
        throw FormatError("synth_digits: morph blend range must be ordered within [0,1]");
      total += spec.fraction;
    }
    if (total > 1.0)
      throw FormatError("synth_digits: morph fractions for class " + std::to_string(digit) +
                        " exceed 1");
  }
  constexpr int kSide = 28;
  constexpr double kBox = 20.0, kOffset = 4.0, kCenter = 14.0;

  Rng rng(cfg.seed);
  Dataset ds;
  ds.feature_count = kSide * kSide;
  ds.feature_range = Interval{0.0, 255.0};
  ds.samples.reserve(cfg.classes.size() * cfg.per_class);

  std::vector<detail::Polyline> strokes;
  for (int digit : cfg.classes) {
    const auto& skeleton = detail::digit_skeleton(digit);
    const auto it = cfg.class_variation.find(digit);
    const double var = it == cfg.class_variation.end() ? 1.0 : it->second;
    const double scale_mid = 0.5 * (cfg.scale_lo + cfg.scale_hi);
    const double scale_half = 0.5 * (cfg.scale_hi - cfg.scale_lo) * var;
    const double thick_mid = 0.5 * (cfg.thickness_lo + cfg.thickness_hi);
    const double thick_half = 0.5 * (cfg.thickness_hi - cfg.thickness_lo) * var;
    const auto cit = cfg.class_count.find(digit);
    const std::size_t count = cit == cfg.class_count.end() ? cfg.per_class : cit->second;
    const auto mit = cfg.class_morph.find(digit);
    for (std::size_t i = 0; i < count; ++i) {
      const double dx = var * cfg.jitter_px * (2.0 * rng.uniform01() - 1.0);
      const double dy = var * cfg.jitter_px * (2.0 * rng.uniform01() - 1.0);
      const double theta = var * cfg.rotation * (2.0 * rng.uniform01() - 1.0);
      const double scale = scale_mid + scale_half * (2.0 * rng.uniform01() - 1.0);
      const double thick =
          std::max(0.8, thick_mid + thick_half * (2.0 * rng.uniform01() - 1.0));
      const double c = std::cos(theta), s = std::sin(theta);
      const double radius = 0.5 * thick;

      auto render = [&](const std::vector<detail::Polyline>& skel, std::vector<double>& cov) {
        strokes.clear();
        for (const auto& line : skel) {
          detail::Polyline out;
          out.reserve(line.size());
          for (const auto& p : line) {
            double ux = kOffset + kBox * p[0] - kCenter;
            double uy = kOffset + kBox * p[1] - kCenter;
            if (cfg.waviness > 0.0) {
              ux += var * cfg.waviness * rng.normal();
              uy += var * cfg.waviness * rng.normal();
            }
            out.push_back({kCenter + scale * (c * ux - s * uy) + dx,
                           kCenter + scale * (s * ux + c * uy) + dy});
          }
          strokes.push_back(std::move(out));
        }
        cov.assign(std::size_t(kSide) * kSide, 0.0);
        for (int r = 0; r < kSide; ++r) {
          for (int col = 0; col < kSide; ++col) {
            const double px = col + 0.5, py = r + 0.5;
            double dist = std::numeric_limits<double>::infinity();
            for (const auto& line : strokes)
              for (std::size_t k = 0; k + 1 < line.size(); ++k)
                dist = std::min(dist, detail::segment_distance(px, py, line[k], line[k + 1]));
            cov[std::size_t(r) * kSide + std::size_t(col)] =
                std::clamp((radius + cfg.antialias - dist) / (2.0 * cfg.antialias), 0.0, 1.0);
          }
        }
      };

      std::vector<double> cov;
      render(skeleton, cov);
      if (mit != cfg.class_morph.end()) {
        // Fractions slice the class front to back: spec 0 owns the first
        // fraction*count samples, spec 1 the next slice, and so on.
        double edge = 0.0;
        for (const auto& spec : mit->second) {
          const double next = edge + spec.fraction * double(count);
          if (double(i) >= edge && double(i) < next) {
            std::vector<double> cov2;
            render(detail::digit_skeleton(spec.toward), cov2);
            const double m = spec.blend_lo + (spec.blend_hi - spec.blend_lo) * rng.uniform01();
            for (std::size_t k = 0; k < cov.size(); ++k)
              cov[k] = (1.0 - m) * cov[k] + m * cov2[k];
            break;
          }
          edge = next;
        }
      }

      Sample sample;
      sample.label = digit;
      sample.features.resize(ds.feature_count);
      for (std::size_t k = 0; k < cov.size(); ++k)
        sample.features[k] = static_cast<double>(std::lround(255.0 * cfg.intensity * cov[k]));
      ds.samples.push_back(std::move(sample));
    }
  }
  ds.classes = detail::sorted_distinct_labels(ds.samples);
  return ds;
}

}  // namespace evade
