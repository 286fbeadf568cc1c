#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "msgpm/homography.hpp"
#include "msgpm/image.hpp"

namespace msgpm {

// One rigid planar surface. The polygon is its extent in image 1; an empty
// polygon is an infinite background. Smaller depth is nearer the camera.
struct SceneLayer {
  std::vector<Vec2> polygon;
  Homography motion;  // image 1 -> image 2
  int depth = 0;
  std::optional<std::array<double, 3>> base_color;
  double texture_gain = 1.0;
};

struct SceneOptions {
  int width = 256;
  int height = 256;
  std::uint64_t texture_seed = 1;
  int components = 16;          // sinusoids per layer
  double min_wavelength = 8.0;  // pixels
  double max_wavelength = 40.0;
  double noise_sigma = 0.0;      // optional Gaussian intensity noise
  double brightness_shift = 0.0;  // added to every channel of image 2
};

struct SynthScene {
  Image a;
  Image b;
  FlowField gt;
  OcclusionMask occ;
  std::vector<int> layer;  // visible layer index per pixel of image 1
};

// Renders both frames analytically from per-layer textures attached to the
// surfaces, so image 2 needs no resampling. Occluded pixels of image 1 are
// those whose target leaves the frame or lands under a nearer layer.
SynthScene make_plane_scene(const std::vector<SceneLayer>& layers, const SceneOptions& opts);

bool point_in_polygon(const std::vector<Vec2>& polygon, Vec2 p);

// Homography that moves points near `center` by `t` with a small projective
// tilt (p31, p32) about that center.
Homography tilted_translation(Vec2 center, Vec2 t, double p31, double p32);

// Fixtures shared by the CLI and the acceptance suite.
// Textured quad over a translating background, relative motion about 11 px.
SynthScene two_plane_fixture(std::uint64_t seed, double brightness_shift = 0.0);
// 32x32 square at (104..135)^2 moving (14,10) over a static background.
SynthScene small_plane_fixture(std::uint64_t seed);
// 3x120 bar with a distinct color moving 12 px right over a static background.
SynthScene thin_bar_fixture(std::uint64_t seed);

struct SmallPlaneGeometry {
  static constexpr int x0 = 104, y0 = 104, side = 32;
};
struct ThinBarGeometry {
  static constexpr int x0 = 100, y0 = 68, width = 3, height = 120, shift = 12;
};

}  // namespace msgpm
