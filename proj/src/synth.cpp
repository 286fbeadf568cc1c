#include "msgpm/synth.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

const char* kModule = "synth";

struct Wave {
  double kx, ky, phase;
  double amp[3];
};

struct Texture {
  double base[3];
  std::vector<Wave> waves;

  void eval(Vec2 p, double* out) const {
    for (int c = 0; c < 3; ++c) out[c] = base[c];
    for (const Wave& w : waves) {
      const double s = std::sin(w.kx * p.x + w.ky * p.y + w.phase);
      for (int c = 0; c < 3; ++c) out[c] += w.amp[c] * s;
    }
  }
};

Texture make_texture(std::mt19937_64& rng, const SceneLayer& layer, const SceneOptions& opts) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Texture t;
  for (int c = 0; c < 3; ++c) t.base[c] = layer.base_color ? (*layer.base_color)[std::size_t(c)] : 0.3 + 0.4 * u01(rng);
  const double lo = std::log(opts.min_wavelength), hi = std::log(opts.max_wavelength);
  for (int k = 0; k < opts.components; ++k) {
    const double lambda = std::exp(lo + (hi - lo) * u01(rng));
    const double theta = 2.0 * std::numbers::pi * u01(rng);
    const double f = 2.0 * std::numbers::pi / lambda;
    Wave w{f * std::cos(theta), f * std::sin(theta), 2.0 * std::numbers::pi * u01(rng), {}};
    for (double& a : w.amp) a = layer.texture_gain * (0.03 + 0.04 * u01(rng)) * (u01(rng) < 0.5 ? -1.0 : 1.0);
    t.waves.push_back(w);
  }
  return t;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

void check_no_horizon(const Homography& h, int width, int height) {
  const Eigen::Matrix3d& m = h.matrix();
  const double corners[4][2] = {{0, 0}, {double(width - 1), 0}, {0, double(height - 1)},
                                {double(width - 1), double(height - 1)}};
  double first = 0.0;
  for (const auto& c : corners) {
    const double w = m(2, 0) * c[0] + m(2, 1) * c[1] + m(2, 2);
    if (std::abs(w) < 1e-9 || (first != 0.0 && (w > 0) != (first > 0)))
      throw NumericError(kModule, "horizon in frame");
    if (first == 0.0) first = w;
  }
}

}  // namespace

bool point_in_polygon(const std::vector<Vec2>& polygon, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
    const Vec2 a = polygon[i], b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

Homography tilted_translation(Vec2 center, Vec2 t, double p31, double p32) {
  Eigen::Matrix3d to, tilt, back;
  to << 1, 0, -center.x, 0, 1, -center.y, 0, 0, 1;
  tilt << 1, 0, 0, 0, 1, 0, p31, p32, 1;
  back << 1, 0, center.x + t.x, 0, 1, center.y + t.y, 0, 0, 1;
  return Homography(Eigen::Matrix3d(back * tilt * to));
}

SynthScene make_plane_scene(const std::vector<SceneLayer>& layers, const SceneOptions& opts) {
  if (opts.width < 1 || opts.height < 1) throw InvalidArgument(kModule, "empty frame");
  if (opts.components < 1 || !(opts.min_wavelength >= 2.0) || opts.max_wavelength < opts.min_wavelength)
    throw InvalidArgument(kModule, "bad texture spectrum");
  if (layers.empty()) throw InvalidArgument(kModule, "no layers");
  bool has_background = false;
  for (const auto& l : layers) {
    if (l.polygon.empty()) {
      has_background = true;
    } else if (l.polygon.size() < 3 || polygon_area(l.polygon) < 1e-9) {
      throw InvalidArgument(kModule, "degenerate polygon");
    }
    check_no_horizon(l.motion, opts.width, opts.height);
    check_no_horizon(l.motion.inverse(), opts.width, opts.height);
  }
  if (!has_background) throw InvalidArgument(kModule, "layers do not cover the frame: no background layer");

  std::vector<std::size_t> order(layers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return layers[x].depth < layers[y].depth; });

  std::mt19937_64 rng(opts.texture_seed);
  std::vector<Texture> textures;
  std::vector<Homography> inverses;
  for (const auto& l : layers) {
    textures.push_back(make_texture(rng, l, opts));
    inverses.push_back(l.motion.inverse());
  }
  auto covers = [&](std::size_t li, Vec2 p) { return layers[li].polygon.empty() || point_in_polygon(layers[li].polygon, p); };

  const int w = opts.width, h = opts.height;
  const std::size_t n = std::size_t(w) * std::size_t(h);
  std::vector<double> da(n * 3), db(n * 3);
  SynthScene s{Image(), Image(), FlowField(w, h), OcclusionMask(w, h), std::vector<int>(n, -1)};
  std::normal_distribution<double> noise(0.0, opts.noise_sigma > 0.0 ? opts.noise_sigma : 1.0);
  auto store = [&](std::vector<double>& dst, std::size_t i, const double* rgb, double shift) {
    for (int c = 0; c < 3; ++c) {
      double v = rgb[c] + shift;
      if (opts.noise_sigma > 0.0) v += noise(rng);
      dst[i * 3 + std::size_t(c)] = std::clamp(v, 0.0, 1.0);
    }
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * std::size_t(w) + std::size_t(x);
      const Vec2 p{double(x), double(y)};
      double rgb[3];

      std::size_t vis = order.back();
      for (std::size_t li : order)
        if (covers(li, p)) {
          vis = li;
          break;
        }
      s.layer[i] = int(vis);
      textures[vis].eval(p, rgb);
      store(da, i, rgb, 0.0);

      const Vec2 q = apply(layers[vis].motion, p);
      s.gt.set(i, q - p);
      // Tolerance absorbs rounding of exact integer targets on the border.
      constexpr double tol = 1e-9;
      bool occluded = !(q.x >= -tol && q.y >= -tol && q.x <= w - 1 + tol && q.y <= h - 1 + tol);
      for (std::size_t li : order) {
        if (occluded || layers[li].depth >= layers[vis].depth) break;
        if (covers(li, apply(inverses[li], q))) occluded = true;
      }
      s.occ.set(i, occluded);

      bool drawn = false;
      for (std::size_t li : order) {
        const Vec2 src = apply(inverses[li], p);
        if (!covers(li, src)) continue;
        textures[li].eval(src, rgb);
        drawn = true;
        break;
      }
      if (!drawn) throw InvalidArgument(kModule, "layers do not cover the second frame");
      store(db, i, rgb, opts.brightness_shift);
    }
  }
  s.a = Image(w, h, 3, std::move(da));
  s.b = Image(w, h, 3, std::move(db));
  return s;
}

SynthScene two_plane_fixture(std::uint64_t seed, double brightness_shift) {
  SceneLayer bg;
  bg.motion = Homography::translation(-2.0, 1.0);
  bg.depth = 1;
  SceneLayer fg;
  fg.polygon = {{70, 60}, {190, 70}, {185, 180}, {75, 175}};
  fg.motion = tilted_translation({130, 120}, {8.0, 7.0}, 2e-4, -1e-4);
  fg.depth = 0;
  SceneOptions opts;
  opts.texture_seed = seed;
  opts.brightness_shift = brightness_shift;
  return make_plane_scene({fg, bg}, opts);
}

SynthScene small_plane_fixture(std::uint64_t seed) {
  using G = SmallPlaneGeometry;
  SceneLayer bg;
  bg.depth = 1;
  SceneLayer fg;
  const double lo = G::x0 - 0.5, hi = G::x0 + G::side - 0.5;
  fg.polygon = {{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}};
  fg.motion = Homography::translation(14.0, 10.0);
  fg.depth = 0;
  SceneOptions opts;
  opts.texture_seed = seed;
  return make_plane_scene({fg, bg}, opts);
}

SynthScene thin_bar_fixture(std::uint64_t seed) {
  using G = ThinBarGeometry;
  SceneLayer bg;
  bg.depth = 1;
  bg.base_color = std::array<double, 3>{0.45, 0.5, 0.55};
  SceneLayer bar;
  const double x0 = G::x0 - 0.5, x1 = G::x0 + G::width - 0.5;
  const double y0 = G::y0 - 0.5, y1 = G::y0 + G::height - 0.5;
  bar.polygon = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  bar.motion = Homography::translation(double(G::shift), 0.0);
  bar.depth = 0;
  bar.base_color = std::array<double, 3>{0.9, 0.15, 0.1};
  SceneOptions opts;
  opts.texture_seed = seed;
  return make_plane_scene({bar, bg}, opts);
}

}  // namespace msgpm
