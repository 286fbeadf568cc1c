#include "msgpm/flow_color.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

// Segment lengths of the Middlebury wheel: red-yellow, yellow-green,
// green-cyan, cyan-blue, blue-magenta, magenta-red.
constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
static_assert(kRY + kYG + kGC + kCB + kBM + kMR == kColorWheelBins);

std::array<std::array<double, 3>, kColorWheelBins> make_wheel() {
  std::array<std::array<double, 3>, kColorWheelBins> w{};
  int k = 0;
  for (int i = 0; i < kRY; ++i) w[k++] = {255.0, std::floor(255.0 * i / kRY), 0.0};
  for (int i = 0; i < kYG; ++i) w[k++] = {255.0 - std::floor(255.0 * i / kYG), 255.0, 0.0};
  for (int i = 0; i < kGC; ++i) w[k++] = {0.0, 255.0, std::floor(255.0 * i / kGC)};
  for (int i = 0; i < kCB; ++i) w[k++] = {0.0, 255.0 - std::floor(255.0 * i / kCB), 255.0};
  for (int i = 0; i < kBM; ++i) w[k++] = {std::floor(255.0 * i / kBM), 0.0, 255.0};
  for (int i = 0; i < kMR; ++i) w[k++] = {255.0, 0.0, 255.0 - std::floor(255.0 * i / kMR)};
  for (auto& c : w)
    for (auto& v : c) v /= 255.0;
  return w;
}

const auto& wheel() {
  static const auto w = make_wheel();
  return w;
}

double epe_at(const FlowField& f, const FlowField& gt, std::size_t i) {
  return (f.at(i) - gt.at(i)).norm();
}

}  // namespace

void color_wheel_entry(int k, double rgb[3]) {
  const auto& c = wheel()[std::size_t(k)];
  rgb[0] = c[0];
  rgb[1] = c[1];
  rgb[2] = c[2];
}

Vec2 color_wheel_position(Vec2 flow) {
  const double a = std::atan2(-flow.y, -flow.x) / std::numbers::pi;
  return {(a + 1.0) / 2.0 * (kColorWheelBins - 1), flow.norm()};
}

Image flow_to_color(const FlowField& flow, std::optional<double> max_magnitude) {
  double max_mag = 0.0;
  if (max_magnitude) {
    max_mag = *max_magnitude;
  } else {
    for (std::size_t i = 0; i < flow.size(); ++i)
      if (flow.valid(i)) max_mag = std::max(max_mag, flow.at(i).norm());
  }
  if (!(max_mag > 0.0)) max_mag = 1.0;

  const auto& w = wheel();
  Image out(flow.width(), flow.height(), 3);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const auto f = flow.get(x, y);
      if (!f) continue;  // black
      const Vec2 n = (1.0 / max_mag) * *f;
      const double fk = color_wheel_position(n).x;
      const double rad = std::min(n.norm(), 1.0);
      const int k0 = std::clamp(int(std::floor(fk)), 0, kColorWheelBins - 1);
      const int k1 = (k0 + 1) % kColorWheelBins;
      const double frac = fk - k0;
      for (int c = 0; c < 3; ++c) {
        const double col = (1.0 - frac) * w[std::size_t(k0)][std::size_t(c)] + frac * w[std::size_t(k1)][std::size_t(c)];
        out.set(x, y, c, 1.0 - rad * (1.0 - col));
      }
    }
  }
  return out;
}

Image epe_difference_map(const FlowField& a, const FlowField& b, const FlowField& gt) {
  if (!a.same_size(gt.width(), gt.height()) || !b.same_size(gt.width(), gt.height()))
    throw InvalidArgument("imgcore", "epe_difference_map: dimension mismatch");
  Image out(gt.width(), gt.height(), 3);
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const std::size_t i = gt.index(x, y);
      const double d = epe_at(a, gt, i) - epe_at(b, gt, i);
      const double* color = d == 0.0  ? diffmap::kZero
                            : d < -1.0 ? diffmap::kABetter
                            : d > 1.0  ? diffmap::kBBetter
                            : d < 0.0  ? diffmap::kBandABetter
                                       : diffmap::kBandBBetter;
      for (int c = 0; c < 3; ++c) out.set(x, y, c, color[c]);
    }
  }
  return out;
}

}  // namespace msgpm
