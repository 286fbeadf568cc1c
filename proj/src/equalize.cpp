#include "msgpm/equalize.hpp"

#include <algorithm>
#include <cmath>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

int value_bin(const double* rgb) {
  const double v = std::max({rgb[0], rgb[1], rgb[2]});
  return int(std::lround(v * 255.0));
}

}  // namespace

std::array<int, 256> equalization_lut(const std::array<std::size_t, 256>& histogram) {
  std::array<int, 256> lut{};
  std::size_t total = 0, cdf_min = 0;
  for (std::size_t count : histogram) {
    if (cdf_min == 0 && count > 0) cdf_min = count;
    total += count;
  }
  if (total == cdf_min) {
    for (int v = 0; v < 256; ++v) lut[std::size_t(v)] = v;
    return lut;
  }
  std::size_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += histogram[std::size_t(v)];
    const double scaled = cdf <= cdf_min ? 0.0 : double(cdf - cdf_min) * 255.0 / double(total - cdf_min);
    lut[std::size_t(v)] = int(std::lround(scaled));
  }
  return lut;
}

Image equalize_value_channel(const Image& rgb) {
  if (rgb.channels() != 3)
    throw InvalidArgument("imgcore", "histogram equalization requires a 3-channel image");
  std::array<std::size_t, 256> histogram{};
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x) ++histogram[std::size_t(value_bin(rgb.pixel(x, y)))];
  const auto lut = equalization_lut(histogram);

  Image out(rgb.width(), rgb.height(), 3);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const double* p = rgb.pixel(x, y);
      const double v = std::max({p[0], p[1], p[2]});
      const double target = lut[std::size_t(value_bin(p))] / 255.0;
      // Scaling RGB by V'/V is the HSV round trip with H and S held fixed.
      for (int c = 0; c < 3; ++c) out.set(x, y, c, v > 0.0 ? p[c] * (target / v) : target);
    }
  }
  return out;
}

std::pair<Image, Image> hsv_histogram_equalize(const Image& a, const Image& b) {
  return {equalize_value_channel(a), equalize_value_channel(b)};
}

}  // namespace msgpm
