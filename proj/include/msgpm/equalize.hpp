#pragma once

#include <array>
#include <utility>

#include "msgpm/image.hpp"

namespace msgpm {

// Equalizes the V channel of each image over its own 256-bin histogram,
// keeping hue and saturation. Both inputs must be 3-channel.
std::pair<Image, Image> hsv_histogram_equalize(const Image& a, const Image& b);

Image equalize_value_channel(const Image& rgb);

// Lookup table for a 256-bin histogram:
// lut[v] = round((cdf[v] - cdf_min) * 255 / (total - cdf_min)).
// A single occupied bin maps to itself.
std::array<int, 256> equalization_lut(const std::array<std::size_t, 256>& histogram);

}  // namespace msgpm
