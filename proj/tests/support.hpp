#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "msgpm/image.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("msgpm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Uniform noise in [0,1].
inline msgpm::Image noise_image(int w, int h, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> d(std::size_t(w) * h * channels);
  for (double& v : d) v = u(rng);
  return msgpm::Image(w, h, channels, std::move(d));
}

inline msgpm::Image constant_image(int w, int h, int channels, double v) {
  return msgpm::Image(w, h, channels, std::vector<double>(std::size_t(w) * h * channels, v));
}

// Copies the (x0, y0, w, h) crop of `src`.
inline msgpm::Image crop(const msgpm::Image& src, int x0, int y0, int w, int h) {
  std::vector<double> d;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < src.channels(); ++c) d.push_back(src.at(x0 + x, y0 + y, c));
  return msgpm::Image(w, h, src.channels(), std::move(d));
}

inline msgpm::FlowField constant_flow(int w, int h, msgpm::Vec2 v) {
  msgpm::FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.set(x, y, v);
  return f;
}

// Independent construction of the 55-bin Middlebury wheel.
inline std::vector<std::array<double, 3>> reference_wheel() {
  std::vector<std::array<double, 3>> w;
  const int ry = 15, yg = 6, gc = 4, cb = 11, bm = 13, mr = 6;
  for (int i = 0; i < ry; ++i) w.push_back({255, std::floor(255.0 * i / ry), 0});
  for (int i = 0; i < yg; ++i) w.push_back({255 - std::floor(255.0 * i / yg), 255, 0});
  for (int i = 0; i < gc; ++i) w.push_back({0, 255, std::floor(255.0 * i / gc)});
  for (int i = 0; i < cb; ++i) w.push_back({0, 255 - std::floor(255.0 * i / cb), 255});
  for (int i = 0; i < bm; ++i) w.push_back({std::floor(255.0 * i / bm), 0, 255});
  for (int i = 0; i < mr; ++i) w.push_back({255, 0, 255 - std::floor(255.0 * i / mr)});
  for (auto& c : w)
    for (double& v : c) v /= 255.0;
  return w;
}

}  // namespace testing
