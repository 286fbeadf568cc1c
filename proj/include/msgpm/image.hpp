#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace msgpm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm() const { return std::hypot(x, y); }
};

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(Pixel a, Pixel b) = default;
  Vec2 center() const { return {double(x), double(y)}; }
};

inline Pixel round_to_pixel(Vec2 p) {
  return {int(std::lround(p.x)), int(std::lround(p.y))};
}

// Row-major raster of intensities in [0,1] with 1 or 3 channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);  // zero-filled
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  const double* pixel(int x, int y) const { return &data_[index(x, y, 0)]; }
  // Nearest border pixel for out-of-range coordinates.
  const double* pixel_clamped(int x, int y) const;

  // Setters clamp into [0,1] so the range invariant can never be broken.
  void set(int x, int y, int c, double v);

  std::span<const double> data() const { return data_; }

  // Bilinear sample at a continuous position; the position must lie in
  // [0, width-1] x [0, height-1]. Writes `channels()` values to `out`.
  void sample_bilinear(Vec2 p, double* out) const;
  bool contains_continuous(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width_ - 1 && p.y <= height_ - 1;
  }

 private:
  std::size_t index(int x, int y, int c) const {
    return (std::size_t(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Per-pixel displacement with validity. Consumers must check valid() before
// reading a vector; invalid pixels hold a sentinel that is never meaningful.
class FlowField {
 public:
  static constexpr double kSentinel = 1e10;

  FlowField() = default;
  FlowField(int width, int height);  // all invalid

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_size(int w, int h) const { return width_ == w && height_ == h; }

  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }
  bool valid(std::size_t i) const { return valid_[i] != 0; }
  Vec2 at(int x, int y) const;
  Vec2 at(std::size_t i) const;
  std::optional<Vec2> get(int x, int y) const;

  void set(int x, int y, Vec2 v);
  void set(std::size_t i, Vec2 v);
  void invalidate(int x, int y);
  void invalidate(std::size_t i);

  std::size_t count_valid() const;
  std::size_t index(int x, int y) const { return std::size_t(y) * width_ + x; }

  friend bool operator==(const FlowField& a, const FlowField& b);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Vec2> vectors_;
  std::vector<std::uint8_t> valid_;
};

class OcclusionMask {
 public:
  OcclusionMask() = default;
  OcclusionMask(int width, int height) : width_(width), height_(height), occluded_(std::size_t(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return occluded_.size(); }
  bool occluded(int x, int y) const { return occluded_[std::size_t(y) * width_ + x] != 0; }
  bool occluded(std::size_t i) const { return occluded_[i] != 0; }
  void set(int x, int y, bool v) { occluded_[std::size_t(y) * width_ + x] = v ? 1 : 0; }
  void set(std::size_t i, bool v) { occluded_[i] = v ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> occluded_;
};

// Mean absolute channel difference between a(p) and b sampled bilinearly at q.
// Returns nullopt when q falls outside b.
std::optional<double> warped_difference(const Image& a, const Image& b, Pixel p, Vec2 q);

}  // namespace msgpm
