#include "msgpm/image.hpp"

#include <algorithm>
#include <string>

#include "msgpm/error.hpp"

namespace msgpm {

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<double>(std::size_t(std::max(width, 0)) * std::max(height, 0) * std::max(channels, 0), 0.0)) {}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width <= 0 || height <= 0)
    throw InvalidArgument("imgcore", "image dimensions must be positive");
  if (channels != 1 && channels != 3)
    throw InvalidArgument("imgcore", "image must have 1 or 3 channels, got " + std::to_string(channels));
  if (data_.size() != std::size_t(width) * height * channels)
    throw InvalidArgument("imgcore", "image data length does not match dimensions");
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidArgument("imgcore", "image intensity outside [0,1]");
}

const double* Image::pixel_clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return pixel(x, y);
}

void Image::set(int x, int y, int c, double v) {
  data_[index(x, y, c)] = std::clamp(v, 0.0, 1.0);
}

void Image::sample_bilinear(Vec2 p, double* out) const {
  int x0 = int(std::floor(p.x));
  int y0 = int(std::floor(p.y));
  x0 = std::clamp(x0, 0, width_ - 1);
  y0 = std::clamp(y0, 0, height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = std::clamp(p.x - x0, 0.0, 1.0);
  const double fy = std::clamp(p.y - y0, 0.0, 1.0);
  const double* a = pixel(x0, y0);
  const double* b = pixel(x1, y0);
  const double* c = pixel(x0, y1);
  const double* d = pixel(x1, y1);
  for (int k = 0; k < channels_; ++k) {
    const double top = a[k] + fx * (b[k] - a[k]);
    const double bottom = c[k] + fx * (d[k] - c[k]);
    out[k] = top + fy * (bottom - top);
  }
}

FlowField::FlowField(int width, int height)
    : width_(width),
      height_(height),
      vectors_(std::size_t(width) * height, Vec2{kSentinel, kSentinel}),
      valid_(std::size_t(width) * height, 0) {
  if (width <= 0 || height <= 0)
    throw InvalidArgument("imgcore", "flow dimensions must be positive");
}

Vec2 FlowField::at(int x, int y) const { return at(index(x, y)); }

Vec2 FlowField::at(std::size_t i) const {
  if (!valid_[i]) throw std::logic_error("imgcore: read of invalid flow vector");
  return vectors_[i];
}

std::optional<Vec2> FlowField::get(int x, int y) const {
  const std::size_t i = index(x, y);
  if (!valid_[i]) return std::nullopt;
  return vectors_[i];
}

void FlowField::set(int x, int y, Vec2 v) { set(index(x, y), v); }

void FlowField::set(std::size_t i, Vec2 v) {
  vectors_[i] = v;
  valid_[i] = 1;
}

void FlowField::invalidate(int x, int y) { invalidate(index(x, y)); }

void FlowField::invalidate(std::size_t i) {
  vectors_[i] = Vec2{kSentinel, kSentinel};
  valid_[i] = 0;
}

std::size_t FlowField::count_valid() const {
  return std::size_t(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

bool operator==(const FlowField& a, const FlowField& b) {
  if (a.width_ != b.width_ || a.height_ != b.height_ || a.valid_ != b.valid_) return false;
  for (std::size_t i = 0; i < a.vectors_.size(); ++i)
    if (a.valid_[i] && !(a.vectors_[i] == b.vectors_[i])) return false;
  return true;
}

std::size_t OcclusionMask::count() const {
  return std::size_t(std::count(occluded_.begin(), occluded_.end(), std::uint8_t{1}));
}

std::optional<double> warped_difference(const Image& a, const Image& b, Pixel p, Vec2 q) {
  // Targets within rounding distance of the border count as inside.
  constexpr double tol = 1e-9;
  const double xmax = b.width() - 1, ymax = b.height() - 1;
  if (q.x < -tol || q.y < -tol || q.x > xmax + tol || q.y > ymax + tol) return std::nullopt;
  q = {std::clamp(q.x, 0.0, xmax), std::clamp(q.y, 0.0, ymax)};
  double sampled[3];
  b.sample_bilinear(q, sampled);
  const double* ap = a.pixel(p.x, p.y);
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) sum += std::abs(ap[c] - sampled[c]);
  return sum / a.channels();
}

}  // namespace msgpm
