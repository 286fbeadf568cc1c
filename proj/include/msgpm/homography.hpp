#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msgpm/image.hpp"

namespace msgpm {

// 3x3 projective transform, stored with unit Frobenius norm and its last
// nonzero entry positive so equal transforms compare equal.
class Homography {
 public:
  static constexpr double kMaxCondition = 1e12;

  Homography();  // identity
  // Throws NumericError when `m` is singular or worse conditioned than
  // kMaxCondition.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography translation(double tx, double ty);
  static Homography from_row_major(const std::array<double, 9>& v);

  const Eigen::Matrix3d& matrix() const { return m_; }
  // Matrix rescaled so that m(2,2) == 1; convenient for inspection.
  Eigen::Matrix3d unit_corner() const;
  Homography inverse() const;

  // nullopt when the point maps to infinity (|w| < 1e-12).
  std::optional<Vec2> try_apply(Vec2 p) const {
    const double w = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
    if (std::abs(w) < 1e-12) return std::nullopt;
    return Vec2{(m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2)) / w,
                (m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2)) / w};
  }

  std::array<double, 9> row_major() const;

 private:
  Eigen::Matrix3d m_;
};

// Throws NumericError for a point at infinity.
Vec2 apply(const Homography& h, Vec2 p);

struct Correspondence {
  Vec2 src;
  Vec2 dst;
};

// Normalized DLT. Exact for four non-degenerate pairs, algebraic least
// squares for more. Throws InvalidArgument for fewer than four pairs and
// NumericError for degenerate (collinear / rank-deficient) input.
Homography fit_dlt(std::span<const Correspondence> pairs);

// sqrt of the mean of forward and backward squared transfer errors.
double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c);

struct RansacConfig {
  int max_iterations = 500;
  double inlier_px = 1.5;
  int min_inliers = 12;
  double confidence = 0.995;
  std::uint64_t rng_seed = 1;
  // Minimal samples containing a triangle smaller than
  // degeneracy_ratio * reference_area are skipped. reference_area <= 0 uses
  // the bounding box of the source points.
  double degeneracy_ratio = 1e-6;
  double reference_area = 0.0;

  void validate() const;
};

struct RansacResult {
  Homography model;
  std::vector<std::size_t> inlier_indices;
  int iterations_used = 0;
  double mean_inlier_error = 0.0;
};

// Largest-consensus homography. Returns nullopt when the best support after
// the final least-squares refit is below min_inliers.
std::optional<RansacResult> ransac_homography(std::span<const Correspondence> pairs, const RansacConfig& cfg);

// Flow H(p) - p at a pixel; throws NumericError at the horizon.
Vec2 induced_flow(const Homography& h, Pixel p);
// Dense-in-region flow fragment of the given raster size.
FlowField induced_flow(const Homography& h, std::span<const Pixel> region, int width, int height);

// "h00 h01 ... h22" with round-trip precision.
std::string format_homography(const Homography& h);

}  // namespace msgpm
