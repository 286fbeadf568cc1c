#include "msgpm/homography.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

const char* kModule = "homography";

double triangle_area(Vec2 a, Vec2 b, Vec2 c) {
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

bool has_small_triangle(const Vec2* p, double min_area) {
  return triangle_area(p[0], p[1], p[2]) < min_area || triangle_area(p[0], p[1], p[3]) < min_area ||
         triangle_area(p[0], p[2], p[3]) < min_area || triangle_area(p[1], p[2], p[3]) < min_area;
}

// Similarity taking the points to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Correspondence> pairs, bool use_src) {
  double cx = 0.0, cy = 0.0;
  for (const auto& c : pairs) {
    const Vec2 p = use_src ? c.src : c.dst;
    cx += p.x;
    cy += p.y;
  }
  cx /= double(pairs.size());
  cy /= double(pairs.size());
  double mean_dist = 0.0;
  for (const auto& c : pairs) {
    const Vec2 p = use_src ? c.src : c.dst;
    mean_dist += std::hypot(p.x - cx, p.y - cy);
  }
  mean_dist /= double(pairs.size());
  if (!(mean_dist > 1e-12)) throw NumericError(kModule, "degenerate configuration: coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

Vec2 transform(const Eigen::Matrix3d& t, Vec2 p) {
  return {t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2), t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2)};
}

}  // namespace

Homography::Homography() : m_(Eigen::Matrix3d::Identity() / std::sqrt(3.0)) {}

Homography::Homography(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw NumericError(kModule, "non-finite homography");
  const double norm = m.norm();
  if (!(norm > 0.0)) throw NumericError(kModule, "zero homography");
  m_ = m / norm;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m_);
  const auto& s = svd.singularValues();
  if (!(s(2) > 0.0) || s(0) / s(2) > kMaxCondition) throw NumericError(kModule, "singular or ill-conditioned homography");
  for (int i = 8; i >= 0; --i) {
    const double v = m_(i / 3, i % 3);
    if (v != 0.0) {
      if (v < 0.0) m_ = -m_;
      break;
    }
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m;
  m << 1, 0, tx, 0, 1, ty, 0, 0, 1;
  return Homography(m);
}

Homography Homography::from_row_major(const std::array<double, 9>& v) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return Homography(m);
}

Eigen::Matrix3d Homography::unit_corner() const {
  if (m_(2, 2) == 0.0) return m_;
  return m_ / m_(2, 2);
}

Homography Homography::inverse() const { return Homography(Eigen::Matrix3d(m_.inverse())); }

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> v{};
  for (int i = 0; i < 9; ++i) v[std::size_t(i)] = m_(i / 3, i % 3);
  return v;
}

Vec2 apply(const Homography& h, Vec2 p) {
  const auto q = h.try_apply(p);
  if (!q) throw NumericError(kModule, "point maps to infinity");
  return *q;
}

Homography fit_dlt(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) throw InvalidArgument(kModule, "fit_dlt needs at least 4 correspondences");
  const Eigen::Matrix3d ts = normalizer(pairs, true);
  const Eigen::Matrix3d td = normalizer(pairs, false);

  if (pairs.size() == 4) {
    Vec2 src[4], dst[4];
    for (int i = 0; i < 4; ++i) {
      src[i] = transform(ts, pairs[std::size_t(i)].src);
      dst[i] = transform(td, pairs[std::size_t(i)].dst);
    }
    // Normalized coordinates have unit scale, so a fixed tolerance works.
    if (has_small_triangle(src, 1e-9) || has_small_triangle(dst, 1e-9))
      throw NumericError(kModule, "degenerate configuration: collinear points");
  }

  Eigen::MatrixXd a(2 * pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec2 s = transform(ts, pairs[i].src);
    const Vec2 d = transform(td, pairs[i].dst);
    a.row(Eigen::Index(2 * i)) << -s.x, -s.y, -1, 0, 0, 0, d.x * s.x, d.x * s.y, d.x;
    a.row(Eigen::Index(2 * i + 1)) << 0, 0, 0, -s.x, -s.y, -1, d.y * s.x, d.y * s.y, d.y;
  }
  Eigen::VectorXd h;
  Eigen::VectorXd sv;
  if (pairs.size() == 4) {
    // Pad to square so the full V is well defined.
    Eigen::Matrix<double, 9, 9> sq = Eigen::Matrix<double, 9, 9>::Zero();
    sq.topRows(8) = a;
    const Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(sq, Eigen::ComputeFullV);
    h = svd.matrixV().col(8);
    sv = svd.singularValues();
  } else {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    h = svd.matrixV().col(8);
    sv = svd.singularValues();
  }
  if (!(sv(7) > 1e-8 * sv(0))) throw NumericError(kModule, "degenerate configuration: rank deficient system");

  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(Eigen::Matrix3d(td.inverse() * hn * ts));
}

double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c) {
  const auto fwd = h.try_apply(c.src);
  const auto bwd = h_inv.try_apply(c.dst);
  if (!fwd || !bwd) return std::numeric_limits<double>::infinity();
  const Vec2 e1 = *fwd - c.dst, e2 = *bwd - c.src;
  return std::sqrt(0.5 * (e1.x * e1.x + e1.y * e1.y + e2.x * e2.x + e2.y * e2.y));
}

void RansacConfig::validate() const {
  if (!(inlier_px > 0.0)) throw InvalidArgument(kModule, "inlier_px must be positive");
  if (min_inliers < 4) throw InvalidArgument(kModule, "min_inliers must be >= 4");
  if (max_iterations < 1) throw InvalidArgument(kModule, "max_iterations must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument(kModule, "confidence must be in (0,1)");
}

namespace {

struct Support {
  std::size_t count = 0;
  double error_sum = 0.0;
};

Support measure(const Homography& h, std::span<const Correspondence> pairs, double threshold,
                std::vector<std::size_t>* inliers) {
  Support s;
  Homography inv;
  try {
    inv = h.inverse();
  } catch (const NumericError&) {
    return s;
  }
  if (inliers) inliers->clear();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = symmetric_transfer_error(h, inv, pairs[i]);
    if (e <= threshold) {
      ++s.count;
      s.error_sum += e;
      if (inliers) inliers->push_back(i);
    }
  }
  return s;
}

}  // namespace

std::optional<RansacResult> ransac_homography(std::span<const Correspondence> pairs, const RansacConfig& cfg) {
  cfg.validate();
  if (pairs.size() < 4) return std::nullopt;

  double area = cfg.reference_area;
  if (area <= 0.0) {
    double x0 = pairs[0].src.x, x1 = x0, y0 = pairs[0].src.y, y1 = y0;
    for (const auto& c : pairs) {
      x0 = std::min(x0, c.src.x);
      x1 = std::max(x1, c.src.x);
      y0 = std::min(y0, c.src.y);
      y1 = std::max(y1, c.src.y);
    }
    area = (x1 - x0 + 1.0) * (y1 - y0 + 1.0);
  }
  const double min_area = cfg.degeneracy_ratio * area;

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);

  std::optional<Homography> best;
  Support best_support;
  int needed = cfg.max_iterations;
  int it = 0;
  for (; it < std::min(needed, cfg.max_iterations); ++it) {
    std::size_t idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = pick(rng);
        fresh = std::find(idx, idx + k, idx[k]) == idx + k;
      } while (!fresh);
    }
    Correspondence sample[4];
    Vec2 src[4], dst[4];
    for (int k = 0; k < 4; ++k) {
      sample[k] = pairs[idx[k]];
      src[k] = sample[k].src;
      dst[k] = sample[k].dst;
    }
    if (has_small_triangle(src, min_area) || has_small_triangle(dst, min_area)) continue;

    std::optional<Homography> h;
    try {
      h = fit_dlt(sample);
    } catch (const Error&) {
      continue;
    }
    const Support s = measure(*h, pairs, cfg.inlier_px, nullptr);
    const bool better = s.count > best_support.count ||
                        (s.count == best_support.count && s.count > 0 &&
                         s.error_sum / double(s.count) < best_support.error_sum / double(best_support.count));
    if (!better) continue;
    best = h;
    best_support = s;

    const double w = double(s.count) / double(pairs.size());
    const double p_fail = 1.0 - std::pow(w, 4.0);
    if (p_fail <= 0.0) {
      needed = it + 1;
    } else if (p_fail < 1.0) {
      const double n = std::log(1.0 - cfg.confidence) / std::log(p_fail);
      if (n < double(cfg.max_iterations)) needed = std::max(it + 1, int(std::ceil(n)));
    }
  }

  if (!best || best_support.count < 4) return std::nullopt;

  RansacResult result{*best, {}, it, 0.0};
  std::vector<std::size_t> inliers;
  measure(*best, pairs, cfg.inlier_px, &inliers);
  std::vector<Correspondence> consensus;
  consensus.reserve(inliers.size());
  for (std::size_t i : inliers) consensus.push_back(pairs[i]);
  try {
    const Homography refit = fit_dlt(consensus);
    std::vector<std::size_t> refit_inliers;
    const Support s = measure(refit, pairs, cfg.inlier_px, &refit_inliers);
    // Same ordering as the sampling loop: more support, then lower mean error.
    const bool keep = s.count > best_support.count ||
                      (s.count == best_support.count &&
                       s.error_sum / double(s.count) <= best_support.error_sum / double(best_support.count));
    if (keep) {
      result.model = refit;
      inliers = std::move(refit_inliers);
    }
  } catch (const Error&) {
    // keep the minimal-sample model
  }
  if (inliers.size() < std::size_t(cfg.min_inliers)) return std::nullopt;
  const Support final_support = measure(result.model, pairs, cfg.inlier_px, nullptr);
  result.inlier_indices = std::move(inliers);
  result.mean_inlier_error = final_support.count ? final_support.error_sum / double(final_support.count) : 0.0;
  return result;
}

Vec2 induced_flow(const Homography& h, Pixel p) {
  const auto q = h.try_apply(p.center());
  if (!q) throw NumericError(kModule, "horizon inside region");
  return *q - p.center();
}

FlowField induced_flow(const Homography& h, std::span<const Pixel> region, int width, int height) {
  FlowField out(width, height);
  for (const Pixel& p : region) {
    if (!out.contains(p.x, p.y)) throw InvalidArgument(kModule, "region pixel outside raster");
    out.set(p.x, p.y, induced_flow(h, p));
  }
  return out;
}

std::string format_homography(const Homography& h) {
  std::string out;
  char buf[40];
  for (double v : h.row_major()) {
    std::snprintf(buf, sizeof buf, out.empty() ? "%.17g" : " %.17g", v);
    out += buf;
  }
  return out;
}

}  // namespace msgpm
