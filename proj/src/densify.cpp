#include "msgpm/densify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

const char* kModule = "densify";

double pixel_loss(const Image& a, const Image& b, const Homography& h, Pixel p, double epsilon) {
  const auto q = h.try_apply(p.center());
  if (!q) return epsilon;
  const auto d = warped_difference(a, b, p, *q);
  return d ? std::min(*d, epsilon) : epsilon;
}

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

}  // namespace

MergedFlow propagate_models(const MergedFlow& merged, std::span<const PlaneModel> models, const Image& a,
                            const Image& b, double epsilon) {
  const int w = merged.flow.width(), h = merged.flow.height();
  if (!a.same_shape(b) || a.width() != w || a.height() != h) throw InvalidArgument(kModule, "dimension mismatch");
  MergedFlow out = merged;

  using Entry = std::tuple<double, std::size_t, std::int32_t>;  // loss, pixel, model
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  auto offer_neighbors = [&](int x, int y, std::int32_t model_id) {
    const PlaneModel& m = find_model(models, model_id);
    for (int d = 0; d < 4; ++d) {
      const int nx = x + kDx[d], ny = y + kDy[d];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const std::size_t ni = out.flow.index(nx, ny);
      if (out.flow.valid(ni)) continue;
      const double loss = pixel_loss(a, b, m.h_fwd, {nx, ny}, epsilon);
      if (loss < epsilon) queue.emplace(loss, ni, model_id);
    }
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = out.flow.index(x, y);
      if (out.flow.valid(i) && out.model_id[i] >= 0) offer_neighbors(x, y, out.model_id[i]);
    }
  while (!queue.empty()) {
    const auto [loss, i, model_id] = queue.top();
    queue.pop();
    if (out.flow.valid(i)) continue;
    const PlaneModel& m = find_model(models, model_id);
    const Pixel p{int(i % std::size_t(w)), int(i / std::size_t(w))};
    out.flow.set(i, induced_flow(m.h_fwd, p));
    out.model_id[i] = model_id;
    out.loss[i] = loss;
    out.level[i] = m.level;
    offer_neighbors(p.x, p.y, model_id);
  }
  return out;
}

void InterpolationConfig::validate() const {
  if (neighbors < 1) throw InvalidArgument(kModule, "neighbors must be >= 1");
  if (!(sigma > 0.0)) throw InvalidArgument(kModule, "sigma must be positive");
  if (!(lambda >= 0.0)) throw InvalidArgument(kModule, "lambda must be >= 0");
}

std::vector<double> gradient_magnitude(const Image& guide) {
  const int w = guide.width(), h = guide.height(), c = guide.channels();
  auto gray = [&](int x, int y) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += guide.at(x, y, k);
    return s / c;
  };
  std::vector<double> g(std::size_t(w) * std::size_t(h), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
      const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
      const double gx = xr > xl ? (gray(xr, y) - gray(xl, y)) / (xr - xl) : 0.0;
      const double gy = yd > yu ? (gray(x, yd) - gray(x, yu)) / (yd - yu) : 0.0;
      g[std::size_t(y) * std::size_t(w) + std::size_t(x)] = std::hypot(gx, gy);
    }
  }
  return g;
}

std::vector<std::vector<GeodesicSeed>> geodesic_nearest_seeds(std::span<const std::uint8_t> is_seed, int width,
                                                              int height, std::span<const double> gradient,
                                                              double lambda, int k) {
  const std::size_t n = std::size_t(width) * std::size_t(height);
  if (is_seed.size() != n || gradient.size() != n) throw InvalidArgument(kModule, "raster size mismatch");
  std::vector<std::vector<GeodesicSeed>> lists(n);
  using Entry = std::tuple<double, std::size_t, std::int32_t>;  // distance, pixel, seed
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (is_seed[i]) queue.emplace(0.0, i, std::int32_t(i));
  auto has = [](const std::vector<GeodesicSeed>& l, std::int32_t s) {
    return std::any_of(l.begin(), l.end(), [s](const GeodesicSeed& g) { return g.seed == s; });
  };
  while (!queue.empty()) {
    const auto [d, i, s] = queue.top();
    queue.pop();
    auto& list = lists[i];
    if (int(list.size()) >= k || has(list, s)) continue;
    list.push_back({s, d});
    const int x = int(i % std::size_t(width)), y = int(i / std::size_t(width));
    for (int dir = 0; dir < 4; ++dir) {
      const int nx = x + kDx[dir], ny = y + kDy[dir];
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const std::size_t ni = std::size_t(ny) * std::size_t(width) + std::size_t(nx);
      if (int(lists[ni].size()) >= k || has(lists[ni], s)) continue;
      queue.emplace(d + 1.0 + lambda * 0.5 * (gradient[i] + gradient[ni]), ni, s);
    }
  }
  return lists;
}

FlowField edge_aware_interpolate(const FlowField& seeds, const Image& guide, const InterpolationConfig& cfg) {
  cfg.validate();
  const int w = seeds.width(), h = seeds.height();
  if (guide.width() != w || guide.height() != h) throw InvalidArgument(kModule, "guide dimension mismatch");
  std::vector<std::uint8_t> is_seed(seeds.size(), 0);
  Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!seeds.valid(i)) continue;
    is_seed[i] = 1;
    ++count;
    const Eigen::Vector3d r(1.0, double(i % std::size_t(w)), double(i / std::size_t(w)));
    spread += r * r.transpose();
  }
  if (count < 4) throw InvalidArgument(kModule, "fewer than 4 seeds");
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(spread);
    if (!(es.eigenvalues()(0) > 1e-9 * es.eigenvalues()(2))) throw InvalidArgument(kModule, "collinear seeds");
  }

  const auto grad = gradient_magnitude(guide);
  const auto nearest = geodesic_nearest_seeds(is_seed, w, h, grad, cfg.lambda, cfg.neighbors);
  FlowField out(w, h);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (is_seed[i]) {
      out.set(i, seeds.at(i));
      continue;
    }
    const auto& list = nearest[i];
    if (list.empty()) throw InvalidArgument(kModule, "pixel unreachable from every seed");
    const double px = double(i % std::size_t(w)), py = double(i / std::size_t(w));
    const double d0 = list.front().distance;
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d ru = Eigen::Vector3d::Zero(), rv = Eigen::Vector3d::Zero();
    double wsum = 0.0;
    Vec2 mean{};
    for (const auto& s : list) {
      const double wt = std::exp(-(s.distance - d0) / cfg.sigma);
      const std::size_t si = std::size_t(s.seed);
      const Vec2 f = seeds.at(si);
      const Eigen::Vector3d r(1.0, double(si % std::size_t(w)) - px, double(si / std::size_t(w)) - py);
      m += wt * r * r.transpose();
      ru += wt * f.x * r;
      rv += wt * f.y * r;
      wsum += wt;
      mean = mean + wt * f;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    if (es.eigenvalues()(0) > 1e-9 * es.eigenvalues()(2)) {
      const auto ldlt = m.ldlt();
      out.set(i, Vec2{ldlt.solve(ru)(0), ldlt.solve(rv)(0)});
    } else {
      out.set(i, (1.0 / wsum) * mean);
    }
  }
  return out;
}

FlowField EdgeAwareInterpolator::interpolate(const FlowField& seeds, const Image& guide) const {
  return edge_aware_interpolate(seeds, guide, cfg_);
}

ExternalInterpolator::ExternalInterpolator(FlowField dense) : dense_(std::move(dense)) {
  if (dense_.count_valid() != dense_.size()) throw InvalidArgument(kModule, "external flow must be dense");
}

FlowField ExternalInterpolator::interpolate(const FlowField& seeds, const Image&) const {
  if (!dense_.same_size(seeds.width(), seeds.height())) throw InvalidArgument(kModule, "external flow dimension mismatch");
  return dense_;
}

FlowField merge_by_consistency(const FlowField& a, const FlowField& b, const Image& img1, const Image& img2) {
  const int w = a.width(), h = a.height();
  if (!b.same_size(w, h) || img1.width() != w || img1.height() != h || !img1.same_shape(img2))
    throw InvalidArgument(kModule, "dimension mismatch");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  FlowField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = a.index(x, y);
      const bool va = a.valid(i), vb = b.valid(i);
      if (!va && !vb) throw InvalidArgument(kModule, "coverage gap: pixel invalid in both flows");
      if (!va || !vb) {
        out.set(i, va ? a.at(i) : b.at(i));
        continue;
      }
      const Pixel p{x, y};
      const double ea = warped_difference(img1, img2, p, p.center() + a.at(i)).value_or(kInf);
      const double eb = warped_difference(img1, img2, p, p.center() + b.at(i)).value_or(kInf);
      out.set(i, eb < ea ? b.at(i) : a.at(i));
    }
  }
  return out;
}

}  // namespace msgpm
