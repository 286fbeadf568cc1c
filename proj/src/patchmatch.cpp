#include "msgpm/patchmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "msgpm/error.hpp"
#include "msgpm/image_io.hpp"

namespace msgpm {
namespace {

const char* kModule = "patchmatch";

// Sum of per-pixel channel-mean absolute differences over the patch, giving
// up early once the partial sum exceeds `bound`.
double patch_sum(const Image& a, const Image& b, Pixel p, Pixel q, int r, double bound) {
  const int ch = a.channels();
  const double inv_ch = 1.0 / ch;
  const bool interior = p.x - r >= 0 && p.y - r >= 0 && p.x + r < a.width() && p.y + r < a.height() &&
                        q.x - r >= 0 && q.y - r >= 0 && q.x + r < b.width() && q.y + r < b.height();
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double* pa = interior ? a.pixel(p.x + dx, p.y + dy) : a.pixel_clamped(p.x + dx, p.y + dy);
      const double* pb = interior ? b.pixel(q.x + dx, q.y + dy) : b.pixel_clamped(q.x + dx, q.y + dy);
      double d = 0.0;
      for (int c = 0; c < ch; ++c) d += std::abs(pa[c] - pb[c]);
      sum += d * inv_ch;
    }
    if (sum > bound) return std::numeric_limits<double>::infinity();
  }
  return sum;
}

class Matcher {
 public:
  Matcher(const Image& a, const Image& b, int radius)
      : a_(a), b_(b), r_(radius), area_(double((2 * radius + 1) * (2 * radius + 1))) {}

  double cost(Pixel p, Pixel q) const {
    return patch_sum(a_, b_, p, q, r_, std::numeric_limits<double>::infinity()) / area_;
  }

  // Returns the candidate cost if it beats `current`, otherwise +inf.
  double improves(Pixel p, Pixel q, double current) const {
    const double s = patch_sum(a_, b_, p, q, r_, current * area_);
    if (!std::isfinite(s)) return s;
    const double c = s / area_;
    return c < current ? c : std::numeric_limits<double>::infinity();
  }

 private:
  const Image& a_;
  const Image& b_;
  int r_;
  double area_;
};

}  // namespace

void PatchMatchConfig::validate() const {
  if (patch_radius < 1) throw InvalidArgument(kModule, "patch_radius must be >= 1");
  if (iterations < 1) throw InvalidArgument(kModule, "iterations must be >= 1");
  if (!(search_decay > 0.0 && search_decay < 1.0)) throw InvalidArgument(kModule, "search_decay must be in (0,1)");
}

double Nnf::total_cost() const {
  double s = 0.0;
  for (double c : cost) s += c;
  return s;
}

double patch_cost(const Image& a, const Image& b, Pixel p, Pixel q, int radius) {
  return Matcher(a, b, radius).cost(p, q);
}

Nnf compute_nnf(const Image& a, const Image& b, const PatchMatchConfig& cfg,
                std::span<const std::uint8_t> frozen, const FlowField* seed) {
  cfg.validate();
  if (a.channels() != b.channels()) throw InvalidArgument(kModule, "images differ in channel count");
  const int w = a.width(), h = a.height();
  const std::size_t n = std::size_t(w) * h;
  if (!frozen.empty() && frozen.size() != n) throw InvalidArgument(kModule, "mask dimensions do not match image");
  if (seed && !seed->same_size(w, h)) throw InvalidArgument(kModule, "seed dimensions do not match image");

  const Matcher matcher(a, b, cfg.patch_radius);
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<int> rand_x(0, b.width() - 1), rand_y(0, b.height() - 1);

  // Targets are stored as absolute positions in b during the search.
  std::vector<Pixel> target(n);
  std::vector<double> cost(n);
  std::vector<std::uint8_t> fixed(n, 0);

  auto seeded_target = [&](int x, int y) -> std::optional<Pixel> {
    if (!seed) return std::nullopt;
    const auto f = seed->get(x, y);
    if (!f) return std::nullopt;
    const Pixel q{x + int(std::lround(f->x)), y + int(std::lround(f->y))};
    if (!b.contains(q.x, q.y)) return std::nullopt;
    return q;
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * w + x;
      const auto s = seeded_target(x, y);
      if (!frozen.empty() && frozen[i]) {
        if (!s) throw InvalidArgument(kModule, "frozen pixel without a valid in-bounds seed");
        fixed[i] = 1;
      }
      // Draw unconditionally so the random stream does not depend on the seed.
      const Pixel random{rand_x(rng), rand_y(rng)};
      target[i] = s ? *s : random;
      cost[i] = matcher.cost({x, y}, target[i]);
    }
  }

  const int max_radius = std::max(b.width(), b.height());
  for (int it = 0; it < cfg.iterations; ++it) {
    const bool forward = it % 2 == 0;
    const int step = forward ? 1 : -1;
    const int y_begin = forward ? 0 : h - 1, y_end = forward ? h : -1;
    const int x_begin = forward ? 0 : w - 1, x_end = forward ? w : -1;
    for (int y = y_begin; y != y_end; y += step) {
      for (int x = x_begin; x != x_end; x += step) {
        const std::size_t i = std::size_t(y) * w + x;
        if (fixed[i]) continue;
        const Pixel p{x, y};
        Pixel best = target[i];
        double best_cost = cost[i];

        auto consider = [&](Pixel q) {
          if (!b.contains(q.x, q.y) || q == best) return;
          const double c = matcher.improves(p, q, best_cost);
          if (c < best_cost) {
            best_cost = c;
            best = q;
          }
        };

        // Propagation from the already-visited neighbors in scan direction.
        const int nx = x - step, ny = y - step;
        if (nx >= 0 && nx < w) {
          const Pixel t = target[std::size_t(y) * w + nx];
          consider({t.x + step, t.y});
        }
        if (ny >= 0 && ny < h) {
          const Pixel t = target[std::size_t(ny) * w + x];
          consider({t.x, t.y + step});
        }

        // Random search with exponentially shrinking radius around the best.
        for (double radius = max_radius; radius >= 1.0; radius *= cfg.search_decay) {
          const int r = int(radius);
          const int x0 = std::max(best.x - r, 0), x1 = std::min(best.x + r, b.width() - 1);
          const int y0 = std::max(best.y - r, 0), y1 = std::min(best.y + r, b.height() - 1);
          const Pixel q{std::uniform_int_distribution<int>(x0, x1)(rng),
                        std::uniform_int_distribution<int>(y0, y1)(rng)};
          consider(q);
        }

        target[i] = best;
        cost[i] = best_cost;
      }
    }
  }

  Nnf out{FlowField(w, h), std::vector<double>(n)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * w + x;
      // Frozen pixels echo their seed verbatim, even if it was fractional.
      out.offsets.set(i, fixed[i] ? seed->at(i) : Vec2{double(target[i].x - x), double(target[i].y - y)});
      out.cost[i] = cost[i];
    }
  }
  return out;
}

Nnf exhaustive_nnf(const Image& a, const Image& b, int patch_radius) {
  const Matcher matcher(a, b, patch_radius);
  Nnf out{FlowField(a.width(), a.height()), std::vector<double>(std::size_t(a.width()) * a.height())};
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      Pixel best_q{x, y};
      for (int qy = 0; qy < b.height(); ++qy)
        for (int qx = 0; qx < b.width(); ++qx) {
          const double c = matcher.cost({x, y}, {qx, qy});
          if (c < best) {
            best = c;
            best_q = {qx, qy};
          }
        }
      out.offsets.set(x, y, Vec2{double(best_q.x - x), double(best_q.y - y)});
      out.cost[out.offsets.index(x, y)] = best;
    }
  }
  return out;
}

bool verify_nnf(const Nnf& nnf, const Image& a, const Image& b, const PatchMatchConfig& cfg) {
  if (!nnf.offsets.same_size(a.width(), a.height()) || nnf.cost.size() != nnf.offsets.size()) return false;
  const Matcher matcher(a, b, cfg.patch_radius);
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const auto f = nnf.offsets.get(x, y);
      if (!f) return false;
      const Pixel q{x + int(std::lround(f->x)), y + int(std::lround(f->y))};
      if (!b.contains(q.x, q.y)) return false;
      if (std::abs(matcher.cost({x, y}, q) - nnf.cost[nnf.offsets.index(x, y)]) > 1e-6) return false;
    }
  }
  return true;
}

void save_nnf(const Nnf& nnf, const std::filesystem::path& flo_path, const std::filesystem::path& cost_path) {
  write_flo(nnf.offsets, flo_path);
  write_float_raster(nnf.cost, nnf.width(), nnf.height(), cost_path);
}

Nnf load_nnf(const std::filesystem::path& flo_path, const std::filesystem::path& cost_path) {
  Nnf nnf{read_flo(flo_path), {}};
  int w = 0, h = 0;
  nnf.cost = read_float_raster(cost_path, w, h);
  if (w != nnf.width() || h != nnf.height())
    throw FormatError(kModule, "cost raster does not match NNF dimensions: " + cost_path.string());
  return nnf;
}

}  // namespace msgpm
