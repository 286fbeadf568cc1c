#include "msgpm/plane_match.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "msgpm/error.hpp"
#include "parallel.hpp"

namespace msgpm {
namespace {

const char* kModule = "plane_match";

std::vector<int> axis_centers(int dim, int radius, int stride) {
  const int last = dim - 1 - radius;
  if (last < radius) return {(dim - 1) / 2};
  std::vector<int> centers;
  for (int c = radius;; c += stride) {
    centers.push_back(std::min(c, last));
    if (c >= last) break;
  }
  return centers;
}

std::vector<Pixel> window_pixels(const Window& w) {
  std::vector<Pixel> out;
  out.reserve(w.area());
  for (int y = w.y0; y <= w.y1; ++y)
    for (int x = w.x0; x <= w.x1; ++x) out.push_back({x, y});
  return out;
}

std::vector<std::size_t> sorted_indices(std::span<const Pixel> pixels, int width) {
  std::vector<std::size_t> idx;
  idx.reserve(pixels.size());
  for (const Pixel& p : pixels) idx.push_back(std::size_t(p.y) * std::size_t(width) + std::size_t(p.x));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace

std::vector<Window> window_grid(int width, int height, int radius, int stride) {
  if (radius < 1) throw InvalidArgument(kModule, "window radius must be >= 1");
  if (stride < 1) throw InvalidArgument(kModule, "window stride must be >= 1");
  if (width < 1 || height < 1) throw InvalidArgument(kModule, "empty image");
  std::vector<Window> out;
  for (int cy : axis_centers(height, radius, stride)) {
    for (int cx : axis_centers(width, radius, stride)) {
      Window w;
      w.id = int(out.size());
      w.cx = cx;
      w.cy = cy;
      w.radius = radius;
      w.x0 = std::max(0, cx - radius);
      w.y0 = std::max(0, cy - radius);
      w.x1 = std::min(width - 1, cx + radius);
      w.y1 = std::min(height - 1, cy + radius);
      out.push_back(w);
    }
  }
  return out;
}

void LevelConfig::validate() const {
  if (window_radius < 1) throw InvalidArgument(kModule, "window_radius must be >= 1");
  if (effective_stride() > 2 * window_radius + 1) throw InvalidArgument(kModule, "stride exceeds window side");
  if (!(epsilon > 0.0)) throw InvalidArgument(kModule, "epsilon must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument(kModule, "eta must be in (0,1]");
  if (!(tau_agree >= 0.0 && tau_agree <= 1.0)) throw InvalidArgument(kModule, "tau_agree must be in [0,1]");
  if (residual_min < 0 || stage2_passes < 0) throw InvalidArgument(kModule, "negative stage-2 setting");
  if (max_pairs < ransac.min_inliers) throw InvalidArgument(kModule, "max_pairs below min_inliers");
  ransac.validate();
}

std::size_t PlaneAssignment::count_assigned() const {
  return std::size_t(std::count_if(model_id_.begin(), model_id_.end(), [](std::int32_t m) { return m >= 0; }));
}

std::vector<double> color_consistency_loss(const Image& a, const Image& b, const Homography& h,
                                           std::span<const Pixel> region, double epsilon) {
  std::vector<double> out;
  out.reserve(region.size());
  for (const Pixel& p : region) {
    const auto q = h.try_apply(p.center());
    if (!q) {
      out.push_back(epsilon);
      continue;
    }
    const auto d = warped_difference(a, b, p, *q);
    out.push_back(d ? std::min(std::abs(*d), epsilon) : epsilon);
  }
  return out;
}

std::optional<Detection> detect_plane(const Window& window, std::span<const Pixel> region, const Nnf& nnf_fwd,
                                      const Nnf& nnf_bwd, const LevelConfig& cfg, std::uint64_t seed) {
  const int w = nnf_fwd.width(), h = nnf_fwd.height();
  std::vector<Correspondence> pairs;
  std::vector<Pixel> sources;
  pairs.reserve(region.size());
  for (const Pixel& p : region) {
    const std::size_t i = nnf_fwd.offsets.index(p.x, p.y);
    if (!nnf_fwd.offsets.valid(i)) continue;
    pairs.push_back({p.center(), p.center() + nnf_fwd.offsets.at(i)});
    sources.push_back(p);
  }
  if (pairs.size() < std::size_t(cfg.ransac.min_inliers)) return std::nullopt;

  std::mt19937_64 rng(seed);
  std::vector<Correspondence> sample;
  if (pairs.size() > std::size_t(cfg.max_pairs)) {
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < std::size_t(cfg.max_pairs); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    idx.resize(std::size_t(cfg.max_pairs));
    std::sort(idx.begin(), idx.end());
    sample.reserve(idx.size());
    for (std::size_t i : idx) sample.push_back(pairs[i]);
  } else {
    sample = pairs;
  }

  RansacConfig rc = cfg.ransac;
  rc.rng_seed = rng();
  rc.reference_area = double(w) * double(h);
  const auto fwd = ransac_homography(sample, rc);
  if (!fwd) return std::nullopt;

  Detection det;
  det.model.h_fwd = fwd->model;
  det.model.window = window;
  det.model.level = cfg.level;
  Homography inv;
  try {
    inv = fwd->model.inverse();
  } catch (const NumericError&) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (symmetric_transfer_error(fwd->model, inv, pairs[i]) <= cfg.ransac.inlier_px)
      det.geometric_inliers.push_back(sources[i]);
  det.model.geometric_inliers = det.geometric_inliers.size();

  // Backward model from the backward NNF inside the projected inlier region.
  std::vector<std::uint8_t> seen(std::size_t(nnf_bwd.width()) * std::size_t(nnf_bwd.height()), 0);
  std::vector<Correspondence> back;
  for (const Pixel& p : det.geometric_inliers) {
    const auto q = fwd->model.try_apply(p.center());
    if (!q) continue;
    const Pixel qp = round_to_pixel(*q);
    if (!nnf_bwd.offsets.contains(qp.x, qp.y)) continue;
    const std::size_t qi = nnf_bwd.offsets.index(qp.x, qp.y);
    if (seen[qi] || !nnf_bwd.offsets.valid(qi)) continue;
    seen[qi] = 1;
    back.push_back({qp.center(), qp.center() + nnf_bwd.offsets.at(qi)});
  }
  if (back.size() > std::size_t(cfg.max_pairs)) {
    std::shuffle(back.begin(), back.end(), rng);
    back.resize(std::size_t(cfg.max_pairs));
  }
  if (back.size() >= std::size_t(cfg.ransac.min_inliers)) {
    rc.rng_seed = rng();
    if (const auto bwd = ransac_homography(back, rc)) det.model.h_bwd = bwd->model;
  }
  return det;
}

double symmetry_ratio(const PlaneModel& model, std::span<const Pixel> fwd_inliers, int width, int height) {
  if (!model.h_bwd || fwd_inliers.empty()) return 0.0;
  const std::size_t n = std::size_t(width) * std::size_t(height);
  std::vector<std::uint8_t> in_a(n, 0), in_q(n, 0), in_b(n, 0);
  auto inside = [&](Pixel p) { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; };
  auto at = [&](Pixel p) { return std::size_t(p.y) * std::size_t(width) + std::size_t(p.x); };
  for (const Pixel& p : fwd_inliers) in_a[at(p)] = 1;

  std::vector<Pixel> projected;
  for (const Pixel& p : fwd_inliers) {
    const auto q = model.h_fwd.try_apply(p.center());
    if (!q) continue;
    const Pixel qp = round_to_pixel(*q);
    if (!inside(qp) || in_q[at(qp)]) continue;
    in_q[at(qp)] = 1;
    projected.push_back(qp);
  }
  std::size_t hits = 0;
  for (const Pixel& q : projected) {
    const auto r = model.h_bwd->try_apply(q.center());
    if (!r) continue;
    const Pixel rp = round_to_pixel(*r);
    if (!inside(rp) || in_b[at(rp)]) continue;
    in_b[at(rp)] = 1;
    if (in_a[at(rp)]) ++hits;
  }
  return double(hits) / double(fwd_inliers.size());
}

double agreement_ratio(std::span<const Pixel> geometric, std::span<const Pixel> photometric, int width) {
  const auto g = sorted_indices(geometric, width);
  const auto p = sorted_indices(photometric, width);
  if (g.empty() && p.empty()) return 0.0;
  std::vector<std::size_t> common;
  std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(common));
  return double(common.size()) / double(g.size() + p.size() - common.size());
}

Validation validate_model(Detection& detection, std::span<const Pixel> region, const Image& a, const Image& b,
                          const LevelConfig& cfg) {
  Validation v;
  PlaneModel& m = detection.model;
  const auto losses = color_consistency_loss(a, b, m.h_fwd, region, cfg.epsilon);
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (losses[i] < cfg.epsilon) {
      v.inliers.push_back(region[i]);
      v.losses.push_back(losses[i]);
    }
  }
  m.photometric_inliers = v.inliers.size();
  if (v.inliers.empty()) return v;
  m.symmetry_overlap = symmetry_ratio(m, v.inliers, a.width(), a.height());
  m.agreement = agreement_ratio(detection.geometric_inliers, v.inliers, a.width());
  if (cfg.symmetry_gate && m.symmetry_overlap <= cfg.eta) return v;
  if (cfg.agreement_gate && m.agreement < cfg.tau_agree) return v;
  v.accepted = true;
  return v;
}

Validation validate_and_assign(Detection& detection, std::span<const Pixel> region, const Image& a,
                               const Image& b, PlaneAssignment& assignment, const LevelConfig& cfg) {
  Validation v = validate_model(detection, region, a, b, cfg);
  if (!v.accepted) return v;
  for (std::size_t k = 0; k < v.inliers.size(); ++k) {
    const Pixel p = v.inliers[k];
    assignment.offer(std::size_t(p.y) * std::size_t(a.width()) + std::size_t(p.x), detection.model.id, v.losses[k],
                     cfg.level);
  }
  return v;
}

LevelResult run_level(const Image& a, const Image& b, const Nnf& nnf_fwd, const Nnf& nnf_bwd, const LevelConfig& cfg,
                      int first_model_id, std::uint64_t seed, int jobs) {
  cfg.validate();
  if (!a.same_shape(b)) throw InvalidArgument(kModule, "image shapes differ");
  if (!nnf_fwd.offsets.same_size(a.width(), a.height()) || !nnf_bwd.offsets.same_size(a.width(), a.height()))
    throw InvalidArgument(kModule, "NNF dimensions do not match the images");

  const auto windows = window_grid(a.width(), a.height(), cfg.window_radius, cfg.effective_stride());
  LevelResult out{PlaneAssignment(a.width(), a.height()), {}};
  int next_id = first_model_id;

  struct Candidate {
    std::optional<Detection> detection;
    Validation validation;
  };
  std::vector<Candidate> first(windows.size());
  detail::parallel_for(windows.size(), jobs, [&](std::size_t i) {
    const auto region = window_pixels(windows[i]);
    auto det = detect_plane(windows[i], region, nnf_fwd, nnf_bwd, cfg, detail::mix_seed(seed, i));
    if (!det) return;
    first[i].validation = validate_model(*det, region, a, b, cfg);
    first[i].detection = std::move(det);
  });
  for (auto& c : first) {
    if (!c.detection || !c.validation.accepted) continue;
    PlaneModel& m = c.detection->model;
    m.id = next_id++;
    m.stage = Stage::first;
    for (std::size_t k = 0; k < c.validation.inliers.size(); ++k) {
      const Pixel p = c.validation.inliers[k];
      out.assignment.offer(std::size_t(p.y) * std::size_t(a.width()) + std::size_t(p.x), m.id,
                           c.validation.losses[k], cfg.level);
    }
    out.models.push_back(m);
  }

  // A gate-rejected detection marks its geometric inliers as an invalid
  // region of that window; later passes search the rest of the residual.
  std::vector<std::uint8_t> active(windows.size(), 1);
  std::vector<std::vector<std::uint8_t>> excluded(windows.size());
  for (int pass = 0; pass < cfg.stage2_passes; ++pass) {
    bool any = false;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (!active[i]) continue;
      active[i] = 0;
      const Window& win = windows[i];
      auto& invalid = excluded[i];
      if (invalid.empty()) invalid.assign(win.area(), 0);
      auto local = [&](const Pixel& p) {
        return std::size_t(p.y - win.y0) * std::size_t(win.x1 - win.x0 + 1) + std::size_t(p.x - win.x0);
      };
      std::vector<Pixel> residual;
      for (const Pixel& p : window_pixels(win))
        if (!out.assignment.assigned(std::size_t(p.y) * std::size_t(a.width()) + std::size_t(p.x)) && !invalid[local(p)])
          residual.push_back(p);
      if (residual.size() < std::size_t(std::max(cfg.residual_min, cfg.ransac.min_inliers))) continue;
      const std::uint64_t s = detail::mix_seed(seed, windows.size() * std::size_t(pass + 1) + i);
      auto det = detect_plane(win, residual, nnf_fwd, nnf_bwd, cfg, s);
      if (!det) continue;
      det->model.id = next_id;
      det->model.stage = Stage::residual;
      const Validation v = validate_and_assign(*det, residual, a, b, out.assignment, cfg);
      active[i] = 1;
      any = true;
      if (!v.accepted) {
        for (const Pixel& p : det->geometric_inliers) invalid[local(p)] = 1;
        continue;
      }
      ++next_id;
      out.models.push_back(det->model);
    }
    if (!any) break;
  }
  return out;
}

}  // namespace msgpm
