#include "msgpm/occlusion.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

const char* kModule = "occlusion";

struct Hit {
  std::size_t target;
  std::int32_t model;
  std::size_t source;
};

}  // namespace

void OcclusionConfig::validate() const {
  if (!(delta_m >= 0.0)) throw InvalidArgument(kModule, "delta_m must be >= 0");
  if (!(theta_occ > 0.0)) throw InvalidArgument(kModule, "theta_occ must be positive");
}

double symmetry_check(const PlaneModel& model, std::span<const Pixel> fwd_inliers, int width, int height) {
  return symmetry_ratio(model, fwd_inliers, width, height);
}

double agreement_check(std::span<const Pixel> geometric, std::span<const Pixel> photometric, int width) {
  return agreement_ratio(geometric, photometric, width);
}

std::vector<std::size_t> multiplicity_demotions(const PlaneAssignment& assignment, std::span<const PlaneModel> models,
                                                double delta_m) {
  const int w = assignment.width(), h = assignment.height();
  std::unordered_map<std::int32_t, const PlaneModel*> by_id;
  for (const auto& m : models) by_id[m.id] = &m;

  std::vector<Hit> hits;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (!assignment.assigned(i)) continue;
    const auto it = by_id.find(assignment.model_id(i));
    if (it == by_id.end()) continue;
    const Pixel p{int(i % std::size_t(w)), int(i / std::size_t(w))};
    const auto q = it->second->h_fwd.try_apply(p.center());
    if (!q) continue;
    const Pixel qp = round_to_pixel(*q);
    if (qp.x < 0 || qp.y < 0 || qp.x >= w || qp.y >= h) continue;
    hits.push_back({std::size_t(qp.y) * std::size_t(w) + std::size_t(qp.x), assignment.model_id(i), i});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.target != b.target ? a.target < b.target : (a.model != b.model ? a.model < b.model : a.source < b.source);
  });

  // Mark hits whose target is reached by at least two distinct models.
  std::vector<std::uint8_t> contested(hits.size(), 0);
  for (std::size_t s = 0; s < hits.size();) {
    std::size_t e = s;
    while (e < hits.size() && hits[e].target == hits[s].target) ++e;
    if (hits[s].model != hits[e - 1].model) std::fill(contested.begin() + long(s), contested.begin() + long(e), 1);
    s = e;
  }
  std::unordered_map<std::int32_t, std::pair<double, std::size_t>> sums;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    if (!contested[k]) continue;
    auto& acc = sums[hits[k].model];
    acc.first += assignment.loss(hits[k].source);
    ++acc.second;
  }
  auto mean = [&](std::int32_t m) {
    const auto& acc = sums.at(m);
    return acc.first / double(acc.second);
  };

  std::vector<std::size_t> demoted;
  for (std::size_t s = 0; s < hits.size();) {
    std::size_t e = s;
    while (e < hits.size() && hits[e].target == hits[s].target) ++e;
    if (contested[s]) {
      std::int32_t worst = hits[s].model;
      for (std::size_t k = s; k < e; ++k)
        if (mean(hits[k].model) >= mean(worst)) worst = hits[k].model;
      double best_other = std::numeric_limits<double>::infinity();
      for (std::size_t k = s; k < e; ++k)
        if (hits[k].model != worst) best_other = std::min(best_other, mean(hits[k].model));
      if (mean(worst) > best_other + delta_m)
        for (std::size_t k = s; k < e; ++k)
          if (hits[k].model == worst) demoted.push_back(hits[k].source);
    }
    s = e;
  }
  std::sort(demoted.begin(), demoted.end());
  demoted.erase(std::unique(demoted.begin(), demoted.end()), demoted.end());
  return demoted;
}

std::size_t multiplicity_filter(PlaneAssignment& assignment, std::span<const PlaneModel> models, double delta_m) {
  const auto demoted = multiplicity_demotions(assignment, models, delta_m);
  for (std::size_t i : demoted) assignment.clear(i);
  return demoted.size();
}

OcclusionMask final_occlusion_map(const FlowField& flow, const Image& a, const Image& b, double theta,
                                  std::span<const std::uint8_t> forced) {
  if (!flow.same_size(a.width(), a.height()) || !a.same_shape(b))
    throw InvalidArgument(kModule, "dimension mismatch");
  if (!forced.empty() && forced.size() != flow.size()) throw InvalidArgument(kModule, "forced mask size mismatch");
  OcclusionMask mask(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const std::size_t i = flow.index(x, y);
      if (!flow.valid(i)) throw InvalidArgument(kModule, "flow must be dense");
      const Pixel p{x, y};
      const auto err = warped_difference(a, b, p, p.center() + flow.at(i));
      const bool occluded = !err || *err > theta || (!forced.empty() && forced[i]);
      mask.set(i, occluded);
    }
  }
  return mask;
}

}  // namespace msgpm
