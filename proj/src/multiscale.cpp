#include "msgpm/multiscale.hpp"

#include <algorithm>
#include <thread>
#include <unordered_map>

#include "msgpm/error.hpp"
#include "parallel.hpp"

namespace msgpm {
namespace {

const char* kModule = "multiscale";

bool in_bounds(const Image& img, Pixel p) { return img.contains(p.x, p.y); }

}  // namespace

void PyramidConfig::validate() const {
  if (levels < 1) throw InvalidArgument(kModule, "levels must be >= 1");
  if (w_max - (levels - 1) * dw < 4) throw InvalidArgument(kModule, "level schedule reaches a radius below 4");
  if (!(beta >= 0.0)) throw InvalidArgument(kModule, "beta must be >= 0");
}

std::vector<int> level_radii(const PyramidConfig& cfg) {
  cfg.validate();
  std::vector<int> r;
  for (int l = 1; l <= cfg.levels; ++l) r.push_back(cfg.w_max - (l - 1) * cfg.dw);
  return r;
}

LevelConfig PyramidConfig::level_config(int l) const {
  LevelConfig c = level;
  c.level = l;
  c.window_radius = w_max - (l - 1) * dw;
  if (std::size_t(l - 1) < epsilon_per_level.size()) c.epsilon = epsilon_per_level[std::size_t(l - 1)];
  if (std::size_t(l - 1) < eta_per_level.size()) c.eta = eta_per_level[std::size_t(l - 1)];
  return c;
}

const PlaneModel& find_model(std::span<const PlaneModel> models, std::int32_t id) {
  // Ids are handed out in increasing order, so the list is sorted.
  const auto it = std::lower_bound(models.begin(), models.end(), id,
                                   [](const PlaneModel& m, std::int32_t v) { return m.id < v; });
  if (it == models.end() || it->id != id) throw InvalidArgument(kModule, "unknown model id");
  return *it;
}

Nnf propagate_reliable(const PlaneAssignment& assignment, std::span<const PlaneModel> models, const Nnf& nnf,
                       const Image& a, const Image& b, double reliability_loss, int patch_radius) {
  if (!nnf.offsets.same_size(assignment.width(), assignment.height()))
    throw InvalidArgument(kModule, "assignment and NNF dimensions differ");
  Nnf out = nnf;
  const int w = assignment.width();
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (!assignment.assigned(i) || !(assignment.loss(i) < reliability_loss)) continue;
    const Pixel p{int(i % std::size_t(w)), int(i / std::size_t(w))};
    const auto q = find_model(models, assignment.model_id(i)).h_fwd.try_apply(p.center());
    if (!q) continue;
    const Pixel t = round_to_pixel(*q);
    if (!in_bounds(b, t)) continue;
    out.offsets.set(i, Vec2{double(t.x - p.x), double(t.y - p.y)});
    out.cost[i] = patch_cost(a, b, p, t, patch_radius);
  }
  return out;
}

BackwardUpdate propagate_reliable_backward(const PlaneAssignment& assignment, std::span<const PlaneModel> models,
                                           const Nnf& nnf_bwd, const Image& a, const Image& b,
                                           double reliability_loss, int patch_radius) {
  if (!nnf_bwd.offsets.same_size(assignment.width(), assignment.height()))
    throw InvalidArgument(kModule, "assignment and NNF dimensions differ");
  BackwardUpdate out{nnf_bwd, std::vector<std::uint8_t>(nnf_bwd.cost.size(), 0)};
  const int w = assignment.width();
  std::vector<std::int32_t> owner(nnf_bwd.cost.size(), -1);
  std::vector<double> owner_loss(nnf_bwd.cost.size(), 0.0);
  // Pick, per target pixel, the most reliable source model.
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (!assignment.assigned(i) || !(assignment.loss(i) < reliability_loss)) continue;
    const Pixel p{int(i % std::size_t(w)), int(i / std::size_t(w))};
    const auto q = find_model(models, assignment.model_id(i)).h_fwd.try_apply(p.center());
    if (!q) continue;
    const Pixel t = round_to_pixel(*q);
    if (!in_bounds(b, t)) continue;
    const std::size_t ti = nnf_bwd.offsets.index(t.x, t.y);
    const bool better = owner[ti] < 0 || assignment.loss(i) < owner_loss[ti] ||
                        (assignment.loss(i) == owner_loss[ti] && assignment.model_id(i) < owner[ti]);
    if (better) {
      owner[ti] = assignment.model_id(i);
      owner_loss[ti] = assignment.loss(i);
    }
  }
  std::unordered_map<std::int32_t, std::optional<Homography>> inverses;
  for (std::size_t ti = 0; ti < owner.size(); ++ti) {
    if (owner[ti] < 0) continue;
    const Pixel q{int(ti % std::size_t(w)), int(ti / std::size_t(w))};
    auto it = inverses.find(owner[ti]);
    if (it == inverses.end()) {
      std::optional<Homography> inv;
      try {
        inv = find_model(models, owner[ti]).h_fwd.inverse();
      } catch (const NumericError&) {
      }
      it = inverses.emplace(owner[ti], inv).first;
    }
    if (!it->second) continue;
    const auto r = it->second->try_apply(q.center());
    if (!r) continue;
    const Pixel s = round_to_pixel(*r);
    if (!in_bounds(a, s)) continue;
    out.nnf.offsets.set(ti, Vec2{double(s.x - q.x), double(s.y - q.y)});
    out.nnf.cost[ti] = patch_cost(b, a, q, s, patch_radius);
    out.updated[ti] = 1;
  }
  return out;
}

Nnf refresh_unassigned(const Nnf& nnf, const Image& a, const Image& b, std::span<const std::uint8_t> frozen,
                       const PatchMatchConfig& pm) {
  if (!frozen.empty() && std::all_of(frozen.begin(), frozen.end(), [](std::uint8_t f) { return f != 0; })) return nnf;
  return compute_nnf(a, b, pm, frozen, &nnf.offsets);
}

MergedFlow merge_levels(std::span<const PlaneAssignment> levels, std::span<const PlaneModel> models, double beta) {
  if (levels.empty()) throw InvalidArgument(kModule, "no levels to merge");
  const int w = levels[0].width(), h = levels[0].height();
  for (const auto& l : levels)
    if (l.width() != w || l.height() != h) throw InvalidArgument(kModule, "level dimensions differ");
  const int k = int(levels.size());
  MergedFlow out(w, h);
  for (std::size_t i = 0; i < levels[0].size(); ++i) {
    int best = -1;
    double best_eff = 0.0;
    for (int l = 1; l <= k; ++l) {
      const auto& as = levels[std::size_t(l - 1)];
      if (!as.assigned(i)) continue;
      const double eff = as.loss(i) - beta * double(k - l);
      if (best < 0 || eff < best_eff) {
        best = l;
        best_eff = eff;
      }
    }
    if (best < 0) continue;
    const auto& as = levels[std::size_t(best - 1)];
    const Pixel p{int(i % std::size_t(w)), int(i / std::size_t(w))};
    out.flow.set(i, induced_flow(find_model(models, as.model_id(i)).h_fwd, p));
    out.model_id[i] = as.model_id(i);
    out.loss[i] = as.loss(i);
    out.level[i] = best;
  }
  return out;
}

std::pair<Nnf, Nnf> compute_bidirectional_nnf(const Image& a, const Image& b, const PatchMatchConfig& pm, int jobs) {
  PatchMatchConfig back = pm;
  back.rng_seed = detail::mix_seed(pm.rng_seed, 0xb4c);
  Nnf fwd, bwd;
  if (detail::resolve_jobs(jobs) > 1) {
    std::exception_ptr err;
    std::thread t([&] {
      try {
        bwd = compute_nnf(b, a, back);
      } catch (...) {
        err = std::current_exception();
      }
    });
    fwd = compute_nnf(a, b, pm);
    t.join();
    if (err) std::rethrow_exception(err);
  } else {
    fwd = compute_nnf(a, b, pm);
    bwd = compute_nnf(b, a, back);
  }
  return {std::move(fwd), std::move(bwd)};
}

MsgpmResult run_msgpm(const Image& a, const Image& b, const MsgpmConfig& cfg, const Nnf& nnf_fwd,
                      const Nnf& nnf_bwd) {
  if (!a.same_shape(b)) throw InvalidArgument(kModule, "image shapes differ");
  const auto radii = level_radii(cfg.pyramid);
  cfg.occlusion.validate();
  cfg.pm.validate();

  MsgpmResult out;
  Nnf fwd = nnf_fwd, bwd = nnf_bwd;
  std::vector<PlaneAssignment> assignments;
  for (int l = 1; l <= cfg.pyramid.levels; ++l) {
    const LevelConfig lc = cfg.pyramid.level_config(l);
    LevelResult level = run_level(a, b, fwd, bwd, lc, int(out.models.size()), detail::mix_seed(cfg.seed, std::uint64_t(l)),
                                  cfg.jobs);
    LevelArtifacts art;
    art.level = l;
    art.radius = radii[std::size_t(l - 1)];
    art.demoted = multiplicity_filter(level.assignment, level.models, cfg.occlusion.delta_m);
    out.models.insert(out.models.end(), level.models.begin(), level.models.end());

    const double reliable = cfg.pyramid.reliability_loss >= 0.0 ? cfg.pyramid.reliability_loss : lc.epsilon / 2.0;
    fwd = propagate_reliable(level.assignment, out.models, fwd, a, b, reliable, cfg.pm.patch_radius);
    auto back = propagate_reliable_backward(level.assignment, out.models, bwd, a, b, reliable, cfg.pm.patch_radius);
    bwd = std::move(back.nnf);
    if (l < cfg.pyramid.levels) {
      std::vector<std::uint8_t> frozen(level.assignment.size());
      for (std::size_t i = 0; i < frozen.size(); ++i) frozen[i] = level.assignment.assigned(i) ? 1 : 0;
      PatchMatchConfig pf = cfg.pm, pb = cfg.pm;
      pf.rng_seed = detail::mix_seed(cfg.pm.rng_seed, 0x100 + std::uint64_t(l));
      pb.rng_seed = detail::mix_seed(cfg.pm.rng_seed, 0x200 + std::uint64_t(l));
      fwd = refresh_unassigned(fwd, a, b, frozen, pf);
      bwd = refresh_unassigned(bwd, b, a, back.updated, pb);
    }
    art.assignment = level.assignment;
    art.nnf_fwd = fwd;
    art.nnf_bwd = bwd;
    assignments.push_back(std::move(level.assignment));
    out.levels.push_back(std::move(art));
  }
  out.merged = merge_levels(assignments, out.models, cfg.pyramid.beta);
  return out;
}

MsgpmResult run_msgpm(const Image& a, const Image& b, const MsgpmConfig& cfg) {
  const auto [fwd, bwd] = compute_bidirectional_nnf(a, b, cfg.pm, cfg.jobs);
  return run_msgpm(a, b, cfg, fwd, bwd);
}

}  // namespace msgpm
