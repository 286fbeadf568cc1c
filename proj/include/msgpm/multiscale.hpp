#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "msgpm/occlusion.hpp"
#include "msgpm/patchmatch.hpp"
#include "msgpm/plane_match.hpp"

namespace msgpm {

struct PyramidConfig {
  int levels = 2;
  int w_max = 40;
  int dw = 20;
  double beta = 0.005;            // per-level priority bonus in merge_levels
  double reliability_loss = -1.0;  // negative means epsilon / 2
  LevelConfig level;               // shared by all levels; radius is overwritten
  std::vector<double> epsilon_per_level;  // optional overrides, index l-1
  std::vector<double> eta_per_level;

  void validate() const;
  LevelConfig level_config(int l) const;  // l is 1-based
};

// [w_max - (l-1) * dw for l = 1..levels]; throws when a radius drops below 4.
std::vector<int> level_radii(const PyramidConfig& cfg);

// Final per-pixel flow with the provenance of the winning assignment.
struct MergedFlow {
  FlowField flow;
  std::vector<std::int32_t> model_id;
  std::vector<double> loss;
  std::vector<int> level;

  MergedFlow() = default;
  MergedFlow(int width, int height)
      : flow(width, height), model_id(std::size_t(width) * height, -1), loss(std::size_t(width) * height, 0.0),
        level(std::size_t(width) * height, 0) {}
};

// Model lookup by id.
const PlaneModel& find_model(std::span<const PlaneModel> models, std::int32_t id);

// Overwrites forward NNF entries at pixels assigned with loss below
// `reliability_loss` by the rounded model-induced offset and recomputes their
// cost. Targets outside b are left untouched.
Nnf propagate_reliable(const PlaneAssignment& assignment, std::span<const PlaneModel> models, const Nnf& nnf,
                       const Image& a, const Image& b, double reliability_loss, int patch_radius);

struct BackwardUpdate {
  Nnf nnf;
  std::vector<std::uint8_t> updated;
};

// Same for the backward NNF: the target q of every reliable pixel receives
// the rounded offset of the inverse model.
BackwardUpdate propagate_reliable_backward(const PlaneAssignment& assignment, std::span<const PlaneModel> models,
                                           const Nnf& nnf_bwd, const Image& a, const Image& b,
                                           double reliability_loss, int patch_radius);

// PatchMatch seeded by `nnf` with `frozen` pixels held fixed.
Nnf refresh_unassigned(const Nnf& nnf, const Image& a, const Image& b, std::span<const std::uint8_t> frozen,
                       const PatchMatchConfig& pm);

// Cross-level merge: winner minimizes loss - beta * (k - l); ties go to the
// lower level. `levels[l-1]` is level l.
MergedFlow merge_levels(std::span<const PlaneAssignment> levels, std::span<const PlaneModel> models, double beta);

struct MsgpmConfig {
  PyramidConfig pyramid;
  PatchMatchConfig pm;
  OcclusionConfig occlusion;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct LevelArtifacts {
  int level = 1;
  int radius = 0;
  PlaneAssignment assignment;  // after the multiplicity filter
  std::size_t demoted = 0;
  Nnf nnf_fwd;  // NNFs handed to the next level
  Nnf nnf_bwd;
};

struct MsgpmResult {
  MergedFlow merged;
  std::vector<PlaneModel> models;
  std::vector<LevelArtifacts> levels;
};

// Forward (a->b) and backward (b->a) NNFs; the backward run uses a derived
// seed. Runs concurrently when jobs > 1.
std::pair<Nnf, Nnf> compute_bidirectional_nnf(const Image& a, const Image& b, const PatchMatchConfig& pm, int jobs);

MsgpmResult run_msgpm(const Image& a, const Image& b, const MsgpmConfig& cfg, const Nnf& nnf_fwd, const Nnf& nnf_bwd);
MsgpmResult run_msgpm(const Image& a, const Image& b, const MsgpmConfig& cfg);

}  // namespace msgpm
