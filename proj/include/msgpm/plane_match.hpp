#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msgpm/homography.hpp"
#include "msgpm/image.hpp"
#include "msgpm/patchmatch.hpp"

namespace msgpm {

// Square window of side 2*radius+1 clipped to the image. Bounds inclusive.
struct Window {
  int id = 0;
  int cx = 0, cy = 0;
  int radius = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  std::size_t area() const { return std::size_t(x1 - x0 + 1) * std::size_t(y1 - y0 + 1); }
};

// Centers on a stride lattice starting at (radius, radius); the last
// row/column is clamped to dim-1-radius so every pixel is covered. An image
// smaller than one window yields one window centered on it. Row-major order.
std::vector<Window> window_grid(int width, int height, int radius, int stride);

struct LevelConfig {
  int level = 1;
  int window_radius = 40;
  int stride = 0;  // 0 means window_radius (half overlap)
  double epsilon = 0.04;
  double eta = 0.5;
  double tau_agree = 0.3;
  bool symmetry_gate = true;
  bool agreement_gate = true;
  int residual_min = 64;
  int stage2_passes = 3;
  int max_pairs = 2000;
  RansacConfig ransac;

  int effective_stride() const { return stride > 0 ? stride : window_radius; }
  void validate() const;
};

enum class Stage { first, residual };

struct PlaneModel {
  int id = -1;
  Homography h_fwd;
  std::optional<Homography> h_bwd;
  Window window;
  int level = 1;
  Stage stage = Stage::first;
  // Cue values recorded during validation.
  double symmetry_overlap = 0.0;
  double agreement = 0.0;
  std::size_t geometric_inliers = 0;
  std::size_t photometric_inliers = 0;
};

// Per-pixel winning model (-1 when unassigned), its truncated loss and level.
class PlaneAssignment {
 public:
  PlaneAssignment() = default;
  PlaneAssignment(int width, int height)
      : width_(width), height_(height), model_id_(std::size_t(width) * height, -1),
        loss_(std::size_t(width) * height, 0.0), level_(std::size_t(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return model_id_.size(); }
  bool assigned(std::size_t i) const { return model_id_[i] >= 0; }
  std::int32_t model_id(std::size_t i) const { return model_id_[i]; }
  double loss(std::size_t i) const { return loss_[i]; }
  int level(std::size_t i) const { return level_[i]; }
  std::span<const std::int32_t> model_ids() const { return model_id_; }
  std::span<const double> losses() const { return loss_; }

  void assign(std::size_t i, std::int32_t model, double loss, int level) {
    model_id_[i] = model;
    loss_[i] = loss;
    level_[i] = level;
  }
  void clear(std::size_t i) {
    model_id_[i] = -1;
    loss_[i] = 0.0;
    level_[i] = 0;
  }
  // Min-loss merge; exact ties go to the lower model id.
  bool offer(std::size_t i, std::int32_t model, double loss, int level) {
    if (assigned(i) && (loss_[i] < loss || (loss_[i] == loss && model_id_[i] <= model))) return false;
    assign(i, model, loss, level);
    return true;
  }
  std::size_t count_assigned() const;

  friend bool operator==(const PlaneAssignment&, const PlaneAssignment&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> model_id_;
  std::vector<double> loss_;
  std::vector<int> level_;
};

// Truncated photometric residual of each region pixel under h:
// min(mean_c |a(p) - b(h p)|, epsilon), or epsilon when h p leaves b.
std::vector<double> color_consistency_loss(const Image& a, const Image& b, const Homography& h,
                                           std::span<const Pixel> region, double epsilon);

// Everything detect_plane learns about a window before any assignment.
struct Detection {
  PlaneModel model;
  std::vector<Pixel> geometric_inliers;  // region pixels whose NNF pair fits h_fwd
};

// RANSAC on the forward NNF pairs of `region`, then a backward fit on the
// backward NNF inside the projection of the geometric inliers.
std::optional<Detection> detect_plane(const Window& window, std::span<const Pixel> region, const Nnf& nnf_fwd,
                                      const Nnf& nnf_bwd, const LevelConfig& cfg, std::uint64_t seed);

// |B n A| / |A| where A = fwd_inliers and B is the backward model's
// back-projection of the forward projection of A, both rasterized by
// nearest-pixel rounding. 0 without a backward model.
double symmetry_ratio(const PlaneModel& model, std::span<const Pixel> fwd_inliers, int width, int height);

// Intersection over union of two pixel sets.
double agreement_ratio(std::span<const Pixel> geometric, std::span<const Pixel> photometric, int width);

struct Validation {
  bool accepted = false;
  std::vector<Pixel> inliers;   // photometric inliers (loss < epsilon)
  std::vector<double> losses;   // matching `inliers`
};

// Photometric validation plus the symmetry and agreement gates. Pure; does
// not touch any assignment. Records cue values on `detection.model`.
Validation validate_model(Detection& detection, std::span<const Pixel> region, const Image& a, const Image& b,
                          const LevelConfig& cfg);

// validate_model followed by the min-loss write of the inliers.
Validation validate_and_assign(Detection& detection, std::span<const Pixel> region, const Image& a,
                               const Image& b, PlaneAssignment& assignment, const LevelConfig& cfg);

struct LevelResult {
  PlaneAssignment assignment;
  std::vector<PlaneModel> models;  // accepted models, ids first_model_id..
};

// Both stages of one window size. Accepted models receive consecutive ids
// starting at `first_model_id`. Stage-1 detection runs on up to `jobs`
// threads; results do not depend on the thread count.
LevelResult run_level(const Image& a, const Image& b, const Nnf& nnf_fwd, const Nnf& nnf_bwd, const LevelConfig& cfg,
                      int first_model_id, std::uint64_t seed, int jobs = 1);

}  // namespace msgpm
