#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msgpm/image.hpp"
#include "msgpm/plane_match.hpp"

namespace msgpm {

struct OcclusionConfig {
  double delta_m = 0.01;    // many-to-one loss margin
  double theta_occ = 0.08;  // final color-consistency threshold

  void validate() const;
};

// Forward-backward projection symmetry of a model's forward inliers.
double symmetry_check(const PlaneModel& model, std::span<const Pixel> fwd_inliers, int width, int height);

// IoU of the RANSAC inliers and the photometric inliers.
double agreement_check(std::span<const Pixel> geometric, std::span<const Pixel> photometric, int width);

// Source pixels (indices into image 1) that lose a many-to-one collision in
// image 2. Collisions are between distinct models whose assigned pixels round
// to the same target pixel; at each contested target the model with the
// highest mean contested loss is demoted when it exceeds the best competitor
// by more than delta_m.
std::vector<std::size_t> multiplicity_demotions(const PlaneAssignment& assignment, std::span<const PlaneModel> models,
                                                double delta_m);

// Applies multiplicity_demotions in place; returns the number of pixels
// unassigned.
std::size_t multiplicity_filter(PlaneAssignment& assignment, std::span<const PlaneModel> models, double delta_m);

// Per-pixel warped color error of a dense flow; occluded when it exceeds
// theta, when the target leaves the frame, or when `forced` is set.
OcclusionMask final_occlusion_map(const FlowField& flow, const Image& a, const Image& b, double theta,
                                  std::span<const std::uint8_t> forced = {});

}  // namespace msgpm
