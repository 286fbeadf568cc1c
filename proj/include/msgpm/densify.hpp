#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "msgpm/image.hpp"
#include "msgpm/multiscale.hpp"
#include "msgpm/plane_match.hpp"

namespace msgpm {

// Best-first region growing of neighboring models into unfilled pixels. A
// candidate is accepted only while its truncated loss stays below epsilon.
// Ties pop in (loss, pixel index, model id) order.
MergedFlow propagate_models(const MergedFlow& merged, std::span<const PlaneModel> models, const Image& a,
                            const Image& b, double epsilon);

struct InterpolationConfig {
  int neighbors = 25;     // K geodesic-nearest seeds
  double sigma = 20.0;    // weight exp(-d / sigma)
  double lambda = 100.0;  // edge cost 1 + lambda * gradient magnitude

  void validate() const;
};

// Sparse-to-dense interpolation behind a named interface.
class Interpolator {
 public:
  virtual ~Interpolator() = default;
  virtual const char* name() const = 0;
  // `seeds` holds valid pixels to interpolate from; the result is dense.
  virtual FlowField interpolate(const FlowField& seeds, const Image& guide) const = 0;
};

// Locally weighted affine fit over geodesic-nearest seeds.
class EdgeAwareInterpolator : public Interpolator {
 public:
  explicit EdgeAwareInterpolator(InterpolationConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }
  const char* name() const override { return "edge-aware-affine"; }
  FlowField interpolate(const FlowField& seeds, const Image& guide) const override;

 private:
  InterpolationConfig cfg_;
};

// Returns a precomputed dense field, e.g. from an external interpolator.
class ExternalInterpolator : public Interpolator {
 public:
  explicit ExternalInterpolator(FlowField dense);
  const char* name() const override { return "external"; }
  FlowField interpolate(const FlowField& seeds, const Image& guide) const override;

 private:
  FlowField dense_;
};

FlowField edge_aware_interpolate(const FlowField& seeds, const Image& guide, const InterpolationConfig& cfg = {});

// Mean channel gradient magnitude by central differences (one-sided at the
// border).
std::vector<double> gradient_magnitude(const Image& guide);

struct GeodesicSeed {
  std::int32_t seed;  // pixel index of the seed
  double distance;
};

// Up to k nearest seeds per pixel by geodesic distance on the 4-connected
// grid with edge cost 1 + lambda * mean endpoint gradient. Each list is sorted
// by distance.
std::vector<std::vector<GeodesicSeed>> geodesic_nearest_seeds(std::span<const std::uint8_t> is_seed, int width,
                                                              int height, std::span<const double> gradient,
                                                              double lambda, int k);

// Picks per pixel the flow with the smaller warped color error; ties and
// out-of-frame double failures go to a. A pixel valid in only one input takes
// that one. Throws when a pixel is invalid in both.
FlowField merge_by_consistency(const FlowField& a, const FlowField& b, const Image& img1, const Image& img2);

}  // namespace msgpm
