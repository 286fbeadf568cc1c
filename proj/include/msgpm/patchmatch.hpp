#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "msgpm/image.hpp"

namespace msgpm {

struct PatchMatchConfig {
  int patch_radius = 3;  // 7x7 patches
  int iterations = 5;
  double search_decay = 0.5;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

// Nearest-neighbor field: integer offsets from image a into image b plus the
// patch cost at each stored offset.
struct Nnf {
  FlowField offsets;
  std::vector<double> cost;

  int width() const { return offsets.width(); }
  int height() const { return offsets.height(); }
  double total_cost() const;
};

// Mean over the (2r+1)^2 patch of the per-pixel mean absolute channel
// difference. Patch samples outside either image are clamped to the border.
double patch_cost(const Image& a, const Image& b, Pixel p, Pixel q, int radius);

// PatchMatch from a to b. Pixels where `frozen` is nonzero keep their seed
// offset verbatim and still act as propagation sources; they need a valid,
// in-bounds seed. Other pixels start from `seed` where it is valid and in
// bounds, otherwise from a uniformly random target.
Nnf compute_nnf(const Image& a, const Image& b, const PatchMatchConfig& cfg,
                std::span<const std::uint8_t> frozen = {}, const FlowField* seed = nullptr);

// Brute-force exhaustive search; test oracle and reference for tiny images.
Nnf exhaustive_nnf(const Image& a, const Image& b, int patch_radius);

// True iff every offset is valid, lands inside b, and its stored cost matches
// a recomputation within 1e-6.
bool verify_nnf(const Nnf& nnf, const Image& a, const Image& b, const PatchMatchConfig& cfg);

// Cache format: offsets as .flo plus a float32 cost sidecar.
void save_nnf(const Nnf& nnf, const std::filesystem::path& flo_path, const std::filesystem::path& cost_path);
Nnf load_nnf(const std::filesystem::path& flo_path, const std::filesystem::path& cost_path);

}  // namespace msgpm
