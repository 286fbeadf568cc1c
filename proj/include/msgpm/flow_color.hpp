#pragma once

#include <optional>

#include "msgpm/image.hpp"

namespace msgpm {

// Number of bins in the standard Middlebury color wheel.
inline constexpr int kColorWheelBins = 55;

// (fractional wheel bin in [0,54], radius) for a flow vector.
Vec2 color_wheel_position(Vec2 flow);
// RGB in [0,1] for wheel bin `k` (0 <= k < 55).
void color_wheel_entry(int k, double rgb[3]);

// Middlebury color coding. `max_magnitude` normalizes the radius; when absent
// the largest valid magnitude is used. Invalid pixels are black.
Image flow_to_color(const FlowField& flow, std::optional<double> max_magnitude = std::nullopt);

// Per-pixel EPE(a) - EPE(b) rendered in two color families. Differences
// within +-1 px are blue (light blue when a is better, pale blue when b is
// better); beyond the band, orange marks "a better" and yellow "b better".
// Exactly equal errors are white.
Image epe_difference_map(const FlowField& a, const FlowField& b, const FlowField& gt);

namespace diffmap {
inline constexpr double kZero[3] = {1.0, 1.0, 1.0};
inline constexpr double kBandABetter[3] = {0.55, 0.8, 1.0};
inline constexpr double kBandBBetter[3] = {0.8, 0.9, 1.0};
inline constexpr double kABetter[3] = {1.0, 0.55, 0.1};
inline constexpr double kBBetter[3] = {1.0, 0.9, 0.15};
}  // namespace diffmap

}  // namespace msgpm
