#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "msgpm/image.hpp"

namespace msgpm {

// Loads an 8-bit PNG or binary PPM/PGM and normalizes intensities by 1/255.
// Color inputs (RGB, RGBA, palette) become 3 channels; grayscale becomes 1.
Image load_image(const std::filesystem::path& path);

// Writes an 8-bit PNG, quantizing intensities with round(v * 255).
void save_png(const Image& image, const std::filesystem::path& path);
void save_ppm(const Image& image, const std::filesystem::path& path);
// Occluded pixels are written as 255, visible as 0.
void save_mask_png(const OcclusionMask& mask, const std::filesystem::path& path);
// Packs one 32-bit id per pixel into RGBA bytes (R = most significant).
void save_id_png(std::span<const std::int32_t> ids, int width, int height,
                 const std::filesystem::path& path);

// Middlebury .flo: "PIEH", int32 width, int32 height, interleaved float32 (u,v),
// all little-endian. Invalid pixels are written as (1e10, 1e10) and any
// component with magnitude > 1e9 is read back as invalid.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(std::span<const std::uint8_t> bytes, const std::string& name);

// Float raster sidecar with a .flo-style header: "PIEC", int32 width,
// int32 height, then row-major float32 values.
void write_float_raster(std::span<const double> values, int width, int height,
                        const std::filesystem::path& path);
std::vector<double> read_float_raster(const std::filesystem::path& path, int& width, int& height);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace msgpm
