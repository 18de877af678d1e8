#pragma once

#include <filesystem>

#include "solar/render.hpp"

namespace solar {

/// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

/// Colour PFM ("PF", little-endian, bottom-to-top rows as the format requires).
void write_pfm(const std::filesystem::path& path, const Image& img);
Image read_pfm(const std::filesystem::path& path);

/// Rounds every value through the 8-bit PPM representation.
Image quantize_8bit(const Image& img);

}  // namespace solar
