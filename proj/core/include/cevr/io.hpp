#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "cevr/image.hpp"

namespace cevr {

// Reads an 8-bit, 3-channel PNG or JPEG and scales levels by 1/255.
// Missing files raise ErrorKind::FileNotFound; other bit depths or channel
// layouts raise ErrorKind::UnsupportedFormat.
LdrImage load_ldr(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG. Each value is quantized as round(v * 255) with
// halves rounded up.
void save_ldr(const LdrImage& image, const std::filesystem::path& path);

std::uint8_t quantize_level(double v);

using Rgbe = std::array<std::uint8_t, 4>;

Rgbe rgbe_encode(double r, double g, double b);
std::array<double, 3> rgbe_decode(const Rgbe& px);

// Radiance .hdr writer: "#?RADIANCE" header, FORMAT=32-bit_rle_rgbe, flat
// (uncompressed) scanlines.
void write_radiance_rgbe(const RadianceMap& radiance, const std::filesystem::path& path);

// Reads flat or run-length encoded RGBE scanlines. Zero pixels are lifted to
// the smallest positive value so the result satisfies RadianceMap.
RadianceMap read_radiance_rgbe(const std::filesystem::path& path);

}  // namespace cevr
