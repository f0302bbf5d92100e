#pragma once

#include "scaleguard/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace scaleguard {

/// Reads PNG, binary PGM/PPM (P5/P6) or JPEG, chosen by file signature.
/// Alpha channels are dropped; 16-bit samples are reduced to 8 bits.
RasterImage read_image(const std::filesystem::path& path);

/// Writes by extension: .png, .ppm/.pgm, .jpg/.jpeg (quality 95).
void write_image(const std::filesystem::path& path, const RasterImage& img);

void write_png(const std::filesystem::path& path, const RasterImage& img);
void write_pnm(const std::filesystem::path& path, const RasterImage& img);
void write_jpeg(const std::filesystem::path& path, const RasterImage& img, int quality);

/// 16-bit grayscale PNG of a rows x cols grid.
void write_png16(const std::filesystem::path& path, int rows, int cols, std::span<const std::uint16_t> values);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
RasterImage decode_png(std::span<const std::uint8_t> bytes);

/// Baseline JPEG through libjpeg; quality in 1..100.
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality);
RasterImage decode_jpeg(std::span<const std::uint8_t> bytes);

RasterImage jpeg_roundtrip(const RasterImage& img, int quality);

} // namespace scaleguard
