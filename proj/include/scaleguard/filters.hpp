#pragma once

#include "scaleguard/image.hpp"
#include "scaleguard/scaling.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace scaleguard {

enum class PreventionKind { median, random };

std::string_view to_string(PreventionKind kind);

/// Odd window extents of the selective filters.
struct Window {
    int rows = 3;
    int cols = 3;
};

/// 2 * ceil(beta) + 1 per axis.
Window default_prevention_window(const ScaleSpec& spec);

/// Selective reconstruction of masked pixels from the non-masked pixels in
/// their window: median per channel, or one uniformly drawn clean neighbour.
/// Windows with no clean pixel grow by 2 per axis; when the window reaches
/// min(height, width) without finding one, DegenerateSpec is thrown.
RasterImage prevention_filter(const RasterImage& img, const PixelMask& mask, PreventionKind kind, Window window,
                              std::uint64_t seed = 0);

/// 3x3 Gaussian, sigma 0.8, reflect-101 borders.
std::array<double, 9> gaussian_kernel_3x3();
Plane gaussian_smooth(const Plane& p);
RasterImage gaussian_smooth(const RasterImage& img);

enum class RankMode { min, max };

/// 3x3 erosion (min) or dilation (max) per channel, replicated borders.
RasterImage rank_filter_3x3(const RasterImage& img, RankMode mode);

} // namespace scaleguard
