#pragma once

#include "scaleguard/image.hpp"

#include <array>
#include <string_view>

namespace scaleguard {

enum class Metric { psnr, mse, ssim, histogram, color_scattering };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

/// True when lower metric values mean the two images are further apart.
bool lower_is_farther(Metric m);

/// PSNR in dB for a given MSE on the 8-bit range; +inf for mse == 0.
double psnr_from_mse(double mse);

/// Mean squared error over all pixels and channels.
double mse(const RasterImage& a, const RasterImage& b);
double psnr(const RasterImage& a, const RasterImage& b);

/// Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03)
/// over the fully-covered region, per channel then averaged.
double ssim(const RasterImage& a, const RasterImage& b);
double ssim(const Plane& a, const Plane& b);

/// Sum over channels of the L1 distance between 256-bin normalized histograms.
double histogram_distance(const RasterImage& a, const RasterImage& b);

/// Entry t: mean Euclidean distance to the image centre over luminance
/// pixels of intensity t (zero when absent).
std::array<double, 256> color_scattering_profile(const RasterImage& img);
double color_scattering_distance(const RasterImage& a, const RasterImage& b);

double image_distance(const RasterImage& a, const RasterImage& b, Metric metric);

} // namespace scaleguard
