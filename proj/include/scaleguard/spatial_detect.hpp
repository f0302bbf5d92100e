#pragma once

#include "scaleguard/filters.hpp"
#include "scaleguard/image.hpp"
#include "scaleguard/metrics.hpp"
#include "scaleguard/scaling.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace scaleguard {

/// Sliding square windows of side 2 * half; the last row and column of
/// windows sit flush against the border.
struct PatchGrid {
    int half = 0;
    int stride = 0;
    std::vector<Rect> patches;
};

/// Throws InvalidArgument if the image is smaller than one patch.
PatchGrid make_patch_grid(Size2 image, int half, int stride);

RasterImage crop(const RasterImage& img, const Rect& r);

/// Distance between img and upscale(downscale(img)) with the ScaleSpec's kernel.
double down_up_score(const RasterImage& img, const ScaleSpec& spec, Metric metric);

double minmax_filter_score(const RasterImage& img, RankMode mode, Metric metric);

/// Distance between img and its prevention-filtered copy. Rejects identity specs.
double clean_filter_score(const RasterImage& img, const ScaleSpec& spec, PreventionKind kind, Metric metric,
                          std::uint64_t seed = 0);

/// Per-patch PSNR values assigned to patches whose two copies are identical.
inline constexpr double kPatchPsnrCap = 96.0;

/// Optional per-image intermediates for the debug export.
struct PatchDiagnostics {
    PatchGrid grid;
    std::vector<double> values;
    RasterImage filtered;
};

double patch_clean_score(const RasterImage& img, const ScaleSpec& spec, int half = 22, int stride = 11,
                         PatchDiagnostics* diag = nullptr);
/// Same, with the median prevention-filtered image supplied by the caller.
double patch_clean_score(const RasterImage& img, const RasterImage& filtered, const ScaleSpec& spec, int half,
                         int stride, PatchDiagnostics* diag = nullptr);

double targeted_patch_clean_score(const RasterImage& img, const ScaleSpec& spec, int half = 11, int stride = 11,
                                  double q = 0.6, PatchDiagnostics* diag = nullptr);
double targeted_patch_clean_score(const RasterImage& img, const RasterImage& filtered, const PixelMask& mask,
                                  int half, int stride, double q, PatchDiagnostics* diag = nullptr);

/// Prevention filter with the ScaleSpec's mask and default window. Rejects identity specs.
RasterImage clean_image(const RasterImage& img, const ScaleSpec& spec, PreventionKind kind, std::uint64_t seed = 0);

/// |mean(v) - min(v)|
double mean_min_gap(std::span<const double> v);
/// |max(v) - mean(v)|
double max_mean_gap(std::span<const double> v);
/// Linear interpolation between closest ranks, q in [0, 1].
double quantile(std::span<const double> v, double q);

} // namespace scaleguard
