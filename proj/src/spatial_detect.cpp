#include "scaleguard/spatial_detect.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace scaleguard {

namespace {

std::vector<int> axis_starts(int len, int side, int stride)
{
    std::vector<int> starts;
    for (int s = 0; s + side <= len; s += stride) {
        starts.push_back(s);
    }
    if (starts.back() + side < len) {
        starts.push_back(len - side);
    }
    return starts;
}

void require_source(const RasterImage& img, const ScaleSpec& spec)
{
    if (img.size() != spec.src) {
        throw DimensionMismatch("image is " + std::to_string(img.height()) + "x" + std::to_string(img.width())
                                + ", spec expects " + std::to_string(spec.src.rows) + "x"
                                + std::to_string(spec.src.cols));
    }
}

} // namespace

RasterImage clean_image(const RasterImage& img, const ScaleSpec& spec, PreventionKind kind, std::uint64_t seed)
{
    if (spec.is_identity()) {
        throw DegenerateSpec("identity spec: every pixel is a scaling pixel");
    }
    return prevention_filter(img, scaling_pixel_mask(spec), kind, default_prevention_window(spec), seed);
}

PatchGrid make_patch_grid(Size2 image, int half, int stride)
{
    if (half < 1 || stride < 1) {
        throw InvalidArgument("patch half-length and stride must be positive");
    }
    const int side = 2 * half;
    if (image.rows < side || image.cols < side) {
        throw InvalidArgument("image " + std::to_string(image.rows) + "x" + std::to_string(image.cols)
                              + " is smaller than a patch of side " + std::to_string(side));
    }
    PatchGrid grid{half, stride, {}};
    for (int top : axis_starts(image.rows, side, stride)) {
        for (int left : axis_starts(image.cols, side, stride)) {
            grid.patches.push_back({top, left, top + side, left + side});
        }
    }
    return grid;
}

RasterImage crop(const RasterImage& img, const Rect& r)
{
    if (r.top < 0 || r.left < 0 || r.bottom > img.height() || r.right > img.width() || r.height() <= 0
        || r.width() <= 0) {
        throw InvalidArgument("crop rectangle outside the image");
    }
    RasterImage out(r.height(), r.width(), img.channels());
    for (int i = 0; i < r.height(); ++i) {
        for (int j = 0; j < r.width(); ++j) {
            for (int ch = 0; ch < img.channels(); ++ch) {
                out.at(i, j, ch) = img.at(r.top + i, r.left + j, ch);
            }
        }
    }
    return out;
}

double down_up_score(const RasterImage& img, const ScaleSpec& spec, Metric metric)
{
    require_source(img, spec);
    const RasterImage down = scale(img, spec);
    const RasterImage up = resize(down, spec.algorithm, spec.src);
    return image_distance(img, up, metric);
}

double minmax_filter_score(const RasterImage& img, RankMode mode, Metric metric)
{
    return image_distance(img, rank_filter_3x3(img, mode), metric);
}

double clean_filter_score(const RasterImage& img, const ScaleSpec& spec, PreventionKind kind, Metric metric,
                          std::uint64_t seed)
{
    require_source(img, spec);
    return image_distance(img, clean_image(img, spec, kind, seed), metric);
}

double patch_clean_score(const RasterImage& img, const ScaleSpec& spec, int half, int stride, PatchDiagnostics* diag)
{
    require_source(img, spec);
    return patch_clean_score(img, clean_image(img, spec, PreventionKind::median, 0), spec, half, stride, diag);
}

double patch_clean_score(const RasterImage& img, const RasterImage& filtered, const ScaleSpec& spec, int half,
                         int stride, PatchDiagnostics* diag)
{
    require_source(img, spec);
    require_same_shape(img, filtered, "patch-clean filtered image");
    const RasterImage d = gaussian_smooth(scale(img, spec));
    const RasterImage d_clean = scale(filtered, spec);
    const PatchGrid grid = make_patch_grid(d.size(), half, stride);

    std::vector<double> v;
    v.reserve(grid.patches.size());
    for (const Rect& r : grid.patches) {
        const double p = psnr(crop(d, r), crop(d_clean, r));
        v.push_back(std::isinf(p) ? kPatchPsnrCap : p);
    }
    const double score = mean_min_gap(v);
    if (diag != nullptr) {
        *diag = {grid, std::move(v), filtered};
    }
    return score;
}

double targeted_patch_clean_score(const RasterImage& img, const ScaleSpec& spec, int half, int stride, double q,
                                  PatchDiagnostics* diag)
{
    require_source(img, spec);
    return targeted_patch_clean_score(img, clean_image(img, spec, PreventionKind::median, 0), scaling_pixel_mask(spec),
                                      half, stride, q, diag);
}

double targeted_patch_clean_score(const RasterImage& img, const RasterImage& filtered, const PixelMask& mask,
                                  int half, int stride, double q, PatchDiagnostics* diag)
{
    require_same_shape(img, filtered, "targeted patch-clean filtered image");
    if (mask.rows() != img.height() || mask.cols() != img.width()) {
        throw DimensionMismatch("mask does not match image dimensions");
    }
    const PatchGrid grid = make_patch_grid(img.size(), half, stride);
    const int channels = img.channels();

    std::vector<double> per_patch;
    std::vector<double> u;
    for (const Rect& r : grid.patches) {
        u.clear();
        for (int i = r.top; i < r.bottom; ++i) {
            for (int j = r.left; j < r.right; ++j) {
                if (!mask(i, j)) {
                    continue;
                }
                double diff = 0.0;
                for (int ch = 0; ch < channels; ++ch) {
                    diff += std::abs(static_cast<double>(filtered.at(i, j, ch)) - img.at(i, j, ch));
                }
                u.push_back(diff / channels);
            }
        }
        if (!u.empty()) {
            per_patch.push_back(quantile(u, q));
        }
    }
    if (per_patch.empty()) {
        throw DegenerateSpec("no patch contains a scaling pixel");
    }
    const double score = max_mean_gap(per_patch);
    if (diag != nullptr) {
        *diag = {grid, std::move(per_patch), filtered};
    }
    return score;
}

double mean_min_gap(std::span<const double> v)
{
    if (v.empty()) {
        throw InvalidArgument("empty score vector");
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return std::abs(mean - *std::min_element(v.begin(), v.end()));
}

double max_mean_gap(std::span<const double> v)
{
    if (v.empty()) {
        throw InvalidArgument("empty score vector");
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return std::abs(*std::max_element(v.begin(), v.end()) - mean);
}

double quantile(std::span<const double> v, double q)
{
    if (v.empty()) {
        throw InvalidArgument("quantile of an empty vector");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw InvalidArgument("quantile level must lie in [0, 1]");
    }
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    if (sorted[lo] == sorted[hi]) {
        return sorted[lo]; // inf - inf would give NaN
    }
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace scaleguard
