#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scaleguard {

struct Size2 {
    int rows = 0;
    int cols = 0;

    friend bool operator==(const Size2&, const Size2&) = default;
};

/// Half-open rectangle [top, bottom) x [left, right).
struct Rect {
    int top = 0;
    int left = 0;
    int bottom = 0;
    int right = 0;

    int height() const { return bottom - top; }
    int width() const { return right - left; }
    bool contains(int r, int c) const { return r >= top && r < bottom && c >= left && c < right; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Round half away from zero, then clamp to [0, 255].
std::uint8_t quantize(double value);

/// One channel of floating-point intensities, row-major.
class Plane {
public:
    Plane() = default;
    Plane(int rows, int cols, double fill = 0.0);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

/// H x W x C pixel grid with 8-bit interleaved storage.
///
/// Every stored intensity is in [0, 255] by construction; floating-point
/// work happens on Plane copies and is quantized back with quantize().
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int height, int width, int channels, std::uint8_t fill = 0);
    RasterImage(int height, int width, int channels, std::vector<std::uint8_t> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    Size2 size() const { return {height_, width_}; }
    bool empty() const { return data_.empty(); }

    std::uint8_t at(int r, int c, int ch = 0) const { return data_[index(r, c, ch)]; }
    std::uint8_t& at(int r, int c, int ch = 0) { return data_[index(r, c, ch)]; }

    std::span<const std::uint8_t> data() const { return data_; }
    std::span<std::uint8_t> data() { return data_; }

    /// Copy of one channel as floating point.
    Plane plane(int channel) const;
    std::vector<Plane> planes() const;

    /// Quantizes `values` into `channel`. Dimensions must match.
    void store(int channel, const Plane& values);

    static RasterImage from_planes(std::span<const Plane> planes);

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t index(int r, int c, int ch) const
    {
        return (static_cast<std::size_t>(r) * width_ + c) * channels_ + ch;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// 0.299 R + 0.587 G + 0.114 B for colour images, the single channel otherwise.
Plane luminance(const RasterImage& img);

/// Throws DimensionMismatch unless height, width and channels agree.
void require_same_shape(const RasterImage& a, const RasterImage& b, const char* what);

/// Largest absolute per-sample difference.
int max_abs_diff(const RasterImage& a, const RasterImage& b);

} // namespace scaleguard
