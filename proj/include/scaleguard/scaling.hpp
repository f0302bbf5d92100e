#pragma once

#include "scaleguard/image.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace scaleguard {

enum class Algorithm { nearest, bilinear, bicubic };

std::string_view to_string(Algorithm alg);
/// Throws InvalidArgument for unknown names.
Algorithm parse_algorithm(std::string_view name);

/// Source/target geometry of one scaling configuration.
///
/// Ratios are kept as the exact fractions m/m' and n/n'.
struct ScaleSpec {
    Algorithm algorithm = Algorithm::nearest;
    Size2 src;
    Size2 dst;

    double ratio_rows() const { return static_cast<double>(src.rows) / dst.rows; }
    double ratio_cols() const { return static_cast<double>(src.cols) / dst.cols; }
    bool is_downscale() const { return src.rows >= dst.rows && src.cols >= dst.cols; }
    bool is_identity() const { return src == dst; }
    /// Downscale with both ratios strictly above one.
    bool is_attackable() const { return src.rows > dst.rows && src.cols > dst.cols; }

    friend bool operator==(const ScaleSpec&, const ScaleSpec&) = default;
};

/// Throws InvalidArgument unless dimensions are positive and spec downscales.
void validate_downscale(const ScaleSpec& spec);

struct Tap {
    int index = 0;
    double weight = 0.0;
};

/// Sparse row-stochastic resampling matrix of one axis (dst_len x src_len).
class AxisOperator {
public:
    AxisOperator() = default;
    AxisOperator(int src_len, std::vector<std::vector<Tap>> rows);

    int src_len() const { return src_len_; }
    int dst_len() const { return static_cast<int>(rows_.size()); }
    const std::vector<Tap>& row(int k) const { return rows_[static_cast<std::size_t>(k)]; }

    double weight(int k, int i) const;
    /// Dense dst_len x src_len copy, row-major.
    std::vector<double> dense() const;

    /// out[k] = sum_i row(k)[i] * in[i]; out must hold dst_len values.
    void apply(std::span<const double> in, std::span<double> out) const;

private:
    int src_len_ = 0;
    std::vector<std::vector<Tap>> rows_;
};

/// Resampling along one axis, either direction, half-pixel-centre mapping
/// src = (dst + 0.5) * (src_len / dst_len) - 0.5 with clamped borders.
AxisOperator build_axis_operator(Algorithm alg, int src_len, int dst_len);

/// scale(X) = left * X * right^T for every channel.
struct SamplingOperator {
    AxisOperator left;  // m' x m, mixes rows
    AxisOperator right; // n' x n, mixes columns
};

SamplingOperator build_sampling_operator(const ScaleSpec& spec);

/// left * X * right^T without quantization.
Plane apply_operator(const SamplingOperator& op, const Plane& x);

/// Downscale per spec; output is quantized.
RasterImage scale(const RasterImage& img, const ScaleSpec& spec);
RasterImage scale(const RasterImage& img, const SamplingOperator& op);

/// Resize in either direction with the given kernel; output is quantized.
RasterImage resize(const RasterImage& img, Algorithm alg, Size2 dst);

/// Boolean grid over the source: true where a pixel carries nonzero weight.
class PixelMask {
public:
    PixelMask() = default;
    PixelMask(int rows, int cols, bool fill = false);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool operator()(int r, int c) const { return bits_[static_cast<std::size_t>(r) * cols_ + c] != 0; }
    void set(int r, int c, bool v) { bits_[static_cast<std::size_t>(r) * cols_ + c] = v ? 1 : 0; }
    std::size_t count() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

PixelMask scaling_pixel_mask(const ScaleSpec& spec);
PixelMask scaling_pixel_mask(const SamplingOperator& op);

} // namespace scaleguard
