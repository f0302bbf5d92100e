#include "scaleguard/scaling.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scaleguard {

namespace {

constexpr double kBicubicA = -0.5;
constexpr double kNegligibleWeight = 1e-12;

double keys_cubic(double d)
{
    const double x = std::abs(d);
    if (x < 1.0) {
        return ((kBicubicA + 2.0) * x - (kBicubicA + 3.0)) * x * x + 1.0;
    }
    if (x < 2.0) {
        return ((kBicubicA * x - 5.0 * kBicubicA) * x + 8.0 * kBicubicA) * x - 4.0 * kBicubicA;
    }
    return 0.0;
}

std::vector<Tap> kernel_taps(Algorithm alg, double x, int src_len)
{
    std::vector<Tap> raw;
    switch (alg) {
    case Algorithm::nearest:
        raw.push_back({static_cast<int>(std::round(x)), 1.0});
        break;
    case Algorithm::bilinear: {
        const double base = std::floor(x);
        const double t = x - base;
        raw.push_back({static_cast<int>(base), 1.0 - t});
        raw.push_back({static_cast<int>(base) + 1, t});
        break;
    }
    case Algorithm::bicubic: {
        const int base = static_cast<int>(std::floor(x));
        for (int i = base - 1; i <= base + 2; ++i) {
            raw.push_back({i, keys_cubic(x - i)});
        }
        break;
    }
    }

    std::vector<Tap> taps;
    for (Tap t : raw) {
        t.index = std::clamp(t.index, 0, src_len - 1);
        auto it = std::find_if(taps.begin(), taps.end(), [&](const Tap& o) { return o.index == t.index; });
        if (it == taps.end()) {
            taps.push_back(t);
        } else {
            it->weight += t.weight;
        }
    }
    std::erase_if(taps, [](const Tap& t) { return std::abs(t.weight) < kNegligibleWeight; });
    const double total = std::accumulate(taps.begin(), taps.end(), 0.0,
                                         [](double acc, const Tap& t) { return acc + t.weight; });
    for (Tap& t : taps) {
        t.weight /= total;
    }
    std::sort(taps.begin(), taps.end(), [](const Tap& a, const Tap& b) { return a.index < b.index; });
    return taps;
}

} // namespace

std::string_view to_string(Algorithm alg)
{
    switch (alg) {
    case Algorithm::nearest:
        return "nearest";
    case Algorithm::bilinear:
        return "bilinear";
    case Algorithm::bicubic:
        return "bicubic";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name)
{
    if (name == "nearest") {
        return Algorithm::nearest;
    }
    if (name == "bilinear") {
        return Algorithm::bilinear;
    }
    if (name == "bicubic") {
        return Algorithm::bicubic;
    }
    throw InvalidArgument("unknown scaling algorithm '" + std::string(name) + "'");
}

void validate_downscale(const ScaleSpec& spec)
{
    if (spec.src.rows <= 0 || spec.src.cols <= 0 || spec.dst.rows <= 0 || spec.dst.cols <= 0) {
        throw InvalidArgument("scale spec dimensions must be positive");
    }
    if (!spec.is_downscale()) {
        throw InvalidArgument("scale spec " + std::to_string(spec.src.rows) + "x" + std::to_string(spec.src.cols)
                              + " -> " + std::to_string(spec.dst.rows) + "x" + std::to_string(spec.dst.cols)
                              + " is an upscale");
    }
}

AxisOperator::AxisOperator(int src_len, std::vector<std::vector<Tap>> rows)
    : src_len_(src_len), rows_(std::move(rows))
{
}

double AxisOperator::weight(int k, int i) const
{
    for (const Tap& t : row(k)) {
        if (t.index == i) {
            return t.weight;
        }
    }
    return 0.0;
}

std::vector<double> AxisOperator::dense() const
{
    std::vector<double> out(static_cast<std::size_t>(dst_len()) * src_len_, 0.0);
    for (int k = 0; k < dst_len(); ++k) {
        for (const Tap& t : row(k)) {
            out[static_cast<std::size_t>(k) * src_len_ + t.index] = t.weight;
        }
    }
    return out;
}

void AxisOperator::apply(std::span<const double> in, std::span<double> out) const
{
    for (int k = 0; k < dst_len(); ++k) {
        double acc = 0.0;
        for (const Tap& t : row(k)) {
            acc += t.weight * in[static_cast<std::size_t>(t.index)];
        }
        out[static_cast<std::size_t>(k)] = acc;
    }
}

AxisOperator build_axis_operator(Algorithm alg, int src_len, int dst_len)
{
    if (src_len <= 0 || dst_len <= 0) {
        throw InvalidArgument("axis lengths must be positive");
    }
    std::vector<std::vector<Tap>> rows(static_cast<std::size_t>(dst_len));
    for (int k = 0; k < dst_len; ++k) {
        // One rounding step, so half-integer positions (nearest ties) stay exact.
        const double x = (k + 0.5) * src_len / dst_len - 0.5;
        rows[static_cast<std::size_t>(k)] = kernel_taps(alg, x, src_len);
    }
    return AxisOperator(src_len, std::move(rows));
}

SamplingOperator build_sampling_operator(const ScaleSpec& spec)
{
    validate_downscale(spec);
    return {build_axis_operator(spec.algorithm, spec.src.rows, spec.dst.rows),
            build_axis_operator(spec.algorithm, spec.src.cols, spec.dst.cols)};
}

Plane apply_operator(const SamplingOperator& op, const Plane& x)
{
    if (x.rows() != op.left.src_len() || x.cols() != op.right.src_len()) {
        throw DimensionMismatch("image is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols())
                                + " but operator expects " + std::to_string(op.left.src_len()) + "x"
                                + std::to_string(op.right.src_len()));
    }
    const int out_rows = op.left.dst_len();
    const int out_cols = op.right.dst_len();

    Plane mixed(out_rows, x.cols());
    for (int k = 0; k < out_rows; ++k) {
        for (const Tap& t : op.left.row(k)) {
            for (int c = 0; c < x.cols(); ++c) {
                mixed(k, c) += t.weight * x(t.index, c);
            }
        }
    }
    Plane out(out_rows, out_cols);
    for (int r = 0; r < out_rows; ++r) {
        for (int l = 0; l < out_cols; ++l) {
            double acc = 0.0;
            for (const Tap& t : op.right.row(l)) {
                acc += t.weight * mixed(r, t.index);
            }
            out(r, l) = acc;
        }
    }
    return out;
}

RasterImage scale(const RasterImage& img, const SamplingOperator& op)
{
    RasterImage out(op.left.dst_len(), op.right.dst_len(), img.channels());
    for (int ch = 0; ch < img.channels(); ++ch) {
        out.store(ch, apply_operator(op, img.plane(ch)));
    }
    return out;
}

RasterImage scale(const RasterImage& img, const ScaleSpec& spec)
{
    if (img.size() != spec.src) {
        throw DimensionMismatch("image is " + std::to_string(img.height()) + "x" + std::to_string(img.width())
                                + " but spec source is " + std::to_string(spec.src.rows) + "x"
                                + std::to_string(spec.src.cols));
    }
    return scale(img, build_sampling_operator(spec));
}

RasterImage resize(const RasterImage& img, Algorithm alg, Size2 dst)
{
    const SamplingOperator op{build_axis_operator(alg, img.height(), dst.rows),
                              build_axis_operator(alg, img.width(), dst.cols)};
    return scale(img, op);
}

PixelMask::PixelMask(int rows, int cols, bool fill)
    : rows_(rows), cols_(cols), bits_(static_cast<std::size_t>(rows) * cols, fill ? 1 : 0)
{
}

std::size_t PixelMask::count() const
{
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelMask scaling_pixel_mask(const SamplingOperator& op)
{
    auto used = [](const AxisOperator& axis) {
        std::vector<bool> hit(static_cast<std::size_t>(axis.src_len()), false);
        for (int k = 0; k < axis.dst_len(); ++k) {
            for (const Tap& t : axis.row(k)) {
                if (t.weight != 0.0) {
                    hit[static_cast<std::size_t>(t.index)] = true;
                }
            }
        }
        return hit;
    };
    const auto rows = used(op.left);
    const auto cols = used(op.right);
    PixelMask mask(op.left.src_len(), op.right.src_len());
    for (int r = 0; r < mask.rows(); ++r) {
        if (!rows[static_cast<std::size_t>(r)]) {
            continue;
        }
        for (int c = 0; c < mask.cols(); ++c) {
            if (cols[static_cast<std::size_t>(c)]) {
                mask.set(r, c, true);
            }
        }
    }
    return mask;
}

PixelMask scaling_pixel_mask(const ScaleSpec& spec)
{
    return scaling_pixel_mask(build_sampling_operator(spec));
}

} // namespace scaleguard
