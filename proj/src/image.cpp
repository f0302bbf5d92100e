#include "scaleguard/image.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace scaleguard {

std::uint8_t quantize(double value)
{
    const double r = std::round(value);
    if (!(r > 0.0)) {
        return 0;
    }
    if (r >= 255.0) {
        return 255;
    }
    return static_cast<std::uint8_t>(r);
}

Plane::Plane(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, fill)
{
    if (rows < 0 || cols < 0) {
        throw InvalidArgument("plane dimensions must be non-negative");
    }
}

RasterImage::RasterImage(int height, int width, int channels, std::uint8_t fill)
    : height_(height), width_(width), channels_(channels)
{
    if (height <= 0 || width <= 0) {
        throw InvalidArgument("image dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
        throw InvalidArgument("image must have 1 or 3 channels, got " + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

RasterImage::RasterImage(int height, int width, int channels, std::vector<std::uint8_t> data)
    : RasterImage(height, width, channels)
{
    if (data.size() != data_.size()) {
        throw DimensionMismatch("pixel buffer has " + std::to_string(data.size()) + " samples, expected "
                                + std::to_string(data_.size()));
    }
    data_ = std::move(data);
}

Plane RasterImage::plane(int channel) const
{
    Plane p(height_, width_);
    auto out = p.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = data_[i * channels_ + channel];
    }
    return p;
}

std::vector<Plane> RasterImage::planes() const
{
    std::vector<Plane> out;
    out.reserve(static_cast<std::size_t>(channels_));
    for (int ch = 0; ch < channels_; ++ch) {
        out.push_back(plane(ch));
    }
    return out;
}

void RasterImage::store(int channel, const Plane& values)
{
    if (values.rows() != height_ || values.cols() != width_) {
        throw DimensionMismatch("plane does not match image dimensions");
    }
    auto in = values.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        data_[i * channels_ + channel] = quantize(in[i]);
    }
}

RasterImage RasterImage::from_planes(std::span<const Plane> planes)
{
    if (planes.empty()) {
        throw InvalidArgument("no planes given");
    }
    RasterImage img(planes[0].rows(), planes[0].cols(), static_cast<int>(planes.size()));
    for (int ch = 0; ch < img.channels(); ++ch) {
        img.store(ch, planes[static_cast<std::size_t>(ch)]);
    }
    return img;
}

Plane luminance(const RasterImage& img)
{
    if (img.channels() == 1) {
        return img.plane(0);
    }
    Plane p(img.height(), img.width());
    auto out = p.values();
    auto in = img.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.299 * in[3 * i] + 0.587 * in[3 * i + 1] + 0.114 * in[3 * i + 2];
    }
    return p;
}

void require_same_shape(const RasterImage& a, const RasterImage& b, const char* what)
{
    if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
        throw DimensionMismatch(std::string(what) + ": image shapes differ ("
                                + std::to_string(a.height()) + "x" + std::to_string(a.width()) + "x"
                                + std::to_string(a.channels()) + " vs " + std::to_string(b.height()) + "x"
                                + std::to_string(b.width()) + "x" + std::to_string(b.channels()) + ")");
    }
}

int max_abs_diff(const RasterImage& a, const RasterImage& b)
{
    require_same_shape(a, b, "max_abs_diff");
    int worst = 0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        worst = std::max(worst, std::abs(int(da[i]) - int(db[i])));
    }
    return worst;
}

} // namespace scaleguard
