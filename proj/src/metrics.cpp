#include "scaleguard/metrics.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace scaleguard {

namespace {

constexpr double kPeak = 255.0;
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = (0.01 * kPeak) * (0.01 * kPeak);
constexpr double kC2 = (0.03 * kPeak) * (0.03 * kPeak);

std::vector<double> gaussian_taps(int size, double sigma)
{
    std::vector<double> taps(static_cast<std::size_t>(size));
    const double mid = (size - 1) / 2.0;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - mid;
        taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += taps[static_cast<std::size_t>(i)];
    }
    for (double& t : taps) {
        t /= total;
    }
    return taps;
}

// Separable 'valid' filtering: output shrinks by size-1 along each axis.
Plane filter_valid(const Plane& in, const std::vector<double>& taps_r, const std::vector<double>& taps_c)
{
    const int kr = static_cast<int>(taps_r.size());
    const int kc = static_cast<int>(taps_c.size());
    Plane horiz(in.rows(), in.cols() - kc + 1);
    for (int r = 0; r < horiz.rows(); ++r) {
        for (int c = 0; c < horiz.cols(); ++c) {
            double acc = 0.0;
            for (int j = 0; j < kc; ++j) {
                acc += taps_c[static_cast<std::size_t>(j)] * in(r, c + j);
            }
            horiz(r, c) = acc;
        }
    }
    Plane out(in.rows() - kr + 1, horiz.cols());
    for (int r = 0; r < out.rows(); ++r) {
        for (int c = 0; c < out.cols(); ++c) {
            double acc = 0.0;
            for (int i = 0; i < kr; ++i) {
                acc += taps_r[static_cast<std::size_t>(i)] * horiz(r + i, c);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

int window_for(int len)
{
    if (len >= kSsimWindow) {
        return kSsimWindow;
    }
    return len % 2 == 1 ? len : len - 1;
}

} // namespace

std::string_view to_string(Metric m)
{
    switch (m) {
    case Metric::psnr:
        return "psnr";
    case Metric::mse:
        return "mse";
    case Metric::ssim:
        return "ssim";
    case Metric::histogram:
        return "histogram";
    case Metric::color_scattering:
        return "color_scattering";
    }
    return "unknown";
}

Metric parse_metric(std::string_view name)
{
    for (Metric m : {Metric::psnr, Metric::mse, Metric::ssim, Metric::histogram, Metric::color_scattering}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

bool lower_is_farther(Metric m)
{
    return m == Metric::psnr || m == Metric::ssim;
}

double psnr_from_mse(double mse_value)
{
    if (mse_value <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 20.0 * std::log10(kPeak) - 10.0 * std::log10(mse_value);
}

double mse(const RasterImage& a, const RasterImage& b)
{
    require_same_shape(a, b, "mse");
    auto da = a.data();
    auto db = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = double(da[i]) - double(db[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(da.size());
}

double psnr(const RasterImage& a, const RasterImage& b)
{
    return psnr_from_mse(mse(a, b));
}

double ssim(const Plane& a, const Plane& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch("ssim: planes differ in size");
    }
    const auto taps_r = gaussian_taps(window_for(a.rows()), kSsimSigma);
    const auto taps_c = gaussian_taps(window_for(a.cols()), kSsimSigma);

    Plane aa(a.rows(), a.cols());
    Plane bb(a.rows(), a.cols());
    Plane ab(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.values()[i];
        const double y = b.values()[i];
        aa.values()[i] = x * x;
        bb.values()[i] = y * y;
        ab.values()[i] = x * y;
    }
    const Plane mu_a = filter_valid(a, taps_r, taps_c);
    const Plane mu_b = filter_valid(b, taps_r, taps_c);
    const Plane e_aa = filter_valid(aa, taps_r, taps_c);
    const Plane e_bb = filter_valid(bb, taps_r, taps_c);
    const Plane e_ab = filter_valid(ab, taps_r, taps_c);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a.values()[i];
        const double mb = mu_b.values()[i];
        const double va = e_aa.values()[i] - ma * ma;
        const double vb = e_bb.values()[i] - mb * mb;
        const double cov = e_ab.values()[i] - ma * mb;
        total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    return total / static_cast<double>(mu_a.size());
}

double ssim(const RasterImage& a, const RasterImage& b)
{
    require_same_shape(a, b, "ssim");
    double total = 0.0;
    for (int ch = 0; ch < a.channels(); ++ch) {
        total += ssim(a.plane(ch), b.plane(ch));
    }
    return total / a.channels();
}

double histogram_distance(const RasterImage& a, const RasterImage& b)
{
    require_same_shape(a, b, "histogram_distance");
    const int channels = a.channels();
    const double n = static_cast<double>(a.height()) * a.width();
    double total = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
        std::array<double, 256> ha{};
        std::array<double, 256> hb{};
        auto da = a.data();
        auto db = b.data();
        for (std::size_t i = static_cast<std::size_t>(ch); i < da.size(); i += static_cast<std::size_t>(channels)) {
            ha[da[i]] += 1.0;
            hb[db[i]] += 1.0;
        }
        for (std::size_t t = 0; t < 256; ++t) {
            total += std::abs(ha[t] - hb[t]) / n;
        }
    }
    return total;
}

std::array<double, 256> color_scattering_profile(const RasterImage& img)
{
    const Plane lum = luminance(img);
    const double cr = (img.height() - 1) / 2.0;
    const double cc = (img.width() - 1) / 2.0;
    std::array<double, 256> sum{};
    std::array<double, 256> count{};
    for (int r = 0; r < lum.rows(); ++r) {
        for (int c = 0; c < lum.cols(); ++c) {
            const std::uint8_t t = quantize(lum(r, c));
            sum[t] += std::hypot(r - cr, c - cc);
            count[t] += 1.0;
        }
    }
    std::array<double, 256> profile{};
    for (std::size_t t = 0; t < 256; ++t) {
        profile[t] = count[t] > 0.0 ? sum[t] / count[t] : 0.0;
    }
    return profile;
}

double color_scattering_distance(const RasterImage& a, const RasterImage& b)
{
    require_same_shape(a, b, "color_scattering_distance");
    const auto pa = color_scattering_profile(a);
    const auto pb = color_scattering_profile(b);
    double acc = 0.0;
    for (std::size_t t = 0; t < 256; ++t) {
        acc += (pa[t] - pb[t]) * (pa[t] - pb[t]);
    }
    return std::sqrt(acc);
}

double image_distance(const RasterImage& a, const RasterImage& b, Metric metric)
{
    switch (metric) {
    case Metric::psnr:
        return psnr(a, b);
    case Metric::mse:
        return mse(a, b);
    case Metric::ssim:
        return ssim(a, b);
    case Metric::histogram:
        return histogram_distance(a, b);
    case Metric::color_scattering:
        return color_scattering_distance(a, b);
    }
    throw InvalidArgument("unknown metric");
}

} // namespace scaleguard
