#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sgtest {

using namespace scaleguard;

double reference_kernel(Algorithm alg, double d)
{
    const double x = std::abs(d);
    switch (alg) {
    case Algorithm::nearest:
        return 0.0; // handled by rounding in reference_scale
    case Algorithm::bilinear:
        return x < 1.0 ? 1.0 - x : 0.0;
    case Algorithm::bicubic: {
        // Keys cubic convolution, a = -0.5, written out in expanded form.
        if (x < 1.0) {
            return 1.5 * x * x * x - 2.5 * x * x + 1.0;
        }
        if (x < 2.0) {
            return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
        }
        return 0.0;
    }
    }
    return 0.0;
}

RasterImage reference_scale(const RasterImage& img, const ScaleSpec& spec)
{
    const int m = spec.src.rows;
    const int n = spec.src.cols;
    const int mp = spec.dst.rows;
    const int np = spec.dst.cols;
    RasterImage out(mp, np, img.channels());
    auto pixel = [&](int r, int c, int ch) {
        return static_cast<double>(img.at(std::clamp(r, 0, m - 1), std::clamp(c, 0, n - 1), ch));
    };
    for (int k = 0; k < mp; ++k) {
        const double y = (k + 0.5) * m / mp - 0.5;
        for (int l = 0; l < np; ++l) {
            const double x = (l + 0.5) * n / np - 0.5;
            for (int ch = 0; ch < img.channels(); ++ch) {
                double v = 0.0;
                if (spec.algorithm == Algorithm::nearest) {
                    v = pixel(static_cast<int>(std::lround(y)), static_cast<int>(std::lround(x)), ch);
                } else {
                    const int reach = spec.algorithm == Algorithm::bilinear ? 1 : 2;
                    double wsum = 0.0;
                    for (int i = static_cast<int>(std::floor(y)) - reach; i <= static_cast<int>(std::floor(y)) + reach;
                         ++i) {
                        const double wi = reference_kernel(spec.algorithm, y - i);
                        for (int j = static_cast<int>(std::floor(x)) - reach;
                             j <= static_cast<int>(std::floor(x)) + reach; ++j) {
                            const double w = wi * reference_kernel(spec.algorithm, x - j);
                            v += w * pixel(i, j, ch);
                            wsum += w;
                        }
                    }
                    v /= wsum;
                }
                out.at(k, l, ch) = quantize(v);
            }
        }
    }
    return out;
}

RasterImage random_image(Rng& rng, int height, int width, int channels)
{
    RasterImage img(height, width, channels);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(rng.below(256));
    }
    return img;
}

RasterImage textured_image(Rng& rng, int height, int width, int channels)
{
    RasterImage img(height, width, channels);
    struct Wave {
        double fy, fx, phase, amp;
    };
    std::vector<Wave> waves;
    for (int w = 0; w < 4; ++w) {
        waves.push_back({rng.uniform(0.0, 0.05), rng.uniform(0.0, 0.05), rng.uniform(0.0, 2.0 * std::numbers::pi),
                         rng.uniform(10.0, 30.0)});
    }
    for (int ch = 0; ch < channels; ++ch) {
        const double base = rng.uniform(90.0, 160.0);
        for (int i = 0; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                double v = base + 2.0 * rng.normal();
                for (const Wave& w : waves) {
                    v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fy * i + w.fx * j) + w.phase + ch);
                }
                img.at(i, j, ch) = quantize(v);
            }
        }
    }
    return img;
}

ScaleSpec random_spec(Rng& rng, Algorithm alg, int max_side)
{
    ScaleSpec spec;
    spec.algorithm = alg;
    spec.src = {rng.between(2, max_side), rng.between(2, max_side)};
    spec.dst = {rng.between(1, spec.src.rows), rng.between(1, spec.src.cols)};
    return spec;
}

} // namespace sgtest
