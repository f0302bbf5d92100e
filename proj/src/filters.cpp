#include "scaleguard/filters.hpp"

#include "scaleguard/errors.hpp"
#include "scaleguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace scaleguard {

namespace {

int reflect101(int i, int len)
{
    if (len == 1) {
        return 0;
    }
    while (i < 0 || i >= len) {
        i = i < 0 ? -i : 2 * (len - 1) - i;
    }
    return i;
}

double median_of(std::vector<double>& v)
{
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

} // namespace

std::string_view to_string(PreventionKind kind)
{
    return kind == PreventionKind::median ? "median" : "random";
}

Window default_prevention_window(const ScaleSpec& spec)
{
    return {2 * static_cast<int>(std::ceil(spec.ratio_rows())) + 1,
            2 * static_cast<int>(std::ceil(spec.ratio_cols())) + 1};
}

RasterImage prevention_filter(const RasterImage& img, const PixelMask& mask, PreventionKind kind, Window window,
                              std::uint64_t seed)
{
    if (window.rows < 3 || window.cols < 3 || window.rows % 2 == 0 || window.cols % 2 == 0) {
        throw InvalidArgument("prevention window must be odd and at least 3");
    }
    if (mask.rows() != img.height() || mask.cols() != img.width()) {
        throw DimensionMismatch("mask does not match image dimensions");
    }
    const int height = img.height();
    const int width = img.width();
    const int channels = img.channels();
    const int cap = std::min(height, width);

    RasterImage out = img;
    Rng rng(seed);
    std::vector<std::pair<int, int>> clean;
    std::vector<double> values;

    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (!mask(r, c)) {
                continue;
            }
            int wr = window.rows;
            int wc = window.cols;
            for (;;) {
                clean.clear();
                const int r0 = std::max(0, r - wr / 2);
                const int r1 = std::min(height - 1, r + wr / 2);
                const int c0 = std::max(0, c - wc / 2);
                const int c1 = std::min(width - 1, c + wc / 2);
                for (int i = r0; i <= r1; ++i) {
                    for (int j = c0; j <= c1; ++j) {
                        if (!mask(i, j)) {
                            clean.emplace_back(i, j);
                        }
                    }
                }
                if (!clean.empty()) {
                    break;
                }
                if (std::max(wr, wc) >= cap) {
                    throw DegenerateSpec("prevention filter: no unmasked pixel near (" + std::to_string(r) + ", "
                                         + std::to_string(c) + ") within a window of " + std::to_string(cap));
                }
                wr += 2;
                wc += 2;
            }

            if (kind == PreventionKind::random) {
                const auto [i, j] = clean[static_cast<std::size_t>(rng.below(clean.size()))];
                for (int ch = 0; ch < channels; ++ch) {
                    out.at(r, c, ch) = img.at(i, j, ch);
                }
                continue;
            }
            for (int ch = 0; ch < channels; ++ch) {
                values.clear();
                for (const auto& [i, j] : clean) {
                    values.push_back(img.at(i, j, ch));
                }
                out.at(r, c, ch) = quantize(median_of(values));
            }
        }
    }
    return out;
}

std::array<double, 9> gaussian_kernel_3x3()
{
    // sigma for ksize 3 when sigma = 0 is requested: 0.3 * ((k - 1) * 0.5 - 1) + 0.8
    constexpr int k = 3;
    const double sigma = 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8;
    std::array<double, 3> g{};
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = i - 1;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += g[static_cast<std::size_t>(i)];
    }
    std::array<double, 9> kernel{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            kernel[static_cast<std::size_t>(3 * i + j)] =
                g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] / (total * total);
        }
    }
    return kernel;
}

Plane gaussian_smooth(const Plane& p)
{
    if (p.size() == 0) {
        throw InvalidArgument("gaussian_smooth: empty plane");
    }
    const auto kernel = gaussian_kernel_3x3();
    Plane out(p.rows(), p.cols());
    for (int r = 0; r < p.rows(); ++r) {
        for (int c = 0; c < p.cols(); ++c) {
            double acc = 0.0;
            for (int i = -1; i <= 1; ++i) {
                const int rr = reflect101(r + i, p.rows());
                for (int j = -1; j <= 1; ++j) {
                    acc += kernel[static_cast<std::size_t>(3 * (i + 1) + j + 1)] * p(rr, reflect101(c + j, p.cols()));
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

RasterImage gaussian_smooth(const RasterImage& img)
{
    RasterImage out(img.height(), img.width(), img.channels());
    for (int ch = 0; ch < img.channels(); ++ch) {
        out.store(ch, gaussian_smooth(img.plane(ch)));
    }
    return out;
}

RasterImage rank_filter_3x3(const RasterImage& img, RankMode mode)
{
    RasterImage out(img.height(), img.width(), img.channels());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            for (int ch = 0; ch < img.channels(); ++ch) {
                std::uint8_t best = img.at(r, c, ch);
                for (int i = std::max(0, r - 1); i <= std::min(img.height() - 1, r + 1); ++i) {
                    for (int j = std::max(0, c - 1); j <= std::min(img.width() - 1, c + 1); ++j) {
                        const std::uint8_t v = img.at(i, j, ch);
                        best = mode == RankMode::min ? std::min(best, v) : std::max(best, v);
                    }
                }
                out.at(r, c, ch) = best;
            }
        }
    }
    return out;
}

} // namespace scaleguard
