#include "scaleguard/freq_detect.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace scaleguard {

namespace {

Rect cell_around(int row, int col, Size2 cell, Size2 bounds)
{
    const int top = row - cell.rows / 2;
    const int left = col - cell.cols / 2;
    return {std::max(top, 0), std::max(left, 0), std::min(top + cell.rows, bounds.rows),
            std::min(left + cell.cols, bounds.cols)};
}

// Largest integer k with k <= ratio / 2.
int lattice_reach(int src, int dst) { return static_cast<int>(std::floor(0.5 * src / dst + 1e-12)); }

void require_peaks(const PeakMap& map)
{
    if (map.peaks.empty()) {
        throw DegenerateSpec("the scaling spec leaves no expected peak besides the centre");
    }
}

void require_fit(const Spectrum& s, const PeakMap& map)
{
    if (s.rows() != map.spectrum.rows || s.cols() != map.spectrum.cols) {
        throw DimensionMismatch("spectrum does not match the peak map dimensions");
    }
}

} // namespace

PeakMap expected_peaks(const ScaleSpec& spec, int window_half)
{
    validate_downscale(spec);
    if (window_half < 0) {
        throw InvalidArgument("window half-length must be non-negative");
    }
    PeakMap map;
    map.spectrum = spec.src;
    map.cell = spec.dst;
    map.window_half = window_half;
    const int cm = spectrum_centre(spec.src.rows);
    const int cn = spectrum_centre(spec.src.cols);
    const int reach_r = lattice_reach(spec.src.rows, spec.dst.rows);
    const int reach_c = lattice_reach(spec.src.cols, spec.dst.cols);
    map.centre = {0, 0, cm, cn, cell_around(cm, cn, spec.dst, spec.src)};
    for (int k1 = -reach_r; k1 <= reach_r; ++k1) {
        const int row = cm + k1 * spec.dst.rows;
        if (row < 0 || row >= spec.src.rows) {
            continue;
        }
        for (int k2 = -reach_c; k2 <= reach_c; ++k2) {
            const int col = cn + k2 * spec.dst.cols;
            if (col < 0 || col >= spec.src.cols || (k1 == 0 && k2 == 0)) {
                continue;
            }
            map.peaks.push_back({k1, k2, row, col, cell_around(row, col, spec.dst, spec.src)});
        }
    }
    return map;
}

double peak_spectrum_score(const Spectrum& s, const PeakMap& map)
{
    require_peaks(map);
    require_fit(s, map);
    const int w = map.window_half;
    std::vector<std::uint8_t> in_window(static_cast<std::size_t>(s.rows()) * s.cols(), 0);
    for (const ExpectedPeak& p : map.peaks) {
        for (int u = std::max(p.row - w, 0); u <= std::min(p.row + w, s.rows() - 1); ++u) {
            for (int v = std::max(p.col - w, 0); v <= std::min(p.col + w, s.cols() - 1); ++v) {
                in_window[static_cast<std::size_t>(u) * s.cols() + v] = 1;
            }
        }
    }
    auto vals = s.values().values();
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (in_window[i] != 0) {
            sum += vals[i];
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const auto below = std::count_if(vals.begin(), vals.end(), [mean](double x) { return x < mean; });
    return static_cast<double>(below) / static_cast<double>(vals.size());
}

double peak_spectrum_score(const RasterImage& img, const ScaleSpec& spec, int window_half)
{
    return peak_spectrum_score(log_magnitude_spectrum(img), expected_peaks(spec, window_half));
}

double peak_distance_score(const Spectrum& s, const PeakMap& map)
{
    require_peaks(map);
    require_fit(s, map);
    double total = 0.0;
    for (const ExpectedPeak& p : map.peaks) {
        const Rect& e = p.excerpt;
        int best_u = e.top;
        int best_v = e.left;
        double best = s(best_u, best_v);
        for (int u = e.top; u < e.bottom; ++u) {
            for (int v = e.left; v < e.right; ++v) {
                if (s(u, v) > best) {
                    best = s(u, v);
                    best_u = u;
                    best_v = v;
                }
            }
        }
        total += std::hypot(best_u - p.row, best_v - p.col);
    }
    return total / static_cast<double>(map.peaks.size());
}

double peak_distance_score(const RasterImage& img, const ScaleSpec& spec)
{
    return peak_distance_score(log_magnitude_spectrum(img), expected_peaks(spec));
}

int csp_peak_count(const Spectrum& s, const CspOptions& opts)
{
    const int m = s.rows();
    const int n = s.cols();
    Plane work = s.values();
    const int g = opts.dc_guard_half;
    for (int u = std::max(s.centre_row() - g, 0); u <= std::min(s.centre_row() + g, m - 1); ++u) {
        for (int v = std::max(s.centre_col() - g, 0); v <= std::min(s.centre_col() + g, n - 1); ++v) {
            work(u, v) = 0.0;
        }
    }
    auto vals = work.values();
    double mean = 0.0;
    for (double x : vals) {
        mean += x;
    }
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double x : vals) {
        var += (x - mean) * (x - mean);
    }
    const double threshold = mean + opts.sigma_factor * std::sqrt(var / static_cast<double>(vals.size()));

    std::vector<std::uint8_t> seen(vals.size(), 0);
    std::vector<std::pair<int, int>> stack;
    int count = 0;
    for (int u = 0; u < m; ++u) {
        for (int v = 0; v < n; ++v) {
            const std::size_t idx = static_cast<std::size_t>(u) * n + v;
            if (seen[idx] != 0 || !(work(u, v) > threshold)) {
                continue;
            }
            ++count;
            seen[idx] = 1;
            stack.assign(1, {u, v});
            while (!stack.empty()) {
                const auto [cu, cv] = stack.back();
                stack.pop_back();
                for (int du = -1; du <= 1; ++du) {
                    for (int dv = -1; dv <= 1; ++dv) {
                        const int nu = cu + du;
                        const int nv = cv + dv;
                        if (nu < 0 || nu >= m || nv < 0 || nv >= n) {
                            continue;
                        }
                        const std::size_t nidx = static_cast<std::size_t>(nu) * n + nv;
                        if (seen[nidx] == 0 && work(nu, nv) > threshold) {
                            seen[nidx] = 1;
                            stack.emplace_back(nu, nv);
                        }
                    }
                }
            }
        }
    }
    return count;
}

int csp_peak_count(const RasterImage& img, const CspOptions& opts)
{
    return csp_peak_count(log_magnitude_spectrum(img), opts);
}

} // namespace scaleguard
