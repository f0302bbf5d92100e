#include "scaleguard/adaptive.hpp"

#include "scaleguard/codec.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/freq_detect.hpp"
#include "scaleguard/metrics.hpp"
#include "scaleguard/serialization.hpp"
#include "scaleguard/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace scaleguard {

namespace {

using Bin = std::pair<int, int>; // uncentred (row, col)

void require_source(const RasterImage& a, const ScaleSpec& spec)
{
    if (a.size() != spec.src) {
        throw DimensionMismatch("adaptive input does not match the ScaleSpec's source dimensions");
    }
}

// Adds the Hermitian partner of every bin so that edits keep the signal real.
std::set<Bin> with_partners(const std::set<Bin>& bins, int m, int n)
{
    std::set<Bin> out = bins;
    for (const auto& [u, v] : bins) {
        out.emplace((m - u) % m, (n - v) % n);
    }
    return out;
}

Bin uncentred(int u, int v, int m, int n) { return {uncentred_index(u, m), uncentred_index(v, n)}; }

template <typename Edit>
RasterImage edit_spectrum(const RasterImage& a, Edit edit)
{
    std::vector<Plane> planes = a.planes();
    for (Plane& p : planes) {
        ComplexGrid g = dft2(p);
        edit(g);
        p = idft2_real(g);
    }
    return RasterImage::from_planes(planes);
}

} // namespace

RasterImage suppress_peaks(const RasterImage& a, const ScaleSpec& spec, int window_half, double factor)
{
    require_source(a, spec);
    if (!(factor >= 0.0 && factor <= 1.0)) {
        throw InvalidArgument("suppression factor must lie in [0, 1]");
    }
    const PeakMap map = expected_peaks(spec, window_half);
    const int m = spec.src.rows;
    const int n = spec.src.cols;
    const Bin dc{0, 0};

    std::set<Bin> bins;
    for (const ExpectedPeak& p : map.peaks) {
        for (int u = std::max(p.row - window_half, 0); u <= std::min(p.row + window_half, m - 1); ++u) {
            for (int v = std::max(p.col - window_half, 0); v <= std::min(p.col + window_half, n - 1); ++v) {
                bins.insert(uncentred(u, v, m, n));
            }
        }
    }
    // The DC window itself stays untouched.
    const int cm = spectrum_centre(m);
    const int cn = spectrum_centre(n);
    for (int u = std::max(cm - window_half, 0); u <= std::min(cm + window_half, m - 1); ++u) {
        for (int v = std::max(cn - window_half, 0); v <= std::min(cn + window_half, n - 1); ++v) {
            bins.erase(uncentred(u, v, m, n));
        }
    }
    bins = with_partners(bins, m, n);
    bins.erase(dc);

    return edit_spectrum(a, [&](ComplexGrid& g) {
        for (const auto& [u, v] : bins) {
            g(u, v) *= factor;
        }
    });
}

RasterImage add_peaks(const RasterImage& a, const ScaleSpec& spec, double r)
{
    require_source(a, spec);
    if (!(r > 0.0)) {
        throw InvalidArgument("peak factor r must be positive");
    }
    const PeakMap map = expected_peaks(spec);
    const int m = spec.src.rows;
    const int n = spec.src.cols;

    std::set<Bin> bins;
    for (const ExpectedPeak& p : map.peaks) {
        const Rect& e = p.excerpt;
        for (int u : {e.top, e.bottom - 1}) {
            for (int v : {e.left, e.right - 1}) {
                bins.insert(uncentred(u, v, m, n));
            }
        }
    }
    bins = with_partners(bins, m, n);
    bins.erase({0, 0});

    return edit_spectrum(a, [&](ComplexGrid& g) {
        double peak = 0.0;
        for (const auto& c : g.values) {
            peak = std::max(peak, std::abs(c));
        }
        if (std::isinf(r)) {
            return;
        }
        for (const auto& [u, v] : bins) {
            g(u, v) = {peak / r, 0.0};
        }
    });
}

RasterImage jpeg_adaptive(const RasterImage& a, int quality)
{
    if (quality < 1 || quality > 100) {
        throw InvalidArgument("JPEG quality must lie in 1..100");
    }
    return jpeg_roundtrip(a, quality);
}

std::string_view to_string(AdaptiveKind k)
{
    switch (k) {
    case AdaptiveKind::suppress:
        return "suppress";
    case AdaptiveKind::add_peaks:
        return "add_peaks";
    case AdaptiveKind::jpeg:
        return "jpeg";
    }
    return "unknown";
}

AdaptiveKind parse_adaptive(std::string_view name)
{
    for (AdaptiveKind k : {AdaptiveKind::suppress, AdaptiveKind::add_peaks, AdaptiveKind::jpeg}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidArgument("unknown adaptive attack '" + std::string(name) + "'");
}

AdaptiveRecord run_adaptive(const AttackRecord& rec, const ScaleSpec& spec, AdaptiveKind kind, double parameter,
                            int window_half)
{
    AdaptiveRecord out;
    out.kind = kind;
    out.parameter = parameter;
    switch (kind) {
    case AdaptiveKind::suppress:
        out.image = suppress_peaks(rec.attack, spec, window_half, parameter);
        break;
    case AdaptiveKind::add_peaks:
        out.image = add_peaks(rec.attack, spec, parameter);
        break;
    case AdaptiveKind::jpeg:
        out.image = jpeg_adaptive(rec.attack, static_cast<int>(std::lround(parameter)));
        break;
    }
    out.goal_o1_db = psnr(scale(out.image, spec), rec.target);
    out.goal_o2_db = psnr(out.image, rec.source);
    out.psnr_to_attack = psnr(out.image, rec.attack);
    return out;
}

void save_adaptive_record(const std::filesystem::path& dir, const AdaptiveRecord& rec)
{
    std::filesystem::create_directories(dir);
    write_png_if_changed(dir / "A~.png", rec.image);
    const Json meta = {{"kind", std::string(to_string(rec.kind))},
                       {"parameter", real_to_json(rec.parameter)},
                       {"o1_proxy_psnr_to_target_db", real_to_json(rec.goal_o1_db)},
                       {"o2_psnr_to_source_db", real_to_json(rec.goal_o2_db)},
                       {"psnr_to_attack_db", real_to_json(rec.psnr_to_attack)}};
    write_json(dir / "adaptive-meta.json", meta);
}

} // namespace scaleguard
