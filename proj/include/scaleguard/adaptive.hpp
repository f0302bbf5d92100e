#pragma once

#include "scaleguard/attack.hpp"
#include "scaleguard/image.hpp"
#include "scaleguard/scaling.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace scaleguard {

/// Multiplies, per channel, every DFT coefficient inside the peak-spectrum
/// windows (the DC window excluded) by `factor`, keeping Hermitian symmetry.
RasterImage suppress_peaks(const RasterImage& a, const ScaleSpec& spec, int window_half, double factor);

/// Per channel, sets every excerpt corner (DC excluded) to a real coefficient
/// of magnitude max|F| / r together with its Hermitian partner.
/// Throws InvalidArgument unless r > 0.
RasterImage add_peaks(const RasterImage& a, const ScaleSpec& spec, double r);

RasterImage jpeg_adaptive(const RasterImage& a, int quality);

enum class AdaptiveKind { suppress, add_peaks, jpeg };

std::string_view to_string(AdaptiveKind k);
AdaptiveKind parse_adaptive(std::string_view name);

struct AdaptiveRecord {
    AdaptiveKind kind = AdaptiveKind::suppress;
    double parameter = 0.0;
    RasterImage image;
    double goal_o1_db = 0.0;    // PSNR(scale(A~), T), a proxy for the victim model's view
    double goal_o2_db = 0.0;    // PSNR(A~, S)
    double psnr_to_attack = 0.0; // PSNR(A~, A)
};

AdaptiveRecord run_adaptive(const AttackRecord& rec, const ScaleSpec& spec, AdaptiveKind kind, double parameter,
                            int window_half = 5);

/// Writes A~.png and adaptive-meta.json next to an attack record.
void save_adaptive_record(const std::filesystem::path& dir, const AdaptiveRecord& rec);

} // namespace scaleguard
