#pragma once

#include "scaleguard/image.hpp"
#include "scaleguard/scaling.hpp"
#include "scaleguard/spectrum.hpp"

#include <vector>

namespace scaleguard {

struct ExpectedPeak {
    int k1 = 0;
    int k2 = 0;
    int row = 0;
    int col = 0;
    Rect excerpt; // m' x n' cell centred on the peak, clipped to the spectrum
};

/// Lattice of spectral peaks a downscale by `spec` leaves behind in an
/// attack image: (c_m + k1 m', c_n + k2 n') with |k| <= beta / 2.
struct PeakMap {
    Size2 spectrum;
    Size2 cell;
    int window_half = 5;
    ExpectedPeak centre;
    std::vector<ExpectedPeak> peaks; // in-bounds, centre excluded
};

PeakMap expected_peaks(const ScaleSpec& spec, int window_half = 5);

/// Fraction of spectrum coefficients strictly below the mean over the
/// (2w+1)^2 windows around every non-centre peak. Higher is more attack-like.
/// Throws DegenerateSpec when the map has no non-centre peak.
double peak_spectrum_score(const Spectrum& s, const PeakMap& map);
double peak_spectrum_score(const RasterImage& img, const ScaleSpec& spec, int window_half = 5);

/// Mean distance, in bins, between each excerpt's maximum and its expected
/// peak. Lower is more attack-like.
double peak_distance_score(const Spectrum& s, const PeakMap& map);
double peak_distance_score(const RasterImage& img, const ScaleSpec& spec);

struct CspOptions {
    double sigma_factor = 4.0;
    int dc_guard_half = 5;
};

/// Number of 8-connected components above mean + k * std, after zeroing a
/// guard window around DC.
int csp_peak_count(const Spectrum& s, const CspOptions& opts = {});
int csp_peak_count(const RasterImage& img, const CspOptions& opts = {});

/// The fixed rule flags any spectrum with more than one peak.
inline bool csp_fixed_flag(int peak_count) { return peak_count > 1; }

} // namespace scaleguard
