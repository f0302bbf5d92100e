#pragma once

#include "scaleguard/image.hpp"

#include <complex>
#include <filesystem>
#include <vector>

namespace scaleguard {

/// Uncentred 2D DFT coefficients, row-major, DC at (0, 0).
struct ComplexGrid {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> values;

    std::complex<double>& operator()(int u, int v) { return values[static_cast<std::size_t>(u) * cols + v]; }
    std::complex<double> operator()(int u, int v) const { return values[static_cast<std::size_t>(u) * cols + v]; }
};

/// Unnormalized forward transform.
ComplexGrid dft2(const Plane& p);
/// Inverse transform scaled by 1 / (rows * cols); the imaginary part is dropped.
Plane idft2_real(const ComplexGrid& g);

/// Centre of a spectrum of the given extent: (floor(m / 2), floor(n / 2)).
inline int spectrum_centre(int len) { return len / 2; }

/// Index into the uncentred grid for centred coordinate `k` on an axis of length `len`.
inline int uncentred_index(int k, int len) { return ((k - spectrum_centre(len)) % len + len) % len; }

/// Centred log(1 + |F|) of the luminance channel.
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(Plane values) : values_(std::move(values)) {}

    int rows() const { return values_.rows(); }
    int cols() const { return values_.cols(); }
    int centre_row() const { return spectrum_centre(rows()); }
    int centre_col() const { return spectrum_centre(cols()); }
    double operator()(int u, int v) const { return values_(u, v); }
    double& operator()(int u, int v) { return values_(u, v); }
    const Plane& values() const { return values_; }

private:
    Plane values_;
};

Spectrum centred_log_magnitude(const ComplexGrid& g);
Spectrum log_magnitude_spectrum(const Plane& p);
Spectrum log_magnitude_spectrum(const RasterImage& img);

/// 16-bit grayscale PNG normalized to the spectrum maximum.
void write_spectrum_png16(const std::filesystem::path& path, const Spectrum& s);
/// Little-endian Portable Float Map (bottom row first, as the format requires).
void write_spectrum_pfm(const std::filesystem::path& path, const Spectrum& s);

} // namespace scaleguard
