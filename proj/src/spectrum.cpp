#include "scaleguard/spectrum.hpp"

#include "scaleguard/codec.hpp"
#include "scaleguard/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>

namespace scaleguard {

namespace {

// Plan creation and destruction in FFTW are not thread-safe; execution is.
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

void transform(ComplexGrid& g, int sign)
{
    auto* data = reinterpret_cast<fftw_complex*>(g.values.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_2d(g.rows, g.cols, data, data, sign, FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        throw Error("fftw could not plan a " + std::to_string(g.rows) + "x" + std::to_string(g.cols) + " transform");
    }
    fftw_execute(plan);
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(plan);
}

} // namespace

ComplexGrid dft2(const Plane& p)
{
    if (p.rows() <= 0 || p.cols() <= 0) {
        throw InvalidArgument("dft2 needs a non-empty plane");
    }
    ComplexGrid g{p.rows(), p.cols(), std::vector<std::complex<double>>(p.size())};
    auto src = p.values();
    std::copy(src.begin(), src.end(), g.values.begin());
    transform(g, FFTW_FORWARD);
    return g;
}

Plane idft2_real(const ComplexGrid& g)
{
    ComplexGrid work = g;
    transform(work, FFTW_BACKWARD);
    Plane out(g.rows, g.cols);
    const double norm = 1.0 / (static_cast<double>(g.rows) * g.cols);
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = work.values[i].real() * norm;
    }
    return out;
}

Spectrum centred_log_magnitude(const ComplexGrid& g)
{
    Plane out(g.rows, g.cols);
    for (int u = 0; u < g.rows; ++u) {
        const int uu = uncentred_index(u, g.rows);
        for (int v = 0; v < g.cols; ++v) {
            out(u, v) = std::log1p(std::abs(g(uu, uncentred_index(v, g.cols))));
        }
    }
    return Spectrum(std::move(out));
}

Spectrum log_magnitude_spectrum(const Plane& p) { return centred_log_magnitude(dft2(p)); }

Spectrum log_magnitude_spectrum(const RasterImage& img) { return log_magnitude_spectrum(luminance(img)); }

void write_spectrum_png16(const std::filesystem::path& path, const Spectrum& s)
{
    auto vals = s.values().values();
    const double peak = vals.empty() ? 0.0 : *std::max_element(vals.begin(), vals.end());
    std::vector<std::uint16_t> out(vals.size(), 0);
    if (peak > 0.0) {
        for (std::size_t i = 0; i < vals.size(); ++i) {
            out[i] = static_cast<std::uint16_t>(std::lround(65535.0 * vals[i] / peak));
        }
    }
    write_png16(path, s.rows(), s.cols(), out);
}

void write_spectrum_pfm(const std::filesystem::path& path, const Spectrum& s)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f << "Pf\n" << s.cols() << ' ' << s.rows() << "\n-1.0\n";
    for (int u = s.rows() - 1; u >= 0; --u) {
        for (int v = 0; v < s.cols(); ++v) {
            auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(s(u, v)));
            if constexpr (std::endian::native == std::endian::big) {
                bits = __builtin_bswap32(bits);
            }
            f.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    if (!f) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace scaleguard
