#pragma once

#include "scaleguard/calibrate.hpp"
#include "scaleguard/image.hpp"
#include "scaleguard/scaling.hpp"
#include "scaleguard/serialization.hpp"
#include "scaleguard/spatial_detect.hpp"
#include "scaleguard/spectrum.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scaleguard {

using Params = std::map<std::string, double>;

enum class Paradigm { frequency, spatial };

struct DetectorInfo {
    std::string id;
    Paradigm paradigm = Paradigm::frequency;
    Direction direction = Direction::high_is_attack;
    Params defaults;
    std::vector<Params> grid; // always contains `defaults`
    /// Set for detectors with a built-in decision rule instead of a calibrated one.
    std::optional<double> fixed_threshold;
};

const std::vector<DetectorInfo>& detector_catalog();

/// Throws InvalidArgument for unknown ids.
const DetectorInfo& detector_info(std::string_view id);

/// False when the detector has nothing to measure for this spec, e.g. the
/// clean filters on a dense mask or the frequency detectors without peaks.
bool detector_applicable(const DetectorInfo& d, const ScaleSpec& spec);

/// Lazily computed per-image intermediates shared by several detectors.
class ImageAnalysis {
public:
    ImageAnalysis(const RasterImage& img, const ScaleSpec& spec) : img_(img), spec_(spec) {}

    const RasterImage& image() const { return img_; }
    const ScaleSpec& spec() const { return spec_; }
    const Spectrum& spectrum();
    const PixelMask& mask();
    /// Prevention-filtered copy; the random kind is cached per seed.
    const RasterImage& cleaned(PreventionKind kind, std::uint64_t seed);

private:
    const RasterImage& img_;
    ScaleSpec spec_;
    std::optional<Spectrum> spectrum_;
    std::optional<PixelMask> mask_;
    std::optional<RasterImage> median_;
    std::map<std::uint64_t, RasterImage> random_;
};

double detector_score(const DetectorInfo& d, ImageAnalysis& img, const Params& params, std::uint64_t seed = 0,
                      PatchDiagnostics* diag = nullptr);

Json to_json(const Params& p);
Params params_from_json(const Json& j);

} // namespace scaleguard
