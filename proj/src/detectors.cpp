#include "scaleguard/detectors.hpp"

#include "scaleguard/errors.hpp"
#include "scaleguard/freq_detect.hpp"
#include "scaleguard/metrics.hpp"

#include <cmath>

namespace scaleguard {

namespace {

DetectorInfo make(std::string id, Paradigm paradigm, Direction dir, Params defaults, std::vector<Params> extra = {})
{
    DetectorInfo d{std::move(id), paradigm, dir, defaults, {defaults}, std::nullopt};
    for (Params& p : extra) {
        if (p != defaults) {
            d.grid.push_back(std::move(p));
        }
    }
    return d;
}

std::vector<DetectorInfo> build_catalog()
{
    using enum Direction;
    std::vector<DetectorInfo> c;
    {
        std::vector<Params> grid;
        for (double w : {1.0, 3.0, 5.0, 7.0, 9.0}) {
            grid.push_back({{"w", w}});
        }
        c.push_back(make("peak_spectrum", Paradigm::frequency, high_is_attack, {{"w", 5.0}}, grid));
    }
    c.push_back(make("peak_distance", Paradigm::frequency, low_is_attack, {}));
    {
        DetectorInfo csp = make("csp", Paradigm::frequency, high_is_attack, {{"sigma", 4.0}, {"guard", 5.0}});
        csp.fixed_threshold = 1.0;
        c.push_back(std::move(csp));
    }
    {
        std::vector<Params> grid;
        for (double s : {3.0, 4.0, 5.0, 6.0}) {
            grid.push_back({{"sigma", s}, {"guard", 5.0}});
        }
        c.push_back(make("csp_improved", Paradigm::frequency, high_is_attack, {{"sigma", 4.0}, {"guard", 5.0}}, grid));
    }
    for (Metric m : {Metric::psnr, Metric::mse, Metric::ssim, Metric::histogram, Metric::color_scattering}) {
        c.push_back(make("down_up_" + std::string(to_string(m)), Paradigm::spatial,
                         lower_is_farther(m) ? low_is_attack : high_is_attack, {}));
    }
    for (const char* mode : {"min", "max"}) {
        for (Metric m : {Metric::mse, Metric::ssim}) {
            c.push_back(make(std::string(mode) + "_filter_" + std::string(to_string(m)), Paradigm::spatial,
                             lower_is_farther(m) ? low_is_attack : high_is_attack, {}));
        }
    }
    for (const char* kind : {"median", "random"}) {
        for (Metric m : {Metric::psnr, Metric::ssim}) {
            c.push_back(make("clean_" + std::string(kind) + "_" + std::string(to_string(m)), Paradigm::spatial,
                             low_is_attack, {}));
        }
    }
    c.push_back(make("patch_clean", Paradigm::spatial, high_is_attack, {{"w", 22.0}, {"stride", 11.0}},
                     {{{"w", 16.0}, {"stride", 8.0}}, {{"w", 28.0}, {"stride", 14.0}}}));
    {
        std::vector<Params> grid;
        for (double q : {0.5, 0.6, 0.75, 0.9}) {
            grid.push_back({{"w", 11.0}, {"stride", 11.0}, {"q", q}});
        }
        c.push_back(make("targeted_patch_clean", Paradigm::spatial, high_is_attack,
                         {{"w", 11.0}, {"stride", 11.0}, {"q", 0.6}}, grid));
    }
    return c;
}

double param(const Params& p, const char* key)
{
    const auto it = p.find(key);
    if (it == p.end()) {
        throw InvalidArgument(std::string("missing detector parameter '") + key + "'");
    }
    return it->second;
}

int int_param(const Params& p, const char* key) { return static_cast<int>(std::lround(param(p, key))); }

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool mask_is_sparse(const ScaleSpec& spec)
{
    const PixelMask mask = scaling_pixel_mask(spec);
    return mask.count() < static_cast<std::size_t>(mask.rows()) * mask.cols();
}

} // namespace

const std::vector<DetectorInfo>& detector_catalog()
{
    static const std::vector<DetectorInfo> catalog = build_catalog();
    return catalog;
}

const DetectorInfo& detector_info(std::string_view id)
{
    for (const DetectorInfo& d : detector_catalog()) {
        if (d.id == id) {
            return d;
        }
    }
    throw InvalidArgument("unknown detector '" + std::string(id) + "'");
}

bool detector_applicable(const DetectorInfo& d, const ScaleSpec& spec)
{
    if (!spec.is_attackable()) {
        return false;
    }
    if (d.id == "peak_spectrum" || d.id == "peak_distance") {
        return !expected_peaks(spec).peaks.empty();
    }
    if (starts_with(d.id, "clean_") || starts_with(d.id, "patch_clean") || starts_with(d.id, "targeted_")) {
        return mask_is_sparse(spec);
    }
    return true;
}

const Spectrum& ImageAnalysis::spectrum()
{
    if (!spectrum_) {
        spectrum_ = log_magnitude_spectrum(img_);
    }
    return *spectrum_;
}

const PixelMask& ImageAnalysis::mask()
{
    if (!mask_) {
        mask_ = scaling_pixel_mask(spec_);
    }
    return *mask_;
}

const RasterImage& ImageAnalysis::cleaned(PreventionKind kind, std::uint64_t seed)
{
    if (kind == PreventionKind::median) {
        if (!median_) {
            median_ = clean_image(img_, spec_, kind, 0);
        }
        return *median_;
    }
    auto it = random_.find(seed);
    if (it == random_.end()) {
        it = random_.emplace(seed, clean_image(img_, spec_, kind, seed)).first;
    }
    return it->second;
}

double detector_score(const DetectorInfo& d, ImageAnalysis& a, const Params& p, std::uint64_t seed,
                      PatchDiagnostics* diag)
{
    const std::string_view id = d.id;
    const RasterImage& img = a.image();
    const ScaleSpec& spec = a.spec();
    if (id == "peak_spectrum") {
        return peak_spectrum_score(a.spectrum(), expected_peaks(spec, int_param(p, "w")));
    }
    if (id == "peak_distance") {
        return peak_distance_score(a.spectrum(), expected_peaks(spec));
    }
    if (id == "csp" || id == "csp_improved") {
        return csp_peak_count(a.spectrum(), {param(p, "sigma"), int_param(p, "guard")});
    }
    if (starts_with(id, "down_up_")) {
        return down_up_score(img, spec, parse_metric(id.substr(8)));
    }
    if (starts_with(id, "min_filter_")) {
        return minmax_filter_score(img, RankMode::min, parse_metric(id.substr(11)));
    }
    if (starts_with(id, "max_filter_")) {
        return minmax_filter_score(img, RankMode::max, parse_metric(id.substr(11)));
    }
    if (starts_with(id, "clean_median_") || starts_with(id, "clean_random_")) {
        if (img.size() != spec.src) {
            throw DimensionMismatch("image does not match the ScaleSpec's source dimensions");
        }
        const PreventionKind kind = starts_with(id, "clean_median_") ? PreventionKind::median : PreventionKind::random;
        return image_distance(img, a.cleaned(kind, seed), parse_metric(id.substr(13)));
    }
    if (id == "patch_clean") {
        return patch_clean_score(img, a.cleaned(PreventionKind::median, 0), spec, int_param(p, "w"),
                                 int_param(p, "stride"), diag);
    }
    if (id == "targeted_patch_clean") {
        return targeted_patch_clean_score(img, a.cleaned(PreventionKind::median, 0), a.mask(), int_param(p, "w"),
                                          int_param(p, "stride"), param(p, "q"), diag);
    }
    throw InvalidArgument("unknown detector '" + d.id + "'");
}

Json to_json(const Params& p)
{
    Json j = Json::object();
    for (const auto& [k, v] : p) {
        j[k] = v;
    }
    return j;
}

Params params_from_json(const Json& j)
{
    Params p;
    for (const auto& [k, v] : j.items()) {
        p[k] = v.get<double>();
    }
    return p;
}

} // namespace scaleguard
