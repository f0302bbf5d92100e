#include "scaleguard/corpus.hpp"

#include "scaleguard/codec.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/filters.hpp"
#include "scaleguard/rng.hpp"
#include "scaleguard/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace scaleguard {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Signed frequency of DFT index k on an axis of length len, in cycles per sample.
double signed_freq(int k, int len) { return (k <= len / 2 ? k : k - len) / static_cast<double>(len); }

// Gaussian noise whose power spectrum falls off as 1 / f^exponent.
Plane power_law_noise(int rows, int cols, double exponent, Rng& rng)
{
    Plane white(rows, cols);
    for (double& v : white.values()) {
        v = rng.normal();
    }
    ComplexGrid g = dft2(white);
    const double floor_f = 0.5 / std::max(rows, cols);
    for (int u = 0; u < rows; ++u) {
        const double fu = signed_freq(u, rows);
        for (int v = 0; v < cols; ++v) {
            const double fv = signed_freq(v, cols);
            const double f = std::max(std::hypot(fu, fv), floor_f);
            g(u, v) *= std::pow(f, -0.5 * exponent);
        }
    }
    g(0, 0) = 0.0;
    return idft2_real(g);
}

void standardize(Plane& p)
{
    auto v = p.values();
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
        var += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    for (double& x : v) {
        x = sd > 0.0 ? (x - mean) / sd : 0.0;
    }
}

void add_scaled(Plane& dst, const Plane& src, double k)
{
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += k * s[i];
    }
}

Plane gradient_field(int rows, int cols, Rng& rng, Json& params)
{
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    const double curvature = rng.uniform(-1.0, 1.0);
    params["angle"] = angle;
    params["curvature"] = curvature;
    Plane p(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const double y = (r + 0.5) / rows - 0.5;
        for (int c = 0; c < cols; ++c) {
            const double x = (c + 0.5) / cols - 0.5;
            const double t = x * std::cos(angle) + y * std::sin(angle);
            p(r, c) = t + curvature * t * t;
        }
    }
    standardize(p);
    Plane texture = power_law_noise(rows, cols, 3.0, rng);
    standardize(texture);
    add_scaled(p, texture, 0.3);
    return p;
}

Plane noise_field(int rows, int cols, Rng& rng, Json& params)
{
    const double exponent = rng.uniform(1.6, 2.6);
    params["exponent"] = exponent;
    return power_law_noise(rows, cols, exponent, rng);
}

Plane shapes_field(int rows, int cols, Rng& rng, Json& params)
{
    Plane p = power_law_noise(rows, cols, 3.0, rng);
    standardize(p);
    const int count = rng.between(6, 18);
    params["shapes"] = count;
    for (int s = 0; s < count; ++s) {
        const bool ellipse = rng.uniform() < 0.5;
        const double cy = rng.uniform(0.0, rows);
        const double cx = rng.uniform(0.0, cols);
        const double hy = rng.uniform(0.04, 0.25) * rows;
        const double hx = rng.uniform(0.04, 0.25) * cols;
        const double level = rng.normal() * 1.5;
        const int r0 = std::max(0, static_cast<int>(cy - hy));
        const int r1 = std::min(rows - 1, static_cast<int>(cy + hy));
        const int c0 = std::max(0, static_cast<int>(cx - hx));
        const int c1 = std::min(cols - 1, static_cast<int>(cx + hx));
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const double dy = (r + 0.5 - cy) / hy;
                const double dx = (c + 0.5 - cx) / hx;
                if (!ellipse || dx * dx + dy * dy <= 1.0) {
                    p(r, c) = level;
                }
            }
        }
    }
    // Soften edges slightly; real photographs are never perfectly sharp.
    p = gaussian_smooth(gaussian_smooth(p));
    return p;
}

Plane periodic_field(int rows, int cols, Rng& rng, Json& params)
{
    Plane p = power_law_noise(rows, cols, 2.0, rng);
    standardize(p);
    auto v = p.values();
    for (double& x : v) {
        x *= 0.4;
    }
    const int gratings = rng.between(1, 3);
    Json list = Json::array();
    for (int g = 0; g < gratings; ++g) {
        const double cycles = rng.uniform(6.0, 40.0);
        const double angle = rng.uniform(0.0, kPi);
        const double amp = rng.uniform(0.6, 1.2);
        list.push_back({{"cycles", cycles}, {"angle", angle}, {"amplitude", amp}});
        const double ky = 2.0 * kPi * cycles * std::sin(angle) / rows;
        const double kx = 2.0 * kPi * cycles * std::cos(angle) / cols;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                p(r, c) += amp * std::sin(ky * r + kx * c);
            }
        }
    }
    params["gratings"] = list;
    return p;
}

std::string image_name(std::size_t i) { return fmt::format("img_{:04d}", i); }

} // namespace

std::string_view to_string(ContentKind k)
{
    switch (k) {
    case ContentKind::gradient:
        return "gradient";
    case ContentKind::filtered_noise:
        return "filtered_noise";
    case ContentKind::shapes:
        return "shapes";
    case ContentKind::periodic:
        return "periodic";
    case ContentKind::ingested:
        return "ingested";
    }
    return "unknown";
}

ContentKind parse_content(std::string_view name)
{
    for (ContentKind k : {ContentKind::gradient, ContentKind::filtered_noise, ContentKind::shapes,
                          ContentKind::periodic, ContentKind::ingested}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidArgument("unknown content kind '" + std::string(name) + "'");
}

Json to_json(const SyntheticCorpusSpec& s)
{
    return {{"count", s.count},
            {"dst", {s.dst.rows, s.dst.cols}},
            {"ratios", s.ratios},
            {"min_side", s.min_side},
            {"max_side", s.max_side},
            {"anisotropic", s.anisotropic},
            {"mix",
             {{"gradient", s.weight_gradient},
              {"filtered_noise", s.weight_filtered_noise},
              {"shapes", s.weight_shapes},
              {"periodic", s.weight_periodic}}},
            {"mean", {s.min_mean, s.max_mean}},
            {"contrast", {s.min_contrast, s.max_contrast}},
            {"sensor_noise", s.sensor_noise},
            {"channels", s.channels},
            {"seed", s.seed}};
}

SyntheticCorpusSpec corpus_spec_from_json(const Json& j)
{
    SyntheticCorpusSpec s;
    s.count = j.value("count", s.count);
    if (j.contains("dst")) {
        s.dst = {j.at("dst").at(0).get<int>(), j.at("dst").at(1).get<int>()};
    }
    s.ratios = j.value("ratios", s.ratios);
    s.min_side = j.value("min_side", s.min_side);
    s.max_side = j.value("max_side", s.max_side);
    s.anisotropic = j.value("anisotropic", s.anisotropic);
    if (j.contains("mix")) {
        const Json& m = j.at("mix");
        s.weight_gradient = m.value("gradient", s.weight_gradient);
        s.weight_filtered_noise = m.value("filtered_noise", s.weight_filtered_noise);
        s.weight_shapes = m.value("shapes", s.weight_shapes);
        s.weight_periodic = m.value("periodic", s.weight_periodic);
    }
    if (j.contains("mean")) {
        s.min_mean = j.at("mean").at(0).get<double>();
        s.max_mean = j.at("mean").at(1).get<double>();
    }
    if (j.contains("contrast")) {
        s.min_contrast = j.at("contrast").at(0).get<double>();
        s.max_contrast = j.at("contrast").at(1).get<double>();
    }
    s.sensor_noise = j.value("sensor_noise", s.sensor_noise);
    s.channels = j.value("channels", s.channels);
    s.seed = j.value("seed", s.seed);
    return s;
}

Json to_json(const CorpusManifest& m)
{
    Json entries = Json::array();
    for (const CorpusEntry& e : m.entries) {
        entries.push_back({{"id", e.id},
                           {"file", e.file},
                           {"kind", std::string(to_string(e.kind))},
                           {"rows", e.rows},
                           {"cols", e.cols},
                           {"seed", e.seed},
                           {"params", e.params}});
    }
    return {{"entries", entries}};
}

CorpusManifest manifest_from_json(const Json& j)
{
    CorpusManifest m;
    for (const Json& e : j.at("entries")) {
        m.entries.push_back({e.at("id").get<std::string>(), e.at("file").get<std::string>(),
                             parse_content(e.at("kind").get<std::string>()), e.at("rows").get<int>(),
                             e.at("cols").get<int>(), e.at("seed").get<std::uint64_t>(),
                             e.value("params", Json::object())});
    }
    return m;
}

std::vector<ContentKind> plan_contents(const SyntheticCorpusSpec& spec)
{
    const std::array<ContentKind, 4> kinds{ContentKind::gradient, ContentKind::filtered_noise, ContentKind::shapes,
                                           ContentKind::periodic};
    const std::array<double, 4> weights{spec.weight_gradient, spec.weight_filtered_noise, spec.weight_shapes,
                                        spec.weight_periodic};
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0) || std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0.0; })) {
        throw InvalidArgument("content weights must be non-negative with a positive sum");
    }
    const int n = spec.count;
    std::array<int, 4> counts{};
    std::array<double, 4> remainder{};
    int assigned = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double exact = n * weights[k] / total;
        counts[k] = static_cast<int>(std::floor(exact));
        remainder[k] = exact - counts[k];
        assigned += counts[k];
    }
    while (assigned < n) {
        const auto k = static_cast<std::size_t>(std::max_element(remainder.begin(), remainder.end()) - remainder.begin());
        ++counts[k];
        remainder[k] = -1.0;
        ++assigned;
    }
    const int quota = static_cast<int>(std::ceil(kMinPeriodicShare * n));
    while (counts[3] < quota) {
        const auto k = static_cast<std::size_t>(std::max_element(counts.begin(), counts.begin() + 3) - counts.begin());
        --counts[k];
        ++counts[3];
    }
    std::vector<ContentKind> plan;
    for (std::size_t k = 0; k < 4; ++k) {
        plan.insert(plan.end(), static_cast<std::size_t>(counts[k]), kinds[k]);
    }
    Rng rng(mix_seed(spec.seed, 0xC0));
    for (std::size_t i = plan.size(); i > 1; --i) {
        std::swap(plan[i - 1], plan[rng.below(i)]);
    }
    return plan;
}

RasterImage synthesize(ContentKind kind, int rows, int cols, int channels, std::uint64_t seed,
                       const SyntheticCorpusSpec& spec, Json* params)
{
    if (channels != 1 && channels != 3) {
        throw InvalidArgument("channels must be 1 or 3");
    }
    Rng rng(seed);
    Json p = Json::object();
    Plane structure;
    switch (kind) {
    case ContentKind::gradient:
        structure = gradient_field(rows, cols, rng, p);
        break;
    case ContentKind::filtered_noise:
        structure = noise_field(rows, cols, rng, p);
        break;
    case ContentKind::shapes:
        structure = shapes_field(rows, cols, rng, p);
        break;
    case ContentKind::periodic:
        structure = periodic_field(rows, cols, rng, p);
        break;
    case ContentKind::ingested:
        throw InvalidArgument("ingested images cannot be synthesized");
    }
    standardize(structure);

    const double mean = rng.uniform(spec.min_mean, spec.max_mean);
    const double contrast = rng.uniform(spec.min_contrast, spec.max_contrast);
    const double noise = rng.uniform(0.0, spec.sensor_noise);
    p["mean"] = mean;
    p["contrast"] = contrast;
    p["noise"] = noise;

    std::vector<Plane> planes;
    for (int ch = 0; ch < channels; ++ch) {
        Plane out(rows, cols, mean);
        add_scaled(out, structure, contrast);
        if (channels == 3) {
            Plane chroma = power_law_noise(rows, cols, 3.0, rng);
            standardize(chroma);
            add_scaled(out, chroma, 0.25 * contrast);
            const double tint = rng.uniform(-15.0, 15.0);
            for (double& v : out.values()) {
                v += tint;
            }
        }
        for (double& v : out.values()) {
            v += noise * rng.normal();
        }
        planes.push_back(std::move(out));
    }
    if (params != nullptr) {
        *params = std::move(p);
    }
    return RasterImage::from_planes(planes);
}

CorpusManifest generate_corpus(const SyntheticCorpusSpec& spec, const fs::path& dir)
{
    if (spec.count < kMinCorpusCount) {
        throw InvalidArgument("synthetic corpus needs at least " + std::to_string(kMinCorpusCount) + " images");
    }
    if (spec.ratios.empty() && (spec.min_side <= std::max(spec.dst.rows, spec.dst.cols) || spec.max_side < spec.min_side)) {
        throw InvalidArgument("size range must lie strictly above the target dimensions");
    }
    for (double r : spec.ratios) {
        if (!(r > 1.0)) {
            throw InvalidArgument("every ratio must exceed 1");
        }
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create corpus directory " + dir.string() + ": " + ec.message());
    }

    const std::vector<ContentKind> plan = plan_contents(spec);
    Rng sizes(mix_seed(spec.seed, 0x51));
    CorpusManifest manifest;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        int rows = 0;
        int cols = 0;
        if (!spec.ratios.empty()) {
            const double br = spec.ratios[sizes.below(spec.ratios.size())];
            const double bc = spec.anisotropic ? spec.ratios[sizes.below(spec.ratios.size())] : br;
            rows = static_cast<int>(std::lround(br * spec.dst.rows));
            cols = static_cast<int>(std::lround(bc * spec.dst.cols));
        } else {
            rows = sizes.between(spec.min_side, spec.max_side);
            cols = spec.anisotropic ? sizes.between(spec.min_side, spec.max_side) : rows;
        }
        CorpusEntry e;
        e.id = image_name(i);
        e.file = e.id + ".png";
        e.kind = plan[i];
        e.rows = rows;
        e.cols = cols;
        e.seed = mix_seed(spec.seed, 0x1000 + i);
        const RasterImage img = synthesize(e.kind, rows, cols, spec.channels, e.seed, spec, &e.params);
        write_png_if_changed(dir / e.file, img);
        manifest.entries.push_back(std::move(e));
    }
    write_json(dir / "manifest.json", to_json(manifest));
    return manifest;
}

CorpusManifest ingest_directory(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw IoError("corpus directory " + dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& de : fs::directory_iterator(dir)) {
        std::string ext = de.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (de.is_regular_file()
            && (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".jpg" || ext == ".jpeg")) {
            files.push_back(de.path());
        }
    }
    std::sort(files.begin(), files.end());
    CorpusManifest m;
    for (const fs::path& f : files) {
        const RasterImage img = read_image(f);
        m.entries.push_back({f.stem().string(), f.filename().string(), ContentKind::ingested, img.height(),
                             img.width(), 0, Json::object()});
    }
    return m;
}

CorpusManifest load_manifest(const fs::path& dir) { return manifest_from_json(read_json(dir / "manifest.json")); }

RasterImage load_entry(const fs::path& dir, const CorpusEntry& e) { return read_image(dir / e.file); }

} // namespace scaleguard
