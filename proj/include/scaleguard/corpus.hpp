#pragma once

#include "scaleguard/image.hpp"
#include "scaleguard/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scaleguard {

enum class ContentKind { gradient, filtered_noise, shapes, periodic, ingested };

std::string_view to_string(ContentKind k);
ContentKind parse_content(std::string_view name);

struct SyntheticCorpusSpec {
    int count = 100;
    /// Output size of every planned downscale; source sides are multiples of it
    /// when `ratios` is non-empty, otherwise uniform in [min_side, max_side].
    Size2 dst{112, 112};
    std::vector<double> ratios{2.0, 3.0, 4.0};
    int min_side = 224;
    int max_side = 448;
    bool anisotropic = false; // draw the two axis ratios independently
    double weight_gradient = 0.25;
    double weight_filtered_noise = 0.3;
    double weight_shapes = 0.3;
    double weight_periodic = 0.15;
    double min_mean = 100.0;
    double max_mean = 155.0;
    double min_contrast = 12.0; // luminance standard deviation range
    double max_contrast = 24.0;
    double sensor_noise = 1.5;  // upper bound of the per-image noise sigma
    int channels = 3;
    std::uint64_t seed = 1;
};

inline constexpr int kMinCorpusCount = 40;
inline constexpr double kMinPeriodicShare = 0.10;

Json to_json(const SyntheticCorpusSpec& s);
SyntheticCorpusSpec corpus_spec_from_json(const Json& j);

struct CorpusEntry {
    std::string id;
    std::string file; // relative to the corpus directory
    ContentKind kind = ContentKind::gradient;
    int rows = 0;
    int cols = 0;
    std::uint64_t seed = 0;
    Json params = Json::object();
};

struct CorpusManifest {
    std::vector<CorpusEntry> entries;
};

Json to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const Json& j);

/// Content kind per index: largest-remainder allocation of the weights with
/// at least 10% periodic, shuffled by the seed.
std::vector<ContentKind> plan_contents(const SyntheticCorpusSpec& spec);

/// One image, determined by (kind, rows, cols, seed). `params` receives the
/// generator parameters drawn.
RasterImage synthesize(ContentKind kind, int rows, int cols, int channels, std::uint64_t seed,
                       const SyntheticCorpusSpec& spec, Json* params = nullptr);

/// Writes img_NNNN.png files and manifest.json into `dir`; existing
/// identical files are left untouched.
CorpusManifest generate_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& dir);

/// Manifest over the PNG/PNM/JPEG files of an existing directory, in name order.
CorpusManifest ingest_directory(const std::filesystem::path& dir);

CorpusManifest load_manifest(const std::filesystem::path& dir);

RasterImage load_entry(const std::filesystem::path& dir, const CorpusEntry& e);

} // namespace scaleguard
