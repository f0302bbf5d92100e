#pragma once

#include "scaleguard/adaptive.hpp"
#include "scaleguard/attack.hpp"
#include "scaleguard/calibrate.hpp"
#include "scaleguard/corpus.hpp"
#include "scaleguard/detectors.hpp"
#include "scaleguard/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace scaleguard {

struct DetectorRequest {
    std::string id;
    std::vector<Params> grid; // empty: the catalog grid
};

struct EnsembleRequest {
    std::string name;
    int best = 4; // members: the `best` detectors by validation accuracy
    VoteStrategy strategy = VoteStrategy::majority;
};

struct AdaptiveRequest {
    AdaptiveKind kind = AdaptiveKind::suppress;
    std::vector<double> parameters;
    std::vector<std::string> detectors;
    int window_half = 5; // suppression window; match the defense's peak-spectrum w
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path output = "run";
    std::optional<SyntheticCorpusSpec> synthetic = SyntheticCorpusSpec{};
    std::filesystem::path corpus_dir; // used when `synthetic` is empty
    Size2 dst{112, 112};              // ingested corpora only; synthetic corpora carry their own
    std::vector<Algorithm> algorithms{Algorithm::nearest};
    AttackConfig attack;
    /// Local scenario: craft the training attacks with this pattern instead.
    std::optional<BackdoorPattern> calibration_backdoor;
    int donor_attempts = 10;
    std::vector<DetectorRequest> detectors;
    std::vector<EnsembleRequest> ensembles;
    double target_fpr = 0.01;
    std::vector<std::uint64_t> split_seeds{1};
    std::vector<AdaptiveRequest> adaptive;
    bool save_adaptive_images = true;
    int threads = 0; // 0: hardware concurrency
    std::optional<std::filesystem::path> debug_dir;
};

/// Throws ConfigError on malformed input or unknown detector ids.
RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& cfg);
void validate_run_config(const RunConfig& cfg);

enum class Stage { corpus, attacks, scores, evaluate, adaptive, report };

std::string_view to_string(Stage s);

struct PipelineOptions {
    bool resume = false;
    Stage until = Stage::report;
    std::function<void(const std::string&)> log;
};

struct PipelineResult {
    Json report;             // empty until the report stage ran
    std::size_t computed = 0; // records and stage outputs actually (re)computed
};

/// Runs every stage up to `opts.until`. With `resume`, stages whose outputs
/// exist with a matching fingerprint are loaded instead of recomputed.
/// Record failures surface as StageError.
PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& opts = {});

/// Sample standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> v);

} // namespace scaleguard
